#include "rwlime/app.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "rwlime/error.hpp"
#include "rwlime/pipeline.hpp"
#include "rwlime/report.hpp"

namespace rwlime {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::map<std::string, std::string> defaults() {
  return {
      {"dataset.kind", "synthetic"},
      {"dataset.require_doc_count", "10"},
      {"strategy", "sparse_k"},
      {"sparse_k.k_mult", "2"},
      {"sparse_k.c_rule", "M"},
      {"fixed_random.budget", "60"},
      {"target", "kl"},
      {"seed", "0"},
      {"out", "out"},
      {"parallel", "1"},
      {"geometry.dim", "64"},
      {"geometry.rope_base", "10000"},
      {"geometry.beta_polar", "1"},
      {"geometry.embedding_source", "hash_static"},
      {"backend.kind", "synthetic"},
      {"backend.top_k", "20"},
      {"backend.max_parallel", "1"},
      {"backend.timeout_ms", "60000"},
      {"backend.retries", "3"},
      {"generation.kind", "none"},
  };
}

// Reads a flat config object; nested objects are flattened with dots.
void load_config_file(const std::string& path, std::map<std::string, std::string>& flat) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, "config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  std::function<void(const json&, const std::string&)> walk = [&](const json& node, const std::string& prefix) {
    for (const auto& [key, value] : node.items()) {
      const std::string name = prefix.empty() ? key : prefix + "." + key;
      if (value.is_object()) {
        walk(value, name);
      } else if (value.is_string()) {
        flat[name] = value.get<std::string>();
      } else {
        flat[name] = value.dump();
      }
    }
  };
  walk(j, "");
}

double to_double(const std::map<std::string, std::string>& flat, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(flat.at(key), &used);
    if (used != flat.at(key).size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "'" + key + "' must be a number");
  }
}

std::uint64_t to_uint(const std::map<std::string, std::string>& flat, const std::string& key) {
  const std::string& s = flat.at(key);
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw Error(ErrorCode::ConfigError, "'" + key + "' must be a non-negative integer");
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "'" + key + "' is out of range");
  }
}

bool has(const std::map<std::string, std::string>& flat, const std::string& key) {
  auto it = flat.find(key);
  return it != flat.end() && !it->second.empty();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
  out << content;
}

LoadResult load_for(const RunConfig& cfg, std::ostream& err) {
  if (cfg.dataset_path.empty()) throw Error(ErrorCode::ConfigError, "no dataset path given (--dataset)");
  if (!fs::exists(cfg.dataset_path)) {
    throw Error(ErrorCode::ConfigError, "dataset path does not exist: " + cfg.dataset_path);
  }
  LoadResult data = load_dataset(cfg.dataset_path, cfg.dataset_kind, cfg.require_doc_count);
  for (const auto& w : data.warnings) err << "warning: " << w << '\n';
  return data;
}

BackendFactory make_backend_factory(const RunConfig& cfg) {
  if (cfg.backend.kind == BackendKind::SyntheticMock) return synthetic_backend_factory(cfg.backend.max_parallel);
  std::shared_ptr<HttpTransport> transport;
  if (!cfg.backend_fixture.empty()) {
    transport = std::make_shared<ReplayTransport>(cfg.backend_fixture);
  } else {
    transport = make_http_transport(cfg.backend);
  }
  auto backend = std::make_shared<HttpLogprobBackend>(cfg.backend, transport);
  return [backend](const Instance&) -> std::shared_ptr<ScoringBackend> { return backend; };
}

// Owns the optional generation and embedding backends for one command.
struct Hooks {
  std::unique_ptr<GenerationBackend> inner;
  std::unique_ptr<CachedGenerator> cached;
  std::unique_ptr<EmbeddingProvider> embeddings;

  AttributeHooks view() const { return AttributeHooks{cached.get(), embeddings.get()}; }
};

Hooks make_hooks(const RunConfig& cfg) {
  Hooks h;
  std::shared_ptr<HttpTransport> transport;
  auto http = [&] {
    if (!transport) {
      transport = cfg.backend_fixture.empty() ? std::shared_ptr<HttpTransport>(make_http_transport(cfg.backend))
                                              : std::make_shared<ReplayTransport>(cfg.backend_fixture);
    }
    return transport;
  };
  if (cfg.generation == "echo") {
    h.inner = std::make_unique<EchoGenerator>();
  } else if (cfg.generation == "http") {
    h.inner = std::make_unique<HttpChatGenerator>(cfg.backend, http());
  }
  if (h.inner) h.cached = std::make_unique<CachedGenerator>(*h.inner);
  if (cfg.attribution.geometry.embedding_source == EmbeddingSource::BackendProvided) {
    h.embeddings = std::make_unique<HttpEmbeddingProvider>(cfg.backend, http());
  }
  return h;
}

json flat_json(const std::map<std::string, std::string>& flat) {
  json j = json::object();
  for (const auto& [k, v] : flat) j[k] = v;
  return j;
}

std::string attribution_record(const Instance& inst, const AttributionResult& r, const RunConfig& cfg) {
  json features = json::array();
  for (const auto& f : inst.features.features) features.push_back(f.source_text);
  const auto& m = r.metadata;
  json meta = {{"strategy", to_string(m.strategy)},
               {"seed", m.seed},
               {"n_pert", m.n_pert},
               {"target", to_string(m.target)},
               {"sigma", m.sigma},
               {"scoring_calls", m.scoring_calls},
               {"generation_calls", m.generation_calls},
               {"degenerate", m.degenerate},
               {"ridge_applied", m.ridge_applied},
               {"output_mode", m.generation_calls > 0 ? std::string("generated") : inst.output_mode},
               {"config", flat_json(cfg.flat)}};
  if (m.strategy == Strategy::SparseK) {
    meta["k"] = m.k;
    meta["c"] = m.c;
  }
  json rec = {{"id", inst.id},
              {"features", features},
              {"scores", r.scores},
              {"coefficients", r.coefficients},
              {"intercept", r.intercept},
              {"output", r.output.text},
              {"metadata", meta}};
  return rec.dump();
}

int cmd_attribute(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  LoadResult data = load_for(cfg, err);
  auto backends = make_backend_factory(cfg);
  Hooks hooks = make_hooks(cfg);
  auto results = attribute_all(data.instances, backends, cfg.attribution, cfg.parallel, hooks.view());

  std::vector<std::size_t> order(data.instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return data.instances[a].id < data.instances[b].id; });

  std::string body;
  std::size_t total_calls = 0;
  for (auto i : order) {
    const auto& r = results[i].result;
    body += attribution_record(data.instances[i], r, cfg) + '\n';
    total_calls += r.metadata.scoring_calls;
    err << "instance " << data.instances[i].id << ": M=" << data.instances[i].feature_count()
        << " n_pert=" << r.metadata.n_pert << " scoring_calls=" << r.metadata.scoring_calls << '\n';
  }
  const fs::path path = fs::path(cfg.out_dir) / "attributions.jsonl";
  write_file(path, body);
  out << "attributed " << data.instances.size() << " instances (" << total_calls << " scoring calls";
  if (hooks.cached) out << ", " << hooks.cached->calls() << " generation calls";
  out << ") -> " << path.string() << '\n';
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  LoadResult data = load_for(cfg, err);
  const std::string attr_path = cfg.attributions_path.empty()
                                    ? (fs::path(cfg.out_dir) / "attributions.jsonl").string()
                                    : cfg.attributions_path;
  std::ifstream in(attr_path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read attributions " + attr_path);
  std::map<std::string, std::vector<double>> scores;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      scores[j.at("id").get<std::string>()] = j.at("scores").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, attr_path + ": " + e.what());
    }
  }

  std::vector<std::pair<const Instance*, const std::vector<double>*>> matched;
  for (const auto& inst : data.instances) {
    auto it = scores.find(inst.id);
    if (it == scores.end()) continue;
    if (it->second.size() != inst.feature_count()) {
      throw Error(ErrorCode::IdMismatch, "instance " + inst.id + " has " + std::to_string(inst.feature_count()) +
                                             " features but " + std::to_string(it->second.size()) + " scores");
    }
    matched.emplace_back(&inst, &it->second);
  }
  if (matched.empty()) throw Error(ErrorCode::IdMismatch, "no instance ids shared by dataset and attributions");
  if (matched.size() < data.instances.size() || matched.size() < scores.size()) {
    err << "warning: evaluating " << matched.size() << " of " << data.instances.size() << " dataset instances and "
        << scores.size() << " attributions\n";
  }

  std::vector<InstanceMetrics> all;
  std::map<std::string, std::vector<InstanceMetrics>> by_bucket;
  std::size_t excluded = 0;
  for (const auto& [inst, sc] : matched) {
    const Protocol protocol = cfg.protocol.empty() ? default_protocol(*inst) : protocol_from_string(cfg.protocol);
    InstanceMetrics m = evaluate_instance(*sc, inst->gold, protocol);
    all.push_back(m);
    if (auto b = bucket_for(inst->feature_count())) {
      by_bucket[*b].push_back(m);
    } else {
      ++excluded;
    }
  }
  if (excluded > 0) err << "warning: " << excluded << " instances below 2 features left out of buckets\n";

  std::vector<EvalReport> reports;
  reports.push_back(build_report("all", all));
  for (const auto& label : bucket_labels()) {
    if (auto it = by_bucket.find(label); it != by_bucket.end()) reports.push_back(build_report(label, it->second));
  }

  std::string text;
  for (const auto& r : reports) {
    if (!text.empty()) text += '\n';
    const std::string title = r.bucket == "all" ? "All instances (N=" + std::to_string(r.per_instance.size()) + ")"
                                                : "Feature size M=(" + r.bucket + "), N=" +
                                                      std::to_string(r.per_instance.size());
    text += format_summary_table(r, title);
  }
  const fs::path dir(cfg.out_dir);
  write_file(dir / "report.txt", text);
  write_file(dir / "report.json", report_json(reports));
  std::vector<EvalReport> buckets(reports.begin() + 1, reports.end());
  write_file(dir / "report.svg", svg_bar_plot(buckets.empty() ? reports : buckets, "Metric means per bucket"));
  out << text;
  return 0;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  LoadResult data = load_for(cfg, err);
  auto backends = make_backend_factory(cfg);
  Hooks hooks = make_hooks(cfg);
  const SweepResult sweep = run_sweep(data.instances, backends, cfg.attribution, cfg.parallel, hooks.view());
  if (sweep.excluded > 0) err << "warning: " << sweep.excluded << " instances below 2 features excluded\n";

  std::string tables;
  for (const auto& b : sweep.buckets) {
    if (!tables.empty()) tables += '\n';
    tables += format_sweep_table(b);
  }
  if (!sweep.buckets.empty()) tables += "\nBest configuration per bucket\n" + format_best_configs(sweep);
  const fs::path dir(cfg.out_dir);
  write_file(dir / "sweep_tables.txt", tables);
  write_file(dir / "sweep_full.csv", sweep_csv(sweep));
  write_file(dir / "sweep.json", sweep_json(sweep));
  out << tables;
  return 0;
}

}  // namespace

RunConfig resolve_config(const std::map<std::string, std::string>& flat_in) {
  std::map<std::string, std::string> flat = defaults();
  for (const auto& [k, v] : flat_in) flat[k] = v;

  RunConfig cfg;
  cfg.flat = flat;
  if (has(flat, "dataset.path")) cfg.dataset_path = flat.at("dataset.path");
  cfg.dataset_kind = dataset_kind_from_string(flat.at("dataset.kind"));
  cfg.require_doc_count = to_uint(flat, "dataset.require_doc_count");

  auto& a = cfg.attribution;
  a.sampling.strategy = strategy_from_string(flat.at("strategy"));
  a.sampling.k_mult = to_double(flat, "sparse_k.k_mult");
  k_rule_from_multiplier(a.sampling.k_mult);
  a.sampling.c_rule = c_rule_from_string(flat.at("sparse_k.c_rule"));
  if (has(flat, "sparse_k.k")) a.sampling.k = to_double(flat, "sparse_k.k");
  if (has(flat, "sparse_k.c")) a.sampling.c = to_double(flat, "sparse_k.c");
  a.sampling.fixed_budget = to_uint(flat, "fixed_random.budget");
  a.target = target_mode_from_string(flat.at("target"));
  a.seed = to_uint(flat, "seed");

  a.geometry.dim = to_uint(flat, "geometry.dim");
  a.geometry.rope_base = to_double(flat, "geometry.rope_base");
  a.geometry.beta_polar = to_double(flat, "geometry.beta_polar");
  const std::string& src = flat.at("geometry.embedding_source");
  if (src == "hash_static") {
    a.geometry.embedding_source = EmbeddingSource::HashStatic;
  } else if (src == "backend") {
    a.geometry.embedding_source = EmbeddingSource::BackendProvided;
  } else {
    throw Error(ErrorCode::ConfigError, "geometry.embedding_source must be hash_static or backend");
  }
  try {
    a.geometry.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.detail());
  }

  const std::string& kind = flat.at("backend.kind");
  if (kind == "synthetic") {
    cfg.backend.kind = BackendKind::SyntheticMock;
  } else if (kind == "http") {
    cfg.backend.kind = BackendKind::HttpLogprob;
  } else {
    throw Error(ErrorCode::ConfigError, "backend.kind must be synthetic or http");
  }
  if (has(flat, "backend.endpoint")) cfg.backend.endpoint_url = flat.at("backend.endpoint");
  if (has(flat, "backend.model")) cfg.backend.model = flat.at("backend.model");
  if (has(flat, "backend.fixture")) cfg.backend_fixture = flat.at("backend.fixture");
  cfg.backend.top_k_logprobs = to_uint(flat, "backend.top_k");
  cfg.backend.max_parallel = to_uint(flat, "backend.max_parallel");
  cfg.backend.timeout_ms = static_cast<int>(to_uint(flat, "backend.timeout_ms"));
  cfg.backend.retries = static_cast<int>(to_uint(flat, "backend.retries"));
  if (cfg.backend.max_parallel < 1) throw Error(ErrorCode::ConfigError, "backend.max_parallel must be >= 1");
  if (cfg.backend.kind == BackendKind::HttpLogprob && cfg.backend.endpoint_url.empty() &&
      cfg.backend_fixture.empty()) {
    throw Error(ErrorCode::ConfigError, "http backend needs backend.endpoint (--endpoint)");
  }
  cfg.backend.load_token_from_env();

  cfg.generation = flat.at("generation.kind");
  if (cfg.generation != "none" && cfg.generation != "echo" && cfg.generation != "http") {
    throw Error(ErrorCode::ConfigError, "generation.kind must be none, echo or http");
  }
  cfg.out_dir = flat.at("out");
  cfg.parallel = to_uint(flat, "parallel");
  if (cfg.parallel < 1) throw Error(ErrorCode::ConfigError, "parallel must be >= 1");
  if (has(flat, "attributions")) cfg.attributions_path = flat.at("attributions");
  if (has(flat, "protocol")) {
    cfg.protocol = flat.at("protocol");
    protocol_from_string(cfg.protocol);
  }
  // The token never lands in output metadata.
  cfg.flat.erase("backend.token");
  return cfg;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Perturbation-based feature attribution with RWMD locality weighting"};
  app.require_subcommand(1);

  std::map<std::string, std::string> overrides;
  std::string config_path;

  // Flags shared by the dataset-driven commands map onto config keys.
  struct FlagSpec {
    const char* flag;
    const char* key;
    const char* help;
  };
  const std::vector<FlagSpec> common = {
      {"--dataset", "dataset.path", "dataset file"},
      {"--dataset-kind", "dataset.kind", "hotpotqa | mmlu | synthetic"},
      {"--strategy", "strategy", "sparse_k | loo | fixed_random"},
      {"--k-mult", "sparse_k.k_mult", "Sparse-K k = mult * sqrt(M), mult in {1,2,4}"},
      {"--c-rule", "sparse_k.c_rule", "min(M,16k) | M | min(M,8k) | 0.5M | 0.25M | min(M,4k)"},
      {"--target", "target", "kl | delta_nll"},
      {"--seed", "seed", "run seed"},
      {"--out", "out", "output directory"},
      {"--parallel", "parallel", "instance-level worker count"},
      {"--backend", "backend.kind", "synthetic | http"},
      {"--endpoint", "backend.endpoint", "OpenAI-compatible base URL, e.g. http://localhost:8000/v1"},
      {"--model", "backend.model", "model name sent to the HTTP backend"},
      {"--fixture", "backend.fixture", "replay HTTP responses from a JSONL fixture"},
      {"--generation", "generation.kind", "none | echo | http"},
  };
  std::map<std::string, std::string> values;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat JSON config file");
    for (const auto& f : common) sub->add_option(f.flag, values[f.key], f.help);
  };

  auto* attribute = app.add_subcommand("attribute", "attribute every dataset instance");
  add_common(attribute);
  auto* evaluate = app.add_subcommand("evaluate", "score attributions against gold labels");
  add_common(evaluate);
  evaluate->add_option("--attributions", values["attributions"], "attribution JSONL (default <out>/attributions.jsonl)");
  evaluate->add_option("--protocol", values["protocol"], "top_gold_count | top5 (default per dataset)");
  auto* sweep = app.add_subcommand("sweep", "run the Sparse-K (k, c) grid per feature-count bucket");
  add_common(sweep);

  SyntheticParams syn;
  std::string syn_out;
  auto* gen = app.add_subcommand("gen-synthetic", "write a planted-ground-truth dataset");
  gen->add_option("--m", syn.m, "features per instance")->required();
  gen->add_option("--gold-size", syn.gold_size, "gold features per instance");
  gen->add_flag("--interaction", syn.interaction, "plant one pair that is invisible to single masks");
  gen->add_option("--count", syn.count, "number of instances");
  gen->add_option("--seed", syn.seed, "generator seed");
  gen->add_option("--vocab", syn.vocab_size, "synthetic vocabulary size");
  gen->add_option("--output-length", syn.output_length, "output tokens per instance");
  gen->add_option("--out", syn_out, "output JSONL path")->required();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
      err << sub->help();
    }
    return 2;
  }

  try {
    if (gen->parsed()) {
      save_instances(syn_out, gen_synthetic(syn));
      out << "wrote " << syn.count << " synthetic instances -> " << syn_out << '\n';
      return 0;
    }
    std::map<std::string, std::string> flat;
    if (!config_path.empty()) load_config_file(config_path, flat);
    for (const auto& [k, v] : values) {
      if (!v.empty()) flat[k] = v;
    }
    const RunConfig cfg = resolve_config(flat);
    if (attribute->parsed()) return cmd_attribute(cfg, out, err);
    if (evaluate->parsed()) return cmd_evaluate(cfg, out, err);
    if (sweep->parsed()) return cmd_sweep(cfg, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace rwlime
