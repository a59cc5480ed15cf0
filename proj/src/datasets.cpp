#include "rwlime/datasets.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "rwlime/error.hpp"
#include "rwlime/sampling.hpp"

namespace rwlime {
namespace {

using json = nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw Error(ErrorCode::MissingField, where + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, where + ": bad '" + key + "': " + e.what());
  }
}

std::string hotpot_suffix(const std::string& question) {
  return "\nQuestion: " + question + "\nAnswer:";
}

}  // namespace

std::string to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::HotpotQA: return "hotpotqa";
    case DatasetKind::AnnotatedMMLU: return "mmlu";
    case DatasetKind::Synthetic: return "synthetic";
  }
  return "synthetic";
}

DatasetKind dataset_kind_from_string(const std::string& s) {
  if (s == "hotpotqa") return DatasetKind::HotpotQA;
  if (s == "mmlu") return DatasetKind::AnnotatedMMLU;
  if (s == "synthetic" || s == "instances") return DatasetKind::Synthetic;
  throw Error(ErrorCode::ConfigError, "unknown dataset kind '" + s + "'");
}

void Instance::segment() {
  features = feature_kind == FeatureKind::Sentence ? segment_sentences(documents)
                                                   : segment_words(input_text);
}

LoadResult parse_hotpotqa(const std::string& json_text, std::size_t require_doc_count) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("HotpotQA JSON: ") + e.what());
  }
  if (!root.is_array()) throw Error(ErrorCode::ParseError, "HotpotQA file must hold a JSON array");

  LoadResult out;
  for (std::size_t n = 0; n < root.size(); ++n) {
    const json& ex = root[n];
    const std::string where = "example " + std::to_string(n);
    const json context = field<json>(ex, "context", where);
    if (!context.is_array()) throw Error(ErrorCode::ParseError, where + ": context is not an array");
    if (context.size() != require_doc_count) {
      ++out.filtered;
      continue;
    }

    Instance inst;
    inst.id = ex.contains("_id") ? ex["_id"].get<std::string>() : ("hotpot-" + std::to_string(n));
    inst.feature_kind = FeatureKind::Sentence;
    inst.question = field<std::string>(ex, "question", where);
    for (const auto& doc : context) {
      if (!doc.is_array() || doc.size() != 2) {
        throw Error(ErrorCode::ParseError, where + ": context entries are [title, sentences]");
      }
      inst.documents.push_back(
          Document{doc[0].get<std::string>(), doc[1].get<std::vector<std::string>>()});
    }
    if (ex.contains("answer")) inst.output = ex["answer"].get<std::string>();
    inst.output_mode = "gold_answer";
    inst.prompt_prefix = "Context: ";
    inst.prompt_suffix = hotpot_suffix(inst.question);
    inst.gold.source = GoldSource::SupportingFacts;
    inst.segment();

    std::map<std::pair<std::size_t, std::size_t>, std::size_t> by_origin;
    for (const auto& f : inst.features.features) by_origin[f.origin] = f.id;

    bool resolved = true;
    for (const auto& fact : field<json>(ex, "supporting_facts", where)) {
      const auto title = fact.at(0).get<std::string>();
      const auto sent = fact.at(1).get<std::size_t>();
      bool hit = false;
      for (std::size_t d = 0; d < inst.documents.size() && !hit; ++d) {
        if (inst.documents[d].title != title) continue;
        if (auto it = by_origin.find({d, sent}); it != by_origin.end()) {
          inst.gold.positive_ids.insert(it->second);
          hit = true;
        }
      }
      if (!hit) {
        out.warnings.push_back(inst.id + ": supporting fact (" + title + ", " + std::to_string(sent) +
                               ") does not resolve to a sentence; instance dropped");
        resolved = false;
        break;
      }
    }
    if (!resolved || inst.gold.positive_ids.empty()) {
      if (resolved) out.warnings.push_back(inst.id + ": no supporting facts; instance dropped");
      ++out.dropped;
      continue;
    }
    out.instances.push_back(std::move(inst));
  }
  return out;
}

LoadResult load_hotpotqa(const std::string& path, std::size_t require_doc_count) {
  return parse_hotpotqa(read_file(path), require_doc_count);
}

LoadResult load_annotated_mmlu(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  LoadResult out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, where + ": " + e.what());
    }
    Instance inst;
    inst.id = j.contains("id") ? j["id"].get<std::string>() : ("mmlu-" + std::to_string(lineno));
    inst.feature_kind = FeatureKind::Word;
    inst.input_text = field<std::string>(j, "query", where);
    if (j.contains("answer") && j["answer"].is_string()) {
      inst.output = j["answer"].get<std::string>();
      inst.output_mode = "supplied";
    }
    inst.gold.source = GoldSource::AnnotatedWords;
    inst.segment();
    for (auto idx : field<std::vector<long long>>(j, "gold_word_indices", where)) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= inst.feature_count()) {
        throw Error(ErrorCode::IndexOutOfRange, where + ": gold index " + std::to_string(idx) +
                                                    " outside " + std::to_string(inst.feature_count()) +
                                                    " words");
      }
      inst.gold.positive_ids.insert(static_cast<std::size_t>(idx));
    }
    if (inst.gold.positive_ids.size() != 5) {
      out.warnings.push_back(where + ": expected 5 gold words, found " +
                             std::to_string(inst.gold.positive_ids.size()));
    }
    if (inst.gold.positive_ids.empty()) {
      ++out.dropped;
      continue;
    }
    out.instances.push_back(std::move(inst));
  }
  return out;
}

std::vector<Instance> gen_synthetic(const SyntheticParams& p) {
  if (p.gold_size < 2 || p.gold_size >= p.m) {
    throw Error(ErrorCode::InvalidParams, "need 2 <= gold_size < M");
  }
  if (p.vocab_size < 2 || p.output_length == 0 || !(p.min_boost > 0.0) || p.max_boost < p.min_boost) {
    throw Error(ErrorCode::InvalidParams, "bad synthetic vocabulary, length or boost range");
  }
  static const char* syllables[] = {"ka", "lo", "mi", "su", "te", "ra", "no", "vi",
                                    "pe", "zu", "do", "fa", "gi", "ho", "be", "ny"};
  std::mt19937_64 rng(p.seed);
  auto boost = [&] {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return p.min_boost + u * (p.max_boost - p.min_boost);
  };

  std::vector<Instance> out;
  out.reserve(p.count);
  const int width = static_cast<int>(std::to_string(p.count).size());
  for (std::size_t n = 0; n < p.count; ++n) {
    Instance inst;
    std::string num = std::to_string(n);
    inst.id = "syn-" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num;
    inst.feature_kind = FeatureKind::Word;
    for (std::size_t w = 0; w < p.m; ++w) {
      std::string word;
      const auto len = uniform_int(rng, 2, 3);
      for (std::uint64_t s = 0; s < len; ++s) word += syllables[uniform_int(rng, 0, 15)];
      if (!inst.input_text.empty()) inst.input_text += ' ';
      inst.input_text += word;
    }

    std::vector<std::size_t> ids(p.m);
    std::iota(ids.begin(), ids.end(), 0);
    for (std::size_t i = 0; i < p.gold_size; ++i) {
      std::swap(ids[i], ids[static_cast<std::size_t>(uniform_int(rng, i, p.m - 1))]);
    }

    SyntheticSpec spec;
    spec.vocab_size = p.vocab_size;
    spec.num_features = p.m;
    for (std::size_t t = 0; t < p.output_length; ++t) {
      spec.output_tokens.push_back(static_cast<std::size_t>(uniform_int(rng, 0, p.vocab_size - 1)));
    }
    std::size_t first_marginal = 0;
    if (p.interaction) {
      spec.interaction_pairs.push_back(InteractionPair{ids[0], ids[1], boost()});
      first_marginal = 2;
    }
    for (std::size_t i = first_marginal; i < p.gold_size; ++i) spec.gold_feature_effects[ids[i]] = boost();

    inst.gold.source = GoldSource::Synthetic;
    inst.gold.positive_ids.insert(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(p.gold_size));
    inst.output = spec.output().text;
    inst.output_mode = "synthetic";
    inst.synthetic = std::move(spec);
    inst.segment();
    out.push_back(std::move(inst));
  }
  return out;
}

std::string instance_to_json(const Instance& inst) {
  json j;
  j["id"] = inst.id;
  j["feature_kind"] = inst.feature_kind == FeatureKind::Sentence ? "sentence" : "word";
  if (inst.feature_kind == FeatureKind::Sentence) {
    json docs = json::array();
    for (const auto& d : inst.documents) docs.push_back(json::array({d.title, d.sentences}));
    j["documents"] = docs;
  } else {
    j["input_text"] = inst.input_text;
  }
  if (!inst.question.empty()) j["question"] = inst.question;
  j["output"] = inst.output;
  j["output_mode"] = inst.output_mode;
  j["gold"] = {{"ids", std::vector<std::size_t>(inst.gold.positive_ids.begin(), inst.gold.positive_ids.end())},
               {"source", to_string(inst.gold.source)}};
  j["prompt_prefix"] = inst.prompt_prefix;
  j["prompt_suffix"] = inst.prompt_suffix;
  if (inst.synthetic) {
    const auto& s = *inst.synthetic;
    json effects = json::array();
    for (const auto& [id, g] : s.gold_feature_effects) effects.push_back(json::array({id, g}));
    json pairs = json::array();
    for (const auto& pr : s.interaction_pairs) pairs.push_back(json::array({pr.first, pr.second, pr.boost}));
    j["synthetic"] = {{"vocab_size", s.vocab_size},
                      {"num_features", s.num_features},
                      {"output_tokens", s.output_tokens},
                      {"gold_effects", effects},
                      {"interaction_pairs", pairs}};
  }
  return j.dump();
}

Instance instance_from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("instance line: ") + e.what());
  }
  Instance inst;
  try {
    inst.id = field<std::string>(j, "id", "instance");
    const std::string where = "instance " + inst.id;
    inst.feature_kind = field<std::string>(j, "feature_kind", where) == "sentence" ? FeatureKind::Sentence
                                                                                   : FeatureKind::Word;
    if (inst.feature_kind == FeatureKind::Sentence) {
      for (const auto& d : field<json>(j, "documents", where)) {
        inst.documents.push_back(Document{d.at(0).get<std::string>(), d.at(1).get<std::vector<std::string>>()});
      }
    } else {
      inst.input_text = field<std::string>(j, "input_text", where);
    }
    inst.question = j.value("question", "");
    inst.output = j.value("output", "");
    inst.output_mode = j.value("output_mode", "");
    inst.prompt_prefix = j.value("prompt_prefix", "");
    inst.prompt_suffix = j.value("prompt_suffix", "");
    const json gold = field<json>(j, "gold", where);
    for (auto id : gold.at("ids").get<std::vector<std::size_t>>()) inst.gold.positive_ids.insert(id);
    inst.gold.source = gold_source_from_string(gold.value("source", "synthetic"));
    if (j.contains("synthetic")) {
      const auto& s = j["synthetic"];
      SyntheticSpec spec;
      spec.vocab_size = s.at("vocab_size").get<std::size_t>();
      spec.num_features = s.value("num_features", std::size_t{0});
      spec.output_tokens = s.at("output_tokens").get<std::vector<std::size_t>>();
      for (const auto& e : s.at("gold_effects")) {
        spec.gold_feature_effects[e.at(0).get<std::size_t>()] = e.at(1).get<double>();
      }
      for (const auto& pr : s.at("interaction_pairs")) {
        spec.interaction_pairs.push_back(
            InteractionPair{pr.at(0).get<std::size_t>(), pr.at(1).get<std::size_t>(), pr.at(2).get<double>()});
      }
      spec.validate();
      inst.synthetic = std::move(spec);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("instance fields: ") + e.what());
  }
  inst.segment();
  inst.gold.validate(inst.feature_count());
  return inst;
}

void save_instances(const std::string& path, const std::vector<Instance>& instances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path);
  for (const auto& inst : instances) out << instance_to_json(inst) << '\n';
}

LoadResult load_instances(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  LoadResult out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.instances.push_back(instance_from_json(line));
  }
  return out;
}

LoadResult load_dataset(const std::string& path, DatasetKind kind, std::size_t require_doc_count) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::ConfigError, "dataset not found: " + path);
  switch (kind) {
    case DatasetKind::HotpotQA: return load_hotpotqa(path, require_doc_count);
    case DatasetKind::AnnotatedMMLU: return load_annotated_mmlu(path);
    case DatasetKind::Synthetic: return load_instances(path);
  }
  throw Error(ErrorCode::ConfigError, "unknown dataset kind");
}

}  // namespace rwlime
