#include "rwlime/pipeline.hpp"

#include <algorithm>

#include "rwlime/error.hpp"
#include "rwlime/parallel.hpp"

namespace rwlime {

BackendFactory synthetic_backend_factory(std::size_t max_parallel) {
  return [max_parallel](const Instance& inst) -> std::shared_ptr<ScoringBackend> {
    if (!inst.synthetic) {
      throw Error(ErrorCode::InvalidParams, "instance " + inst.id + " has no synthetic spec");
    }
    return std::make_shared<SyntheticBackend>(*inst.synthetic, max_parallel);
  };
}

AttributionInput make_attribution_input(const Instance& inst) {
  AttributionInput in;
  in.features = &inst.features;
  in.prompt_prefix = inst.prompt_prefix;
  in.prompt_suffix = inst.prompt_suffix;
  if (!inst.output.empty()) in.output = make_output(inst.output);
  return in;
}

std::uint64_t instance_seed(std::uint64_t run_seed, const std::string& instance_id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : instance_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = run_seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<InstanceAttribution> attribute_all(const std::vector<Instance>& instances,
                                               const BackendFactory& backends,
                                               const AttributionOptions& options, std::size_t parallel,
                                               AttributeHooks hooks) {
  std::vector<InstanceAttribution> out(instances.size());
  parallel_for(instances.size(), parallel, [&](std::size_t i) {
    const Instance& inst = instances[i];
    try {
      auto backend = backends(inst);
      AttributionOptions opts = options;
      opts.seed = instance_seed(options.seed, inst.id);
      out[i] = InstanceAttribution{
          inst.id, attribute(make_attribution_input(inst), *backend, opts, hooks.generator, hooks.embeddings)};
    } catch (const Error& e) {
      throw Error(e.code(), "instance " + inst.id + ": " + e.detail());
    }
  });
  return out;
}

Protocol default_protocol(const Instance& inst) {
  return inst.gold.source == GoldSource::AnnotatedWords ? Protocol::Top5 : Protocol::TopGoldCount;
}

std::vector<const SweepRow*> SweepBucket::ranked() const {
  std::vector<const SweepRow*> out;
  for (const auto& r : rows) out.push_back(&r);
  std::sort(out.begin(), out.end(), [](const SweepRow* a, const SweepRow* b) { return a->rank < b->rank; });
  return out;
}

SweepResult run_sweep(const std::vector<Instance>& instances, const BackendFactory& backends,
                      const AttributionOptions& base, std::size_t parallel, AttributeHooks hooks) {
  std::vector<std::size_t> counts;
  counts.reserve(instances.size());
  for (const auto& inst : instances) counts.push_back(inst.feature_count());
  const Bucketing bucketing = bucket_by_features(counts);

  SweepResult result;
  result.excluded = bucketing.excluded;
  for (const auto& label : bucket_labels()) {
    const auto& members = bucketing.members.at(label);
    if (members.empty()) continue;
    std::vector<Instance> subset;
    subset.reserve(members.size());
    for (auto idx : members) subset.push_back(instances[idx]);

    SweepBucket bucket;
    bucket.label = label;
    bucket.n_instances = subset.size();
    for (const auto& grid : sweep_rules()) {
      AttributionOptions opts = base;
      opts.sampling.strategy = Strategy::SparseK;
      opts.sampling.k_mult = k_multiplier(grid.k_rule);
      opts.sampling.c_rule = grid.c_rule;
      opts.sampling.k.reset();
      opts.sampling.c.reset();
      const auto attributions = attribute_all(subset, backends, opts, parallel, hooks);

      std::vector<InstanceMetrics> metrics;
      double calls = 0.0;
      for (std::size_t i = 0; i < subset.size(); ++i) {
        metrics.push_back(
            evaluate_instance(attributions[i].result.scores, subset[i].gold, default_protocol(subset[i])));
        calls += static_cast<double>(attributions[i].result.metadata.scoring_calls);
      }
      SweepRow row;
      row.config = grid;
      row.report = build_report(label, std::move(metrics));
      row.mean_scoring_calls = calls / static_cast<double>(subset.size());
      bucket.rows.push_back(std::move(row));
    }
    std::vector<std::size_t> order(bucket.rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return bucket.rows[a].report.f1.mean > bucket.rows[b].report.f1.mean;
    });
    for (std::size_t r = 0; r < order.size(); ++r) bucket.rows[order[r]].rank = r + 1;
    result.buckets.push_back(std::move(bucket));
  }
  return result;
}

}  // namespace rwlime
