#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rwlime/attribution.hpp"
#include "rwlime/datasets.hpp"
#include "rwlime/evaluation.hpp"

namespace rwlime {

/// Builds the scoring backend for one instance (synthetic specs are per instance).
using BackendFactory = std::function<std::shared_ptr<ScoringBackend>(const Instance&)>;

/// Per-instance SyntheticBackend; throws InvalidParams for instances without a spec.
BackendFactory synthetic_backend_factory(std::size_t max_parallel = 1);

AttributionInput make_attribution_input(const Instance& inst);

/// Seed used for one instance: a mix of the run seed and the instance id.
std::uint64_t instance_seed(std::uint64_t run_seed, const std::string& instance_id);

struct InstanceAttribution {
  std::string id;
  AttributionResult result;
};

struct AttributeHooks {
  GenerationBackend* generator = nullptr;
  EmbeddingProvider* embeddings = nullptr;
};

/// Attributes every instance on `parallel` workers; results follow input order.
std::vector<InstanceAttribution> attribute_all(const std::vector<Instance>& instances,
                                               const BackendFactory& backends,
                                               const AttributionOptions& options, std::size_t parallel,
                                               AttributeHooks hooks = {});

Protocol default_protocol(const Instance& inst);

struct SweepRow {
  GridConfig config;
  std::size_t rank = 0;
  EvalReport report;
  double mean_scoring_calls = 0.0;
};

struct SweepBucket {
  std::string label;
  std::size_t n_instances = 0;
  /// Grid order (18 rows).
  std::vector<SweepRow> rows;

  /// Rows sorted by rank.
  std::vector<const SweepRow*> ranked() const;
};

struct SweepResult {
  std::vector<SweepBucket> buckets;
  std::size_t excluded = 0;
};

/// Every bucket x every grid config: attribute, evaluate, rank by mean F1
/// (descending, grid order breaks ties).
SweepResult run_sweep(const std::vector<Instance>& instances, const BackendFactory& backends,
                      const AttributionOptions& base, std::size_t parallel, AttributeHooks hooks = {});

}  // namespace rwlime
