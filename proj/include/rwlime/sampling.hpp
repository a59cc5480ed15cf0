#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rwlime/segmentation.hpp"

namespace rwlime {

enum class Strategy { SparseK, LOO, FixedRandom };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct PerturbationMatrix {
  /// Row 0 is the all-present baseline; rows are perturbations, columns features.
  std::vector<Mask> rows;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::SparseK;

  std::size_t n_perturbations() const { return rows.empty() ? 0 : rows.size() - 1; }
  std::size_t n_features() const { return rows.empty() ? 0 : rows.front().size(); }
};

struct SparseKConfig {
  double k = 2.0;
  double c = 1.0;
  std::size_t m = 2;
  /// 0 means the default floor of M + 2.
  std::size_t min_budget_floor = 0;

  std::size_t floor() const { return min_budget_floor == 0 ? m + 2 : min_budget_floor; }
};

/// max(ceil(c * log2 k), floor).
std::size_t sparse_k_budget(const SparseKConfig& cfg);

/// Leave-one-out block followed by random multi-feature masks until the
/// budget is reached.
PerturbationMatrix sample_sparse_k(const SparseKConfig& cfg, std::uint64_t seed);

PerturbationMatrix sample_loo(std::size_t m);

PerturbationMatrix sample_fixed_random(std::size_t m, std::size_t n_pert, std::uint64_t seed);

/// Multiplier on sqrt(M) for the sparsity parameter.
enum class KRule { Sqrt, TwoSqrt, FourSqrt };
/// Budget-parameter rules from the sweep grid.
enum class CRule { MinM16k, M, MinM8k, HalfM, QuarterM, MinM4k };

struct GridConfig {
  KRule k_rule = KRule::TwoSqrt;
  CRule c_rule = CRule::M;

  /// e.g. "(4√M, min(M,8k))".
  std::string label() const;
  /// e.g. "(4\sqrt{M},\,\min(M,8k))".
  std::string latex_label() const;
  SparseKConfig resolve(std::size_t m) const;
};

double k_multiplier(KRule rule);
KRule k_rule_from_multiplier(double mult);
std::string to_string(CRule rule);
CRule c_rule_from_string(const std::string& s);

/// The 3 x 6 sweep grid, k-major in the order sqrt, 2sqrt, 4sqrt.
std::vector<GridConfig> sweep_rules();
/// The grid resolved for a concrete feature count.
std::vector<SparseKConfig> sweep_grid(std::size_t m);

/// Bounded uniform integer in [lo, hi] from a 64-bit engine, independent of
/// the standard library's distribution implementation.
std::uint64_t uniform_int(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi);

}  // namespace rwlime
