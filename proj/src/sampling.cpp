#include "rwlime/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "rwlime/error.hpp"

namespace rwlime {
namespace {

constexpr int kMaxDuplicateRetries = 1000;

Mask loo_row(std::size_t m, std::size_t i) {
  Mask row(m, 1);
  row[i] = 0;
  return row;
}

// Masks `s` distinct features chosen by a partial Fisher-Yates shuffle.
Mask random_mask(std::mt19937_64& rng, std::size_t m, std::size_t s) {
  std::vector<std::size_t> ids(m);
  std::iota(ids.begin(), ids.end(), 0);
  for (std::size_t i = 0; i < s; ++i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, i, m - 1));
    std::swap(ids[i], ids[j]);
  }
  Mask row(m, 1);
  for (std::size_t i = 0; i < s; ++i) row[ids[i]] = 0;
  return row;
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::SparseK: return "sparse_k";
    case Strategy::LOO: return "loo";
    case Strategy::FixedRandom: return "fixed_random";
  }
  return "unknown";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "sparse_k") return Strategy::SparseK;
  if (s == "loo") return Strategy::LOO;
  if (s == "fixed_random") return Strategy::FixedRandom;
  throw Error(ErrorCode::ConfigError, "unknown strategy '" + s + "'");
}

std::uint64_t uniform_int(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi) {
  const std::uint64_t span = hi - lo;
  if (span == ~std::uint64_t{0}) return rng();
  const std::uint64_t range = span + 1;
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % range + 1) % range;
  std::uint64_t draw = rng();
  while (draw > limit) draw = rng();
  return lo + draw % range;
}

std::size_t sparse_k_budget(const SparseKConfig& cfg) {
  if (!(cfg.k > 1.0)) throw Error(ErrorCode::InvalidConfig, "Sparse-K needs k > 1");
  if (!(cfg.c > 0.0)) throw Error(ErrorCode::InvalidConfig, "Sparse-K needs c > 0");
  const double raw = std::ceil(cfg.c * std::log2(cfg.k));
  return std::max(static_cast<std::size_t>(raw), cfg.floor());
}

PerturbationMatrix sample_sparse_k(const SparseKConfig& cfg, std::uint64_t seed) {
  if (cfg.m < 2) throw Error(ErrorCode::InvalidConfig, "Sparse-K needs at least 2 features");
  const std::size_t budget = sparse_k_budget(cfg);
  const std::size_t m = cfg.m;

  PerturbationMatrix pm;
  pm.seed = seed;
  pm.strategy = Strategy::SparseK;
  pm.rows.reserve(budget + 1);
  pm.rows.push_back(all_present(m));
  for (std::size_t i = 0; i < m && pm.rows.size() <= budget; ++i) pm.rows.push_back(loo_row(m, i));

  // Random rows mask between s_min and s_max features; M = 2 leaves only single masks.
  const std::size_t s_min = std::min<std::size_t>(2, m - 1);
  const auto rounded_k = static_cast<std::size_t>(std::llround(cfg.k));
  const std::size_t s_max = std::max(s_min, std::min(rounded_k, m - 1));

  std::set<Mask> seen(pm.rows.begin(), pm.rows.end());
  std::mt19937_64 rng(seed);
  while (pm.rows.size() <= budget) {
    Mask row;
    for (int attempt = 0; attempt < kMaxDuplicateRetries; ++attempt) {
      const auto s = static_cast<std::size_t>(uniform_int(rng, s_min, s_max));
      row = random_mask(rng, m, s);
      if (!seen.contains(row)) break;
    }
    seen.insert(row);
    pm.rows.push_back(std::move(row));
  }
  return pm;
}

PerturbationMatrix sample_loo(std::size_t m) {
  if (m < 2) {
    throw Error(ErrorCode::DegenerateLOO, "leave-one-out over a single feature masks everything");
  }
  PerturbationMatrix pm;
  pm.strategy = Strategy::LOO;
  pm.rows.push_back(all_present(m));
  for (std::size_t i = 0; i < m; ++i) pm.rows.push_back(loo_row(m, i));
  return pm;
}

PerturbationMatrix sample_fixed_random(std::size_t m, std::size_t n_pert, std::uint64_t seed) {
  if (m < 2 || n_pert < 1) {
    throw Error(ErrorCode::InvalidConfig, "fixed-random sampling needs M >= 2 and N >= 1");
  }
  if (m < 64) {
    const std::uint64_t space = (std::uint64_t{1} << m) - 2;
    if (n_pert > space) {
      throw Error(ErrorCode::BudgetExceedsSpace,
                  std::to_string(n_pert) + " masks requested but only " + std::to_string(space) +
                      " distinct non-trivial masks exist");
    }
  }
  PerturbationMatrix pm;
  pm.seed = seed;
  pm.strategy = Strategy::FixedRandom;
  pm.rows.push_back(all_present(m));
  std::set<Mask> seen;
  std::mt19937_64 rng(seed);
  while (pm.rows.size() <= n_pert) {
    const auto s = static_cast<std::size_t>(uniform_int(rng, 1, m - 1));
    Mask row = random_mask(rng, m, s);
    if (seen.insert(row).second) pm.rows.push_back(std::move(row));
  }
  return pm;
}

double k_multiplier(KRule rule) {
  switch (rule) {
    case KRule::Sqrt: return 1.0;
    case KRule::TwoSqrt: return 2.0;
    case KRule::FourSqrt: return 4.0;
  }
  return 1.0;
}

KRule k_rule_from_multiplier(double mult) {
  if (mult == 1.0) return KRule::Sqrt;
  if (mult == 2.0) return KRule::TwoSqrt;
  if (mult == 4.0) return KRule::FourSqrt;
  throw Error(ErrorCode::ConfigError, "k multiplier must be 1, 2 or 4");
}

std::string to_string(CRule rule) {
  switch (rule) {
    case CRule::MinM16k: return "min(M,16k)";
    case CRule::M: return "M";
    case CRule::MinM8k: return "min(M,8k)";
    case CRule::HalfM: return "0.5M";
    case CRule::QuarterM: return "0.25M";
    case CRule::MinM4k: return "min(M,4k)";
  }
  return "?";
}

CRule c_rule_from_string(const std::string& s) {
  for (CRule r : {CRule::MinM16k, CRule::M, CRule::MinM8k, CRule::HalfM, CRule::QuarterM,
                  CRule::MinM4k}) {
    if (to_string(r) == s) return r;
  }
  throw Error(ErrorCode::ConfigError, "unknown c rule '" + s + "'");
}

std::string GridConfig::label() const {
  static const char* k_labels[] = {"√M", "2√M", "4√M"};
  return "(" + std::string(k_labels[static_cast<int>(k_rule)]) + ", " + to_string(c_rule) + ")";
}

std::string GridConfig::latex_label() const {
  static const char* k_labels[] = {"\\sqrt{M}", "2\\sqrt{M}", "4\\sqrt{M}"};
  std::string c;
  switch (c_rule) {
    case CRule::MinM16k: c = "\\min(M,16k)"; break;
    case CRule::M: c = "M"; break;
    case CRule::MinM8k: c = "\\min(M,8k)"; break;
    case CRule::HalfM: c = "0.5M"; break;
    case CRule::QuarterM: c = "0.25M"; break;
    case CRule::MinM4k: c = "\\min(M,4k)"; break;
  }
  return "(" + std::string(k_labels[static_cast<int>(k_rule)]) + ",\\," + c + ")";
}

SparseKConfig GridConfig::resolve(std::size_t m) const {
  const double md = static_cast<double>(m);
  SparseKConfig cfg;
  cfg.m = m;
  cfg.k = k_multiplier(k_rule) * std::sqrt(md);
  switch (c_rule) {
    case CRule::MinM16k: cfg.c = std::min(md, 16.0 * cfg.k); break;
    case CRule::M: cfg.c = md; break;
    case CRule::MinM8k: cfg.c = std::min(md, 8.0 * cfg.k); break;
    case CRule::HalfM: cfg.c = 0.5 * md; break;
    case CRule::QuarterM: cfg.c = 0.25 * md; break;
    case CRule::MinM4k: cfg.c = std::min(md, 4.0 * cfg.k); break;
  }
  return cfg;
}

std::vector<GridConfig> sweep_rules() {
  std::vector<GridConfig> out;
  for (KRule k : {KRule::Sqrt, KRule::TwoSqrt, KRule::FourSqrt}) {
    for (CRule c : {CRule::MinM16k, CRule::M, CRule::MinM8k, CRule::HalfM, CRule::QuarterM,
                    CRule::MinM4k}) {
      out.push_back(GridConfig{k, c});
    }
  }
  return out;
}

std::vector<SparseKConfig> sweep_grid(std::size_t m) {
  if (m < 2) throw Error(ErrorCode::InvalidConfig, "sweep grid needs M >= 2");
  std::vector<SparseKConfig> out;
  for (const auto& g : sweep_rules()) out.push_back(g.resolve(m));
  return out;
}

}  // namespace rwlime
