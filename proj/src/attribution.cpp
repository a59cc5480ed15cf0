#include "rwlime/attribution.hpp"

#include <algorithm>
#include <cmath>

#include "rwlime/error.hpp"
#include "rwlime/parallel.hpp"

namespace rwlime {
namespace {

constexpr double kSingularRcond = 1e-12;
constexpr double kResidualTol = 1e-8;

// Scores every row; results are stored by row index so completion order
// never matters.
std::vector<ScoreRecord> score_rows(ScoringBackend& backend, const AttributionInput& input,
                                    const OutputText& output, const PerturbationMatrix& pm) {
  std::vector<ScoreRecord> records(pm.rows.size());
  parallel_for(pm.rows.size(), backend.max_parallel(), [&](std::size_t j) {
    try {
      ScoreRequest req{j, &pm.rows[j], render_input(input, pm.rows[j]), &output};
      records[j] = score_teacher_forced(backend, req);
    } catch (const Error& e) {
      throw Error(e.code(), "perturbation " + std::to_string(j) + ": " + e.detail());
    }
  });
  return records;
}

}  // namespace

WlsSolution solve_wls(const RegressionProblem& problem) {
  const Eigen::Index rows = problem.design.rows();
  if (problem.targets.size() != rows || problem.weights.size() != rows) {
    throw Error(ErrorCode::LengthMismatch, "design, targets and weights need equal row counts");
  }
  if (problem.ridge < 0.0) throw Error(ErrorCode::InvalidConfig, "ridge must be non-negative");

  Eigen::MatrixXd x = problem.design;
  if (problem.fit_intercept) {
    x.resize(rows, problem.design.cols() + 1);
    x.col(0).setOnes();
    x.rightCols(problem.design.cols()) = problem.design;
  }
  const Eigen::Index p = x.cols();
  const Eigen::MatrixXd xtw = x.transpose() * problem.weights.asDiagonal();
  Eigen::MatrixXd gram = xtw * x;
  const Eigen::VectorXd rhs = xtw * problem.targets;

  WlsSolution sol;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  // rcond() alone misses exact rank loss: LDLT zeroes the pivot and carries on.
  const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
  const bool rank_deficient = p > 0 && pivots.minCoeff() <= kSingularRcond * pivots.maxCoeff();
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || rank_deficient || ldlt.rcond() < kSingularRcond) {
    const double shift = problem.ridge * gram.trace() / static_cast<double>(p);
    gram.diagonal().array() += shift > 0.0 ? shift : problem.ridge;
    ldlt.compute(gram);
    sol.ridge_applied = true;
  }
  Eigen::VectorXd beta = ldlt.solve(rhs);

  const double residual = (gram * beta - rhs).norm();
  const double scale = std::max(gram.norm() * beta.norm(), rhs.norm());
  if (ldlt.info() != Eigen::Success || !beta.allFinite() || residual > kResidualTol * scale) {
    throw Error(ErrorCode::SingularSystem, "normal equations could not be solved (residual " +
                                               std::to_string(residual) + ")");
  }
  if (problem.fit_intercept) {
    sol.intercept = beta(0);
    sol.coefficients = beta.tail(p - 1);
  } else {
    sol.coefficients = beta;
  }
  return sol;
}

NormalizedScores normalize_attributions(std::span<const double> coefficients) {
  NormalizedScores out;
  const std::size_t m = coefficients.size();
  if (m == 0) return out;
  double total = 0.0;
  for (double b : coefficients) total += std::abs(b);
  if (total < 1e-15) {
    out.scores.assign(m, 1.0 / static_cast<double>(m));
    out.degenerate = true;
    return out;
  }
  out.scores.reserve(m);
  for (double b : coefficients) out.scores.push_back(std::abs(b) / total);
  return out;
}

SparseKConfig resolve_sparse_k(const SamplingConfig& cfg, std::size_t m) {
  SparseKConfig sk = GridConfig{k_rule_from_multiplier(cfg.k_mult), cfg.c_rule}.resolve(m);
  if (cfg.k) sk.k = *cfg.k;
  if (cfg.c) sk.c = *cfg.c;
  return sk;
}

PerturbationMatrix build_perturbations(const SamplingConfig& cfg, std::size_t m, std::uint64_t seed) {
  switch (cfg.strategy) {
    case Strategy::SparseK: return sample_sparse_k(resolve_sparse_k(cfg, m), seed);
    case Strategy::LOO: return sample_loo(m);
    case Strategy::FixedRandom: return sample_fixed_random(m, cfg.fixed_budget, seed);
  }
  throw Error(ErrorCode::ConfigError, "unknown strategy");
}

std::string render_input(const AttributionInput& input, const Mask& mask) {
  return input.prompt_prefix + render_masked(*input.features, mask) + input.prompt_suffix;
}

AttributionResult attribute(const AttributionInput& input, ScoringBackend& backend,
                            const AttributionOptions& options, GenerationBackend* generator,
                            EmbeddingProvider* embeddings) {
  if (input.features == nullptr) throw Error(ErrorCode::InvalidParams, "no feature set supplied");
  const FeatureSet& fs = *input.features;
  const std::size_t m = fs.size();

  AttributionResult result;
  result.metadata.strategy = options.sampling.strategy;
  result.metadata.seed = options.seed;
  result.metadata.target = options.target;

  if (input.output) {
    result.output = *input.output;
  } else {
    if (generator == nullptr) {
      throw Error(ErrorCode::BackendUnavailable, "no fixed output and no generation backend");
    }
    result.output = make_output(generate_once(render_input(input, all_present(m)), *generator));
    result.metadata.generation_calls = 1;
  }

  if (m == 1) {
    result.coefficients = {0.0};
    result.scores = {1.0};
    return result;
  }

  if (options.sampling.strategy == Strategy::SparseK) {
    const auto sk = resolve_sparse_k(options.sampling, m);
    result.metadata.k = sk.k;
    result.metadata.c = sk.c;
  }
  const PerturbationMatrix pm = build_perturbations(options.sampling, m, options.seed);
  const std::size_t n = pm.rows.size();
  result.metadata.n_pert = pm.n_perturbations();

  std::vector<ScoreRecord> records = score_rows(backend, input, result.output, pm);
  result.metadata.scoring_calls = n;

  const DistanceEvaluator geometry(fs, options.geometry, embeddings);
  std::vector<double> distances(n - 1);
  for (std::size_t j = 1; j < n; ++j) {
    records[j].target = regression_target(records[0], records[j], options.target);
    records[j].distance = geometry.distance(pm.rows[j]);
    distances[j - 1] = records[j].distance;
  }
  const KernelWeights kw = kernel_weights(distances);
  result.metadata.sigma = kw.sigma;
  records[0].target = 0.0;
  records[0].distance = 0.0;
  records[0].weight = 1.0;
  for (std::size_t j = 1; j < n; ++j) records[j].weight = kw.weights[j - 1];

  RegressionProblem problem;
  problem.design.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  problem.targets.resize(static_cast<Eigen::Index>(n));
  problem.weights.resize(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const auto r = static_cast<Eigen::Index>(j);
    for (std::size_t i = 0; i < m; ++i) problem.design(r, static_cast<Eigen::Index>(i)) = pm.rows[j][i];
    problem.targets(r) = records[j].target;
    problem.weights(r) = records[j].weight;
  }
  problem.fit_intercept = options.fit_intercept;

  const WlsSolution sol = solve_wls(problem);
  result.coefficients.assign(sol.coefficients.data(), sol.coefficients.data() + sol.coefficients.size());
  result.intercept = sol.intercept;
  result.metadata.ridge_applied = sol.ridge_applied;

  NormalizedScores norm = normalize_attributions(result.coefficients);
  result.scores = std::move(norm.scores);
  result.metadata.degenerate = norm.degenerate;
  if (options.keep_records) result.records = std::move(records);
  return result;
}

}  // namespace rwlime
