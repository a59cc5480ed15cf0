#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rwlime/geometry.hpp"
#include "rwlime/sampling.hpp"
#include "rwlime/scoring.hpp"
#include "rwlime/segmentation.hpp"

namespace rwlime {

struct RegressionProblem {
  /// Fit rows x feature columns.
  Eigen::MatrixXd design;
  Eigen::VectorXd targets;
  Eigen::VectorXd weights;
  /// Trace-scaled ridge used only when the Gram matrix is numerically singular.
  double ridge = 1e-8;
  /// Prepend a constant column; its coefficient is reported separately.
  bool fit_intercept = false;
};

struct WlsSolution {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  bool ridge_applied = false;
};

/// argmin || W^{1/2} (y - X b) ||^2 through the normal equations.
WlsSolution solve_wls(const RegressionProblem& problem);

struct NormalizedScores {
  std::vector<double> scores;
  bool degenerate = false;
};

/// a_i = |b_i| / sum_j |b_j|; uniform with the degenerate flag when the sum
/// is below 1e-15.
NormalizedScores normalize_attributions(std::span<const double> coefficients);

struct SamplingConfig {
  Strategy strategy = Strategy::SparseK;
  double k_mult = 2.0;
  CRule c_rule = CRule::M;
  /// Explicit Sparse-K parameters; override the multiplier rules when set.
  std::optional<double> k;
  std::optional<double> c;
  std::size_t fixed_budget = 60;
};

SparseKConfig resolve_sparse_k(const SamplingConfig& cfg, std::size_t m);
PerturbationMatrix build_perturbations(const SamplingConfig& cfg, std::size_t m, std::uint64_t seed);

struct AttributionOptions {
  SamplingConfig sampling;
  GeometryConfig geometry;
  TargetMode target = TargetMode::KL;
  std::uint64_t seed = 0;
  bool fit_intercept = true;
  bool keep_records = false;
};

struct AttributionInput {
  const FeatureSet* features = nullptr;
  /// Text around the rendered features in the scored input.
  std::string prompt_prefix;
  std::string prompt_suffix;
  /// Fixed output y; generated once through the generator when absent.
  std::optional<OutputText> output;
};

struct AttributionMetadata {
  Strategy strategy = Strategy::SparseK;
  std::uint64_t seed = 0;
  std::size_t n_pert = 0;
  TargetMode target = TargetMode::KL;
  double sigma = 1.0;
  double k = 0.0;
  double c = 0.0;
  std::size_t scoring_calls = 0;
  std::size_t generation_calls = 0;
  bool degenerate = false;
  bool ridge_applied = false;
};

struct AttributionResult {
  std::vector<double> coefficients;
  double intercept = 0.0;
  std::vector<double> scores;
  AttributionMetadata metadata;
  OutputText output;
  /// Per-perturbation records; filled when keep_records is set.
  std::vector<ScoreRecord> records;
};

std::string render_input(const AttributionInput& input, const Mask& mask);

/// Perturb, score, weight by RWMD locality, fit, normalize.
AttributionResult attribute(const AttributionInput& input, ScoringBackend& backend,
                            const AttributionOptions& options, GenerationBackend* generator = nullptr,
                            EmbeddingProvider* embeddings = nullptr);

}  // namespace rwlime
