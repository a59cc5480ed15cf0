#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rwlime/segmentation.hpp"

namespace rwlime {

enum class EmbeddingSource { HashStatic, BackendProvided };

struct GeometryConfig {
  std::size_t dim = 64;
  double rope_base = 10000.0;
  /// Weight on the phase term of the polar distance.
  double beta_polar = 1.0;
  double phase_resultant_tol = 1e-9;
  EmbeddingSource embedding_source = EmbeddingSource::HashStatic;

  void validate() const;
};

/// Token rows (T x d) plus the position each row is rotated by.
struct EmbeddingMatrix {
  Eigen::MatrixXd values;
  std::vector<std::size_t> positions;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(values.cols()); }
};

struct TokenPolar {
  std::vector<double> magnitudes;
  std::vector<double> phases;
};

struct PolarSpanEmbedding {
  std::vector<double> mean_magnitudes;
  std::vector<double> mean_phases;
  std::set<std::size_t> degenerate_dims;
};

/// Source of base (pre-rotation) token embeddings for BackendProvided mode.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  /// One row per token text, each of length `dim`.
  virtual Eigen::MatrixXd embed(const std::vector<std::string>& texts, std::size_t dim) = 0;
};

/// Deterministic unit-norm vector derived from a 64-bit FNV-1a hash of `text`.
Eigen::VectorXd hash_static_embedding(const std::string& text, std::size_t dim);

EmbeddingMatrix embed_tokens(std::span<const Token* const> tokens, const GeometryConfig& cfg,
                             EmbeddingProvider* provider = nullptr);
EmbeddingMatrix embed_tokens(const std::vector<Token>& tokens, const GeometryConfig& cfg,
                             EmbeddingProvider* provider = nullptr);

EmbeddingMatrix apply_rope(const EmbeddingMatrix& emb, const GeometryConfig& cfg);

TokenPolar to_polar(std::span<const double> row);

PolarSpanEmbedding aggregate_span(std::span<const TokenPolar> polars, const GeometryConfig& cfg);

/// Wraps an angle into (-pi, pi].
double wrap_phase(double angle);

double polar_distance(const PolarSpanEmbedding& a, const PolarSpanEmbedding& b,
                      const GeometryConfig& cfg);

/// Relaxed WMD with uniform atom weights: the max of the two one-sided
/// nearest-neighbour transport costs.
double rwmd(std::span<const PolarSpanEmbedding> a, std::span<const PolarSpanEmbedding> b,
            const GeometryConfig& cfg);

/// Span embeddings of every feature present under `mask`, with tokens
/// re-indexed contiguously after removal of masked features.
std::vector<PolarSpanEmbedding> span_embeddings(const FeatureSet& fs, const Mask& mask,
                                                const GeometryConfig& cfg,
                                                EmbeddingProvider* provider = nullptr);

double feature_distance(const FeatureSet& fs, const Mask& mask, const GeometryConfig& cfg,
                        EmbeddingProvider* provider = nullptr);

/// Caches base token embeddings and the unmasked span set for repeated
/// distance queries over the same FeatureSet.
class DistanceEvaluator {
 public:
  DistanceEvaluator(const FeatureSet& fs, GeometryConfig cfg, EmbeddingProvider* provider = nullptr);

  double distance(const Mask& mask) const;
  std::vector<PolarSpanEmbedding> spans(const Mask& mask) const;

 private:
  const FeatureSet& fs_;
  GeometryConfig cfg_;
  Eigen::MatrixXd base_;
  std::vector<PolarSpanEmbedding> full_;
};

struct KernelWeights {
  std::vector<double> weights;
  double sigma = 1.0;
};

/// Gaussian locality kernel exp(-d^2 / sigma^2) with sigma the median distance.
KernelWeights kernel_weights(std::span<const double> distances);

double median(std::vector<double> values);

}  // namespace rwlime
