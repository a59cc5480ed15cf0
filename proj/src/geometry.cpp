#include "rwlime/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>

#include "rwlime/error.hpp"

namespace rwlime {
namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform in (0, 1).
double open_unit(std::uint64_t& state) {
  return (static_cast<double>(splitmix64(state) >> 11) + 0.5) * 0x1.0p-53;
}

TokenPolar polar_of_row(const Eigen::MatrixXd& m, Eigen::Index row) {
  const auto half = static_cast<std::size_t>(m.cols() / 2);
  TokenPolar p;
  p.magnitudes.resize(half);
  p.phases.resize(half);
  for (std::size_t k = 0; k < half; ++k) {
    const double x = m(row, static_cast<Eigen::Index>(2 * k));
    const double y = m(row, static_cast<Eigen::Index>(2 * k + 1));
    p.magnitudes[k] = std::hypot(x, y);
    p.phases[k] = std::atan2(y, x);
  }
  return p;
}

// Rotated polar form of one base row at `position`; rotation only shifts the
// phase, so this avoids materializing the rotated row.
TokenPolar rotated_polar(const Eigen::MatrixXd& base, Eigen::Index row, std::size_t position,
                         const GeometryConfig& cfg) {
  TokenPolar p = polar_of_row(base, row);
  const double d = static_cast<double>(base.cols());
  for (std::size_t k = 0; k < p.phases.size(); ++k) {
    if (p.magnitudes[k] == 0.0) continue;
    const double omega = std::pow(cfg.rope_base, -2.0 * static_cast<double>(k) / d);
    p.phases[k] = wrap_phase(p.phases[k] + static_cast<double>(position) * omega);
  }
  return p;
}

Eigen::MatrixXd base_embeddings(std::span<const Token* const> tokens, const GeometryConfig& cfg,
                                EmbeddingProvider* provider) {
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  if (cfg.embedding_source == EmbeddingSource::BackendProvided) {
    if (provider == nullptr) {
      throw Error(ErrorCode::BackendUnavailable, "no embedding provider configured");
    }
    std::vector<std::string> texts;
    texts.reserve(tokens.size());
    for (const Token* t : tokens) texts.push_back(t->text);
    Eigen::MatrixXd m = provider->embed(texts, cfg.dim);
    if (m.rows() != static_cast<Eigen::Index>(tokens.size()) || m.cols() != d) {
      throw Error(ErrorCode::BackendUnavailable, "embedding provider returned wrong shape");
    }
    return m;
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(tokens.size()), d);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = hash_static_embedding(tokens[i]->text, cfg.dim);
  }
  return m;
}

}  // namespace

void GeometryConfig::validate() const {
  if (dim == 0 || dim % 2 != 0) {
    throw Error(ErrorCode::OddDimension, "embedding dimension must be even, got " + std::to_string(dim));
  }
  if (!(rope_base > 1.0)) throw Error(ErrorCode::InvalidConfig, "rope_base must exceed 1");
  if (!(beta_polar >= 0.0)) throw Error(ErrorCode::InvalidConfig, "beta_polar must be non-negative");
  if (!(phase_resultant_tol > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "phase_resultant_tol must be positive");
  }
}

Eigen::VectorXd hash_static_embedding(const std::string& text, std::size_t dim) {
  std::uint64_t state = fnv1a(text);
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
  // Box-Muller over splitmix64 draws; portable across standard libraries.
  for (std::size_t i = 0; i < dim; i += 2) {
    const double u1 = open_unit(state);
    const double u2 = open_unit(state);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    v(static_cast<Eigen::Index>(i)) = r * std::cos(t);
    if (i + 1 < dim) v(static_cast<Eigen::Index>(i + 1)) = r * std::sin(t);
  }
  return v / v.norm();
}

EmbeddingMatrix embed_tokens(std::span<const Token* const> tokens, const GeometryConfig& cfg,
                             EmbeddingProvider* provider) {
  cfg.validate();
  EmbeddingMatrix out;
  out.values = base_embeddings(tokens, cfg, provider);
  out.positions.reserve(tokens.size());
  for (const Token* t : tokens) out.positions.push_back(t->index);
  return out;
}

EmbeddingMatrix embed_tokens(const std::vector<Token>& tokens, const GeometryConfig& cfg,
                             EmbeddingProvider* provider) {
  std::vector<const Token*> ptrs;
  ptrs.reserve(tokens.size());
  for (const auto& t : tokens) ptrs.push_back(&t);
  return embed_tokens(std::span<const Token* const>(ptrs), cfg, provider);
}

EmbeddingMatrix apply_rope(const EmbeddingMatrix& emb, const GeometryConfig& cfg) {
  if (emb.values.cols() % 2 != 0) {
    throw Error(ErrorCode::OddDimension, "cannot rotate an odd-width embedding");
  }
  if (emb.positions.size() != emb.rows()) {
    throw Error(ErrorCode::LengthMismatch, "positions do not match embedding rows");
  }
  EmbeddingMatrix out = emb;
  const double d = static_cast<double>(emb.values.cols());
  for (Eigen::Index r = 0; r < emb.values.rows(); ++r) {
    const double p = static_cast<double>(emb.positions[static_cast<std::size_t>(r)]);
    for (Eigen::Index k = 0; k < emb.values.cols() / 2; ++k) {
      const double angle = p * std::pow(cfg.rope_base, -2.0 * static_cast<double>(k) / d);
      const double c = std::cos(angle);
      const double s = std::sin(angle);
      const double x = emb.values(r, 2 * k);
      const double y = emb.values(r, 2 * k + 1);
      out.values(r, 2 * k) = x * c - y * s;
      out.values(r, 2 * k + 1) = x * s + y * c;
    }
  }
  return out;
}

TokenPolar to_polar(std::span<const double> row) {
  if (row.size() % 2 != 0) throw Error(ErrorCode::OddDimension, "polar form needs an even width");
  TokenPolar p;
  p.magnitudes.resize(row.size() / 2);
  p.phases.resize(row.size() / 2);
  for (std::size_t k = 0; k < row.size() / 2; ++k) {
    p.magnitudes[k] = std::hypot(row[2 * k], row[2 * k + 1]);
    p.phases[k] = std::atan2(row[2 * k + 1], row[2 * k]);
  }
  return p;
}

PolarSpanEmbedding aggregate_span(std::span<const TokenPolar> polars, const GeometryConfig& cfg) {
  if (polars.empty()) throw Error(ErrorCode::EmptySpan, "cannot aggregate an empty span");
  const std::size_t half = polars.front().magnitudes.size();
  PolarSpanEmbedding out;
  out.mean_magnitudes.assign(half, 0.0);
  out.mean_phases.assign(half, 0.0);
  for (std::size_t k = 0; k < half; ++k) {
    double r_sum = 0.0;
    double c_sum = 0.0;
    double s_sum = 0.0;
    for (const auto& p : polars) {
      if (p.magnitudes.size() != half) {
        throw Error(ErrorCode::DimensionMismatch, "span tokens have different widths");
      }
      r_sum += p.magnitudes[k];
      c_sum += std::cos(p.phases[k]);
      s_sum += std::sin(p.phases[k]);
    }
    out.mean_magnitudes[k] = r_sum / static_cast<double>(polars.size());
    if (std::hypot(c_sum, s_sum) < cfg.phase_resultant_tol) {
      out.degenerate_dims.insert(k);
    } else {
      out.mean_phases[k] = std::atan2(s_sum, c_sum);
    }
  }
  return out;
}

double wrap_phase(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::remainder(angle, two_pi);
  if (w <= -std::numbers::pi) w += two_pi;
  return w;
}

double polar_distance(const PolarSpanEmbedding& a, const PolarSpanEmbedding& b,
                      const GeometryConfig& cfg) {
  if (a.mean_magnitudes.size() != b.mean_magnitudes.size() ||
      a.mean_phases.size() != b.mean_phases.size()) {
    throw Error(ErrorCode::DimensionMismatch, "span embeddings differ in width");
  }
  double mag = 0.0;
  double phase = 0.0;
  for (std::size_t k = 0; k < a.mean_magnitudes.size(); ++k) {
    const double dr = a.mean_magnitudes[k] - b.mean_magnitudes[k];
    const double dt = wrap_phase(a.mean_phases[k] - b.mean_phases[k]);
    mag += dr * dr;
    phase += dt * dt;
  }
  return std::sqrt(mag + cfg.beta_polar * phase);
}

double rwmd(std::span<const PolarSpanEmbedding> a, std::span<const PolarSpanEmbedding> b,
            const GeometryConfig& cfg) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySet, "RWMD needs two non-empty sets");
  std::vector<double> min_a(a.size(), std::numeric_limits<double>::infinity());
  std::vector<double> min_b(b.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = polar_distance(a[i], b[j], cfg);
      min_a[i] = std::min(min_a[i], d);
      min_b[j] = std::min(min_b[j], d);
    }
  }
  double ab = 0.0;
  for (double d : min_a) ab += d;
  double ba = 0.0;
  for (double d : min_b) ba += d;
  return std::max(ab / static_cast<double>(a.size()), ba / static_cast<double>(b.size()));
}

std::vector<PolarSpanEmbedding> span_embeddings(const FeatureSet& fs, const Mask& mask,
                                                const GeometryConfig& cfg,
                                                EmbeddingProvider* provider) {
  return DistanceEvaluator(fs, cfg, provider).spans(mask);
}

double feature_distance(const FeatureSet& fs, const Mask& mask, const GeometryConfig& cfg,
                        EmbeddingProvider* provider) {
  return DistanceEvaluator(fs, cfg, provider).distance(mask);
}

DistanceEvaluator::DistanceEvaluator(const FeatureSet& fs, GeometryConfig cfg,
                                     EmbeddingProvider* provider)
    : fs_(fs), cfg_(cfg) {
  cfg_.validate();
  std::vector<const Token*> ptrs;
  ptrs.reserve(fs.tokens.size());
  for (const auto& t : fs.tokens) ptrs.push_back(&t);
  base_ = base_embeddings(ptrs, cfg_, provider);
  full_ = spans(all_present(fs.size()));
}

std::vector<PolarSpanEmbedding> DistanceEvaluator::spans(const Mask& mask) const {
  if (mask.size() != fs_.size()) throw Error(ErrorCode::LengthMismatch, "mask length differs from M");
  std::vector<PolarSpanEmbedding> out;
  std::size_t position = 0;
  std::vector<TokenPolar> polars;
  for (const auto& f : fs_.features) {
    if (!mask[f.id]) continue;
    polars.clear();
    for (std::size_t t = f.token_begin; t < f.token_end; ++t) {
      polars.push_back(rotated_polar(base_, static_cast<Eigen::Index>(t), position++, cfg_));
    }
    out.push_back(aggregate_span(polars, cfg_));
  }
  return out;
}

double DistanceEvaluator::distance(const Mask& mask) const {
  if (std::none_of(mask.begin(), mask.end(), [](auto v) { return v != 0; })) {
    throw Error(ErrorCode::AllMasked, "every feature is masked");
  }
  const auto masked = spans(mask);
  return rwmd(full_, masked, cfg_);
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyList, "median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

KernelWeights kernel_weights(std::span<const double> distances) {
  KernelWeights out;
  if (distances.empty()) return out;
  out.sigma = median(std::vector<double>(distances.begin(), distances.end()));
  if (out.sigma < 1e-12) out.sigma = 1.0;
  out.weights.reserve(distances.size());
  for (double d : distances) out.weights.push_back(std::exp(-(d * d) / (out.sigma * out.sigma)));
  return out;
}

}  // namespace rwlime
