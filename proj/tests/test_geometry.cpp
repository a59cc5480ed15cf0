#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "oracles.hpp"
#include "rwlime/error.hpp"
#include "rwlime/geometry.hpp"

using namespace rwlime;
using std::numbers::pi;

namespace {

PolarSpanEmbedding span(std::vector<double> r, std::vector<double> th) {
  PolarSpanEmbedding s;
  s.mean_magnitudes = std::move(r);
  s.mean_phases = std::move(th);
  return s;
}

TokenPolar tp(std::vector<double> r, std::vector<double> th) { return TokenPolar{std::move(r), std::move(th)}; }

}  // namespace

TEST(HashEmbedding, DeterministicAndUnitNorm) {
  const auto a = hash_static_embedding("token", 64);
  const auto b = hash_static_embedding("token", 64);
  EXPECT_EQ(a, b);
  EXPECT_NEAR(a.norm(), 1.0, 1e-12);
}

TEST(HashEmbedding, SameTextSameBaseRowAtDifferentPositions) {
  const std::vector<Token> toks = {{"the", 0, 0, 3}, {"cat", 1, 4, 7}, {"the", 2, 8, 11}};
  const auto emb = embed_tokens(toks, GeometryConfig{});
  EXPECT_EQ(emb.values.row(0), emb.values.row(2));
  EXPECT_NE(emb.values.row(0), emb.values.row(1));
}

TEST(HashEmbedding, NoCollisionsOnTenThousandWords) {
  std::set<std::vector<double>> seen;
  for (int i = 0; i < 10000; ++i) {
    const auto v = hash_static_embedding("w" + std::to_string(i), 8);
    seen.insert(std::vector<double>(v.data(), v.data() + v.size()));
  }
  EXPECT_EQ(seen.size(), 10000u);
}

TEST(Rope, PositionZeroUnchanged) {
  EmbeddingMatrix e{Eigen::MatrixXd::Random(3, 8), {0, 0, 0}};
  EXPECT_EQ(apply_rope(e, GeometryConfig{}).values, e.values);
}

TEST(Rope, TwoDimensionalUnitVector) {
  EmbeddingMatrix e{Eigen::MatrixXd(1, 2), {1}};
  e.values << 1.0, 0.0;
  const auto r = apply_rope(e, GeometryConfig{});
  EXPECT_NEAR(r.values(0, 0), 0.54030, 1e-5);
  EXPECT_NEAR(r.values(0, 1), 0.84147, 1e-5);
  EXPECT_NEAR(r.values(0, 0), std::cos(1.0), 1e-15);
}

TEST(Rope, ZeroRowStaysZero) {
  EmbeddingMatrix e{Eigen::MatrixXd::Zero(1, 6), {42}};
  EXPECT_EQ(apply_rope(e, GeometryConfig{}).values, e.values);
}

TEST(Rope, OddDimensionThrows) {
  EmbeddingMatrix e{Eigen::MatrixXd::Zero(1, 3), {0}};
  try {
    apply_rope(e, GeometryConfig{});
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::OddDimension);
  }
}

TEST(Rope, RotationPreservesPairNorms) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  EmbeddingMatrix e{Eigen::MatrixXd(5, 16), {0, 3, 17, 250, 9999}};
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 16; ++c) e.values(r, c) = g(rng);
  const auto rot = apply_rope(e, GeometryConfig{});
  for (int r = 0; r < 5; ++r) {
    for (int k = 0; k < 8; ++k) {
      EXPECT_NEAR(std::hypot(rot.values(r, 2 * k), rot.values(r, 2 * k + 1)),
                  std::hypot(e.values(r, 2 * k), e.values(r, 2 * k + 1)), 1e-12);
    }
  }
}

TEST(Polar, Examples) {
  const double row[] = {1, 0, 0, 2, -1, -1, 0, 0};
  const auto p = to_polar(row);
  EXPECT_DOUBLE_EQ(p.magnitudes[0], 1.0);
  EXPECT_DOUBLE_EQ(p.phases[0], 0.0);
  EXPECT_DOUBLE_EQ(p.magnitudes[1], 2.0);
  EXPECT_DOUBLE_EQ(p.phases[1], pi / 2);
  EXPECT_DOUBLE_EQ(p.magnitudes[2], std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(p.phases[2], -3 * pi / 4);
  EXPECT_EQ(p.magnitudes[3], 0.0);
  EXPECT_EQ(p.phases[3], 0.0);
}

TEST(AggregateSpan, SingleTokenIsIdentity) {
  const std::vector<TokenPolar> one = {tp({1.5, 0.2}, {0.3, -2.0})};
  const auto s = aggregate_span(one, GeometryConfig{});
  EXPECT_EQ(s.mean_magnitudes, one[0].magnitudes);
  EXPECT_NEAR(s.mean_phases[0], 0.3, 1e-15);
  EXPECT_NEAR(s.mean_phases[1], -2.0, 1e-15);
}

TEST(AggregateSpan, CircularMeanOfSymmetricPhases) {
  const std::vector<TokenPolar> two = {tp({1}, {pi / 4}), tp({3}, {-pi / 4})};
  const auto s = aggregate_span(two, GeometryConfig{});
  EXPECT_DOUBLE_EQ(s.mean_magnitudes[0], 2.0);
  EXPECT_NEAR(s.mean_phases[0], 0.0, 1e-15);
  EXPECT_TRUE(s.degenerate_dims.empty());
}

TEST(AggregateSpan, AntipodalPhasesFlagDegenerate) {
  const std::vector<TokenPolar> two = {tp({1}, {0.0}), tp({1}, {pi})};
  const auto s = aggregate_span(two, GeometryConfig{});
  EXPECT_EQ(s.mean_phases[0], 0.0);
  EXPECT_EQ(s.degenerate_dims, std::set<std::size_t>{0});
}

TEST(AggregateSpan, EmptyThrows) {
  EXPECT_THROW(aggregate_span(std::vector<TokenPolar>{}, GeometryConfig{}), Error);
}

TEST(AggregateSpan, AveragingAcrossBranchCut) {
  // Naive arithmetic mean of 3.1 and -3.1 would be 0; the circular mean sits at pi.
  const std::vector<TokenPolar> two = {tp({1}, {3.1}), tp({1}, {-3.1})};
  const auto s = aggregate_span(two, GeometryConfig{});
  EXPECT_NEAR(std::abs(s.mean_phases[0]), pi, 1e-12);
}

TEST(WrapPhase, Range) {
  EXPECT_DOUBLE_EQ(wrap_phase(pi), pi);
  EXPECT_DOUBLE_EQ(wrap_phase(-pi), pi);
  EXPECT_NEAR(wrap_phase(3 * pi / 2), -pi / 2, 1e-15);
  EXPECT_NEAR(wrap_phase(6.2), 6.2 - 2 * pi, 1e-15);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int i = 0; i < 1000; ++i) {
    const double w = wrap_phase(u(rng));
    EXPECT_GT(w, -pi);
    EXPECT_LE(w, pi);
  }
}

TEST(PolarDistance, Examples) {
  const GeometryConfig cfg;
  const auto a = span({1, 2, 3}, {0.1, 0.2, 0.3});
  EXPECT_EQ(polar_distance(a, a, cfg), 0.0);
  auto b = a;
  b.mean_magnitudes[1] += 1.0;
  EXPECT_DOUBLE_EQ(polar_distance(a, b, cfg), 1.0);
  const auto c = span({1}, {3.1});
  const auto d = span({1}, {-3.1});
  EXPECT_NEAR(polar_distance(c, d, cfg), 2 * pi - 6.2, 1e-12);
  EXPECT_NEAR(polar_distance(c, d, cfg), 0.08319, 1e-5);
}

TEST(PolarDistance, BetaWeightsPhaseTerm) {
  GeometryConfig cfg;
  cfg.beta_polar = 4.0;
  EXPECT_NEAR(polar_distance(span({1}, {0.0}), span({1}, {0.5}), cfg), 1.0, 1e-15);
}

TEST(PolarDistance, MatchesOracleAndIsSymmetric) {
  std::mt19937_64 rng(11);
  const GeometryConfig cfg;
  for (int i = 0; i < 500; ++i) {
    const auto a = oracle::random_span(rng, 8), b = oracle::random_span(rng, 8);
    EXPECT_NEAR(polar_distance(a, b, cfg), oracle::polar_distance(a, b, 1.0), 1e-12);
    EXPECT_DOUBLE_EQ(polar_distance(a, b, cfg), polar_distance(b, a, cfg));
  }
}

TEST(Rwmd, IdenticalSetsAreZero) {
  std::mt19937_64 rng(2);
  std::vector<PolarSpanEmbedding> a = {oracle::random_span(rng, 4), oracle::random_span(rng, 4)};
  EXPECT_EQ(rwmd(a, a, GeometryConfig{}), 0.0);
}

TEST(Rwmd, SingletonsReduceToPolarDistance) {
  std::mt19937_64 rng(4);
  std::vector<PolarSpanEmbedding> a = {oracle::random_span(rng, 4)}, b = {oracle::random_span(rng, 4)};
  EXPECT_DOUBLE_EQ(rwmd(a, b, GeometryConfig{}), polar_distance(a[0], b[0], GeometryConfig{}));
}

TEST(Rwmd, LowerBoundsExactTransport) {
  std::mt19937_64 rng(6);
  const GeometryConfig cfg;
  for (int i = 0; i < 100; ++i) {
    std::vector<PolarSpanEmbedding> a = {oracle::random_span(rng, 4), oracle::random_span(rng, 4)};
    std::vector<PolarSpanEmbedding> b = {oracle::random_span(rng, 4), oracle::random_span(rng, 4)};
    EXPECT_LE(rwmd(a, b, cfg), oracle::exact_wmd(a, b, 1.0) + 1e-9);
  }
}

TEST(Rwmd, EmptySetThrows) {
  std::vector<PolarSpanEmbedding> a = {span({1}, {0})}, none;
  EXPECT_THROW(rwmd(a, none, GeometryConfig{}), Error);
}

TEST(TransportOracle, KnownAssignment) {
  // Two-by-two with an obvious diagonal optimum.
  EXPECT_DOUBLE_EQ(oracle::exact_transport({{0, 10}, {10, 0}}), 0.0);
  EXPECT_DOUBLE_EQ(oracle::exact_transport({{1, 5}, {5, 2}}), 1.5);
  // Uneven sizes split mass: 1 point to 2 points at costs 1 and 3.
  EXPECT_DOUBLE_EQ(oracle::exact_transport({{1, 3}}), 2.0);
}

TEST(FeatureDistance, AllPresentIsZero) {
  const auto fs = segment_words("a short sentence to embed");
  EXPECT_EQ(feature_distance(fs, all_present(fs.size()), GeometryConfig{}), 0.0);
}

TEST(FeatureDistance, AllMaskedThrows) {
  const auto fs = segment_words("a b");
  try {
    feature_distance(fs, Mask{0, 0}, GeometryConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllMasked);
  }
}

TEST(FeatureDistance, TwoFeatureHandEvaluation) {
  // Hand-built from the primitives: full set {s1, s2} at positions 0,1;
  // masking feature 2 leaves {s1} at position 0.
  const auto fs = segment_words("alpha beta");
  GeometryConfig cfg;
  cfg.dim = 8;
  auto polar_at = [&](const std::string& w, std::size_t pos) {
    EmbeddingMatrix e{hash_static_embedding(w, 8).transpose(), {pos}};
    const auto rot = apply_rope(e, cfg);
    const std::vector<double> row(rot.values.data(), rot.values.data() + 8);
    return std::vector<TokenPolar>{to_polar(row)};
  };
  const auto s1 = aggregate_span(polar_at("alpha", 0), cfg);
  const auto s2 = aggregate_span(polar_at("beta", 1), cfg);
  const double d12 = oracle::polar_distance(s1, s2, 1.0);
  // R(full -> masked) = (0 + d12) / 2, R(masked -> full) = 0.
  EXPECT_NEAR(feature_distance(fs, Mask{1, 0}, cfg), d12 / 2, 1e-12);
}

TEST(FeatureDistance, LongerMaskedSpanFartherOnFixture) {
  // Regression baseline for the hash-static embedder, not a theorem.
  const auto fs = segment_sentences({{"D", {"The quick brown fox jumps over the lazy dog today.", "Yes.",
                                            "Cats sleep."}}});
  GeometryConfig cfg;
  const double long_masked = feature_distance(fs, Mask{0, 1, 1}, cfg);
  const double short_masked = feature_distance(fs, Mask{1, 0, 1}, cfg);
  EXPECT_GE(long_masked, short_masked);
}

TEST(Spans, MaskedFeaturesReindexContiguously) {
  // Dropping the first feature makes the second start at position 0, so its
  // span equals the first span of the one-word text.
  const auto two = segment_words("gone kept");
  const auto one = segment_words("kept");
  const GeometryConfig cfg;
  const auto a = span_embeddings(two, Mask{0, 1}, cfg);
  const auto b = span_embeddings(one, Mask{1}, cfg);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].mean_magnitudes, b[0].mean_magnitudes);
  EXPECT_EQ(a[0].mean_phases, b[0].mean_phases);
}

TEST(Kernel, Examples) {
  const std::vector<double> d = {0.0, 1.0, 2.0};
  const auto k = kernel_weights(d);
  EXPECT_DOUBLE_EQ(k.sigma, 1.0);
  EXPECT_DOUBLE_EQ(k.weights[0], 1.0);
  EXPECT_NEAR(k.weights[1], 0.36788, 1e-5);
  EXPECT_NEAR(k.weights[2], std::exp(-4.0), 1e-15);
}

TEST(Kernel, AllZeroDistancesGuard) {
  const std::vector<double> d(5, 0.0);
  const auto k = kernel_weights(d);
  EXPECT_EQ(k.sigma, 1.0);
  for (double w : k.weights) EXPECT_EQ(w, 1.0);
}

TEST(Kernel, WeightsInUnitIntervalAndMonotone) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 5);
  std::vector<double> d(50);
  for (auto& x : d) x = u(rng);
  const auto k = kernel_weights(d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_GT(k.weights[i], 0.0);
    EXPECT_LE(k.weights[i], 1.0);
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (d[i] < d[j]) EXPECT_GE(k.weights[i], k.weights[j]);
    }
  }
}

TEST(Median, EvenAndOdd) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_THROW(median({}), Error);
}

TEST(GeometryConfig, Validation) {
  GeometryConfig cfg;
  cfg.dim = 7;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.dim = 8;
  cfg.beta_polar = -1;
  EXPECT_THROW(cfg.validate(), Error);
}
