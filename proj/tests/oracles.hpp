#pragma once

// Reference implementations used only by the tests. They avoid the library's
// own numerics so agreement means something.

#include <cstddef>
#include <random>
#include <vector>

#include "rwlime/geometry.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

/// Dense inverse by Gauss-Jordan elimination with partial pivoting.
Matrix invert(Matrix a);

/// Explicit (Z^T W Z)^{-1} Z^T W y.
std::vector<double> normal_equations(const Matrix& z, const std::vector<double>& w, const std::vector<double>& y);

/// Exact earth mover's cost between uniform point sets under `cost`, solved
/// as an integral min-cost flow.
double exact_transport(const Matrix& cost);

/// Polar distance written out directly from the definition.
double polar_distance(const rwlime::PolarSpanEmbedding& a, const rwlime::PolarSpanEmbedding& b, double beta);

double exact_wmd(const std::vector<rwlime::PolarSpanEmbedding>& a, const std::vector<rwlime::PolarSpanEmbedding>& b,
                 double beta);

rwlime::PolarSpanEmbedding random_span(std::mt19937_64& rng, std::size_t dim);

/// AUROC by counting every (positive, negative) pair.
double pairwise_auroc(const std::vector<double>& scores, const std::vector<int>& labels);

/// IoU and F1 from 0/1 membership vectors.
double iou(const std::vector<int>& pred, const std::vector<int>& gold);
double f1(const std::vector<int>& pred, const std::vector<int>& gold);

/// Top-k by repeated argmax (first index wins ties), as membership.
std::vector<int> top_k(const std::vector<double>& scores, std::size_t k);

}  // namespace oracle
