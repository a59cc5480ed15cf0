#include "rwlime/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rwlime/error.hpp"

namespace rwlime {

std::string to_string(GoldSource s) {
  switch (s) {
    case GoldSource::SupportingFacts: return "supporting_facts";
    case GoldSource::AnnotatedWords: return "annotated_words";
    case GoldSource::Synthetic: return "synthetic";
  }
  return "synthetic";
}

GoldSource gold_source_from_string(const std::string& s) {
  if (s == "supporting_facts") return GoldSource::SupportingFacts;
  if (s == "annotated_words") return GoldSource::AnnotatedWords;
  if (s == "synthetic") return GoldSource::Synthetic;
  throw Error(ErrorCode::ParseError, "unknown gold source '" + s + "'");
}

void GoldLabels::validate(std::size_t m) const {
  if (positive_ids.empty()) throw Error(ErrorCode::EmptyGold, "gold set is empty");
  if (*positive_ids.rbegin() >= m) {
    throw Error(ErrorCode::IndexOutOfRange, "gold id " + std::to_string(*positive_ids.rbegin()) +
                                                " outside " + std::to_string(m) + " features");
  }
}

IdSet select_top(std::span<const double> scores, std::size_t k) {
  if (k > scores.size()) {
    throw Error(ErrorCode::KTooLarge, "cannot select " + std::to_string(k) + " of " +
                                          std::to_string(scores.size()) + " features");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return IdSet(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
}

namespace {

std::size_t intersection_size(const IdSet& a, const IdSet& b) {
  std::size_t n = 0;
  for (auto id : a) n += b.count(id);
  return n;
}

}  // namespace

double iou(const IdSet& pred, const IdSet& gold) {
  if (gold.empty()) throw Error(ErrorCode::EmptyGold, "IoU needs a non-empty gold set");
  const std::size_t inter = intersection_size(pred, gold);
  const std::size_t uni = pred.size() + gold.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double f1(const IdSet& pred, const IdSet& gold) {
  if (gold.empty()) throw Error(ErrorCode::EmptyGold, "F1 needs a non-empty gold set");
  if (pred.empty()) return 0.0;
  return 2.0 * static_cast<double>(intersection_size(pred, gold)) /
         static_cast<double>(pred.size() + gold.size());
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, "scores and labels differ in length");
  }
  // Rank-sum form with average ranks over ties: equivalent to counting
  // positive-negative pairs with ties as one half.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] != 0) {
        pos_rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorCode::DegenerateLabels, "AUROC needs both positive and negative labels");
  }
  const double p = static_cast<double>(positives);
  const double u = pos_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::EmptyList, "quantile of an empty list");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

MetricSummary aggregate(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyList, "cannot aggregate an empty list");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  MetricSummary s;
  s.count = sorted.size();
  const double n = static_cast<double>(s.count);
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  s.median = quantile_sorted(sorted, 0.5);
  s.q1 = quantile_sorted(sorted, 0.25);
  s.q3 = quantile_sorted(sorted, 0.75);
  s.iqr = s.q3 - s.q1;
  s.min = sorted.front();
  s.max = sorted.back();
  return s;
}

std::string to_string(Protocol p) { return p == Protocol::Top5 ? "top5" : "top_gold_count"; }

Protocol protocol_from_string(const std::string& s) {
  if (s == "top5") return Protocol::Top5;
  if (s == "top_gold_count") return Protocol::TopGoldCount;
  throw Error(ErrorCode::ConfigError, "unknown protocol '" + s + "'");
}

InstanceMetrics evaluate_instance(std::span<const double> scores, const GoldLabels& gold,
                                  Protocol protocol) {
  gold.validate(scores.size());
  const std::size_t k = protocol == Protocol::Top5 ? std::min<std::size_t>(5, scores.size())
                                                   : gold.positive_ids.size();
  const IdSet pred = select_top(scores, k);
  InstanceMetrics out;
  out.iou = iou(pred, gold.positive_ids);
  out.f1 = f1(pred, gold.positive_ids);
  if (gold.positive_ids.size() < scores.size()) {
    std::vector<int> labels(scores.size(), 0);
    for (auto id : gold.positive_ids) labels[id] = 1;
    out.auroc = auroc(scores, labels);
  }
  return out;
}

const std::vector<std::string>& bucket_labels() {
  static const std::vector<std::string> labels = {"2-3", "4-5", "6-8", "9-11", "12+"};
  return labels;
}

std::optional<std::string> bucket_for(std::size_t m) {
  if (m < 2) return std::nullopt;
  if (m <= 3) return "2-3";
  if (m <= 5) return "4-5";
  if (m <= 8) return "6-8";
  if (m <= 11) return "9-11";
  return "12+";
}

Bucketing bucket_by_features(std::span<const std::size_t> feature_counts) {
  Bucketing out;
  for (const auto& label : bucket_labels()) out.members[label];
  for (std::size_t i = 0; i < feature_counts.size(); ++i) {
    if (auto b = bucket_for(feature_counts[i])) {
      out.members[*b].push_back(i);
    } else {
      ++out.excluded;
    }
  }
  return out;
}

EvalReport build_report(std::string bucket, std::vector<InstanceMetrics> per_instance) {
  EvalReport r;
  r.bucket = std::move(bucket);
  std::vector<double> ious, f1s, aurocs;
  for (const auto& m : per_instance) {
    ious.push_back(m.iou);
    f1s.push_back(m.f1);
    if (m.auroc) aurocs.push_back(*m.auroc);
  }
  if (!ious.empty()) {
    r.iou = aggregate(ious);
    r.f1 = aggregate(f1s);
  }
  if (!aurocs.empty()) r.auroc = aggregate(aurocs);
  r.per_instance = std::move(per_instance);
  return r;
}

}  // namespace rwlime
