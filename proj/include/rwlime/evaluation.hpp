#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace rwlime {

using IdSet = std::set<std::size_t>;

enum class GoldSource { SupportingFacts, AnnotatedWords, Synthetic };

std::string to_string(GoldSource s);
GoldSource gold_source_from_string(const std::string& s);

struct GoldLabels {
  IdSet positive_ids;
  GoldSource source = GoldSource::Synthetic;

  /// Throws EmptyGold / IndexOutOfRange.
  void validate(std::size_t m) const;
};

/// Ids of the k largest scores; ties go to the lower id.
IdSet select_top(std::span<const double> scores, std::size_t k);

double iou(const IdSet& pred, const IdSet& gold);
double f1(const IdSet& pred, const IdSet& gold);
/// Mann-Whitney AUROC with ties counted one half.
double auroc(std::span<const double> scores, std::span<const int> labels);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

/// Type-7 (linear interpolation) quantile of sorted data.
double quantile_sorted(std::span<const double> sorted, double q);
MetricSummary aggregate(std::span<const double> values);

enum class Protocol { TopGoldCount, Top5 };

std::string to_string(Protocol p);
Protocol protocol_from_string(const std::string& s);

struct InstanceMetrics {
  double iou = 0.0;
  double f1 = 0.0;
  /// Absent when gold covers every feature (AUROC undefined).
  std::optional<double> auroc;
};

InstanceMetrics evaluate_instance(std::span<const double> scores, const GoldLabels& gold,
                                  Protocol protocol);

/// Feature-count bucket labels in order: "2-3", "4-5", "6-8", "9-11", "12+".
const std::vector<std::string>& bucket_labels();
/// Bucket for a feature count; empty below the minimum of 2.
std::optional<std::string> bucket_for(std::size_t m);

/// Groups indices by bucket. Instances with fewer than 2 features are dropped
/// and counted in `excluded`.
struct Bucketing {
  std::map<std::string, std::vector<std::size_t>> members;
  std::size_t excluded = 0;
};
Bucketing bucket_by_features(std::span<const std::size_t> feature_counts);

struct EvalReport {
  std::string bucket;
  MetricSummary iou;
  MetricSummary f1;
  MetricSummary auroc;
  std::vector<InstanceMetrics> per_instance;
};

EvalReport build_report(std::string bucket, std::vector<InstanceMetrics> per_instance);

}  // namespace rwlime
