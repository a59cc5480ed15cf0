#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rwlime/evaluation.hpp"
#include "rwlime/scoring.hpp"
#include "rwlime/segmentation.hpp"

namespace rwlime {

enum class DatasetKind { HotpotQA, AnnotatedMMLU, Synthetic };

std::string to_string(DatasetKind k);
DatasetKind dataset_kind_from_string(const std::string& s);

struct Instance {
  std::string id;
  FeatureKind feature_kind = FeatureKind::Word;
  /// Word-level source text.
  std::string input_text;
  /// Sentence-level source documents.
  std::vector<Document> documents;
  std::string question;
  /// Fixed output y; empty means it must be generated.
  std::string output;
  /// "gold_answer", "supplied", "generated" or "synthetic".
  std::string output_mode;
  GoldLabels gold;
  std::optional<SyntheticSpec> synthetic;
  std::string prompt_prefix;
  std::string prompt_suffix;

  FeatureSet features;

  /// Rebuilds `features` from the source text or documents.
  void segment();
  std::size_t feature_count() const { return features.size(); }
};

struct LoadResult {
  std::vector<Instance> instances;
  std::vector<std::string> warnings;
  /// Examples skipped by the document-count filter.
  std::size_t filtered = 0;
  /// Examples dropped for unresolvable gold labels.
  std::size_t dropped = 0;
};

/// HotpotQA distractor JSON: keeps examples with exactly `require_doc_count`
/// context documents and maps supporting facts onto sentence feature ids.
LoadResult load_hotpotqa(const std::string& path, std::size_t require_doc_count = 10);
LoadResult parse_hotpotqa(const std::string& json_text, std::size_t require_doc_count = 10);

/// JSONL lines {query, gold_word_indices, answer?}.
LoadResult load_annotated_mmlu(const std::string& path);

struct SyntheticParams {
  std::size_t m = 5;
  std::size_t gold_size = 2;
  bool interaction = false;
  std::size_t count = 100;
  std::uint64_t seed = 0;
  std::size_t vocab_size = 16;
  std::size_t output_length = 4;
  double min_boost = 3.0;
  double max_boost = 5.0;
};

/// Planted-ground-truth instances with pseudo-word features. Interaction mode
/// plants one pair whose boost survives unless both members are masked.
std::vector<Instance> gen_synthetic(const SyntheticParams& params);

/// Instance JSONL (one object per line), the format written by gen-synthetic.
void save_instances(const std::string& path, const std::vector<Instance>& instances);
LoadResult load_instances(const std::string& path);
std::string instance_to_json(const Instance& inst);
Instance instance_from_json(const std::string& line);

/// Dispatches on kind.
LoadResult load_dataset(const std::string& path, DatasetKind kind, std::size_t require_doc_count = 10);

}  // namespace rwlime
