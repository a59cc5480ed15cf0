#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace rwlime {

/// A binary keep/drop vector over features: 1 = present, 0 = masked.
using Mask = std::vector<std::uint8_t>;

struct Token {
  std::string text;
  std::size_t index = 0;
  /// Byte offsets [start, end) into the source text.
  std::size_t char_start = 0;
  std::size_t char_end = 0;
};

enum class FeatureKind { Word, Sentence };

struct Feature {
  std::size_t id = 0;
  /// Half-open token range [token_begin, token_end).
  std::size_t token_begin = 0;
  std::size_t token_end = 0;
  FeatureKind kind = FeatureKind::Word;
  std::string source_text;
  /// Sentence features only: (document index, sentence index) in the source dataset.
  std::pair<std::size_t, std::size_t> origin{0, 0};

  std::size_t token_count() const { return token_end - token_begin; }
};

struct FeatureSet {
  std::vector<Feature> features;
  std::vector<Token> tokens;
  std::string original_text;

  std::size_t size() const { return features.size(); }
};

struct Document {
  std::string title;
  std::vector<std::string> sentences;
};

/// Whitespace tokenization with punctuation-only chunks folded into the
/// neighbouring word. Throws EmptyInput when no word is found.
FeatureSet segment_words(const std::string& text);

/// One feature per non-empty sentence, in document order. Empty sentences
/// are skipped and ids stay dense.
FeatureSet segment_sentences(const std::vector<Document>& documents);

/// Input text with every masked feature's tokens removed, joined by single spaces.
std::string render_masked(const FeatureSet& fs, const Mask& mask);

/// Tokens that survive `mask`, in order.
std::vector<const Token*> present_tokens(const FeatureSet& fs, const Mask& mask);

Mask all_present(std::size_t m);

}  // namespace rwlime
