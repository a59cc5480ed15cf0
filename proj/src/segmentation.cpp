#include "rwlime/segmentation.hpp"

#include <cctype>

#include "rwlime/error.hpp"

namespace rwlime {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Non-ASCII bytes count as word characters so UTF-8 letters are never
// treated as punctuation.
bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) != 0;
}

// Appends whitespace-delimited chunks of `text` to `tokens`; offsets are
// relative to `base`.
void tokenize_into(const std::string& text, std::size_t base, std::vector<Token>& tokens) {
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i == text.size()) break;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    tokens.push_back(Token{text.substr(start, i - start), tokens.size(), base + start, base + i});
  }
}

bool has_word_char(const std::string& s) {
  for (char c : s) {
    if (is_word_char(c)) return true;
  }
  return false;
}

std::string join_tokens(const std::vector<Token>& tokens, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t t = begin; t < end; ++t) {
    if (t > begin) out += ' ';
    out += tokens[t].text;
  }
  return out;
}

}  // namespace

Mask all_present(std::size_t m) { return Mask(m, 1); }

FeatureSet segment_words(const std::string& text) {
  FeatureSet fs;
  fs.original_text = text;
  tokenize_into(text, 0, fs.tokens);

  // Leading punctuation chunks are held until the first word arrives.
  std::size_t pending_begin = 0;
  for (std::size_t t = 0; t < fs.tokens.size(); ++t) {
    if (has_word_char(fs.tokens[t].text)) {
      Feature f;
      f.id = fs.features.size();
      f.token_begin = fs.features.empty() ? pending_begin : t;
      f.token_end = t + 1;
      f.kind = FeatureKind::Word;
      fs.features.push_back(f);
    } else if (!fs.features.empty()) {
      fs.features.back().token_end = t + 1;
    }
  }
  if (fs.features.empty()) throw Error(ErrorCode::EmptyInput, "no word tokens in input text");
  for (auto& f : fs.features) f.source_text = join_tokens(fs.tokens, f.token_begin, f.token_end);
  return fs;
}

FeatureSet segment_sentences(const std::vector<Document>& documents) {
  FeatureSet fs;
  for (std::size_t d = 0; d < documents.size(); ++d) {
    const auto& sentences = documents[d].sentences;
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      const std::size_t first = fs.tokens.size();
      if (!fs.original_text.empty()) fs.original_text += ' ';
      const std::size_t base = fs.original_text.size();
      tokenize_into(sentences[s], base, fs.tokens);
      if (fs.tokens.size() == first) {
        if (!fs.original_text.empty() && fs.original_text.back() == ' ') fs.original_text.pop_back();
        continue;
      }
      fs.original_text += sentences[s];
      Feature f;
      f.id = fs.features.size();
      f.token_begin = first;
      f.token_end = fs.tokens.size();
      f.kind = FeatureKind::Sentence;
      f.source_text = join_tokens(fs.tokens, first, fs.tokens.size());
      f.origin = {d, s};
      fs.features.push_back(std::move(f));
    }
  }
  if (fs.features.empty()) throw Error(ErrorCode::EmptyInput, "all sentences are empty");
  return fs;
}

std::vector<const Token*> present_tokens(const FeatureSet& fs, const Mask& mask) {
  if (mask.size() != fs.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "mask has " + std::to_string(mask.size()) + " entries for " +
                    std::to_string(fs.size()) + " features");
  }
  std::vector<const Token*> out;
  for (const auto& f : fs.features) {
    if (!mask[f.id]) continue;
    for (std::size_t t = f.token_begin; t < f.token_end; ++t) out.push_back(&fs.tokens[t]);
  }
  return out;
}

std::string render_masked(const FeatureSet& fs, const Mask& mask) {
  std::string out;
  for (const Token* tok : present_tokens(fs, mask)) {
    if (!out.empty()) out += ' ';
    out += tok->text;
  }
  return out;
}

}  // namespace rwlime
