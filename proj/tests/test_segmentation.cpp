#include <gtest/gtest.h>

#include <regex>

#include "rwlime/error.hpp"
#include "rwlime/segmentation.hpp"

using namespace rwlime;

namespace {

std::vector<std::string> regex_chunks(const std::string& s) {
  std::vector<std::string> out;
  const std::regex word(R"(\S+)");
  for (auto it = std::sregex_iterator(s.begin(), s.end(), word); it != std::sregex_iterator(); ++it) {
    out.push_back(it->str());
  }
  return out;
}

std::vector<std::string> texts(const FeatureSet& fs) {
  std::vector<std::string> out;
  for (const auto& f : fs.features) out.push_back(f.source_text);
  return out;
}

}  // namespace

TEST(SegmentWords, QuestionMarkStaysWithItsWord) {
  const auto fs = segment_words("What is RoPE?");
  ASSERT_EQ(fs.size(), 3u);
  EXPECT_EQ(texts(fs), regex_chunks("What is RoPE?"));
  EXPECT_EQ(fs.features[2].source_text, "RoPE?");
}

TEST(SegmentWords, SingleWord) {
  const auto fs = segment_words("x");
  ASSERT_EQ(fs.size(), 1u);
  EXPECT_EQ(fs.features[0].source_text, "x");
}

TEST(SegmentWords, BlankInputThrows) {
  try {
    segment_words("   ");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
}

TEST(SegmentWords, LoosePunctuationFoldsIntoNeighbour) {
  const auto fs = segment_words("\" hello , world !");
  ASSERT_EQ(fs.size(), 2u);
  EXPECT_EQ(fs.features[0].token_count(), 3u);
  EXPECT_EQ(fs.features[1].token_count(), 2u);
  EXPECT_EQ(render_masked(fs, all_present(2)), "\" hello , world !");
}

TEST(SegmentWords, MatchesRegexSplitterOnPlainText) {
  const std::string s = "  the  quick\tbrown fox\njumps over, the lazy dog. ";
  EXPECT_EQ(texts(segment_words(s)), regex_chunks(s));
}

TEST(SegmentWords, TokenOffsetsPointIntoSource) {
  const std::string s = "alpha  beta gamma";
  const auto fs = segment_words(s);
  for (const auto& t : fs.tokens) EXPECT_EQ(s.substr(t.char_start, t.char_end - t.char_start), t.text);
}

TEST(SegmentSentences, DocumentOrder) {
  const auto fs = segment_sentences({{"A", {"a0", "a1"}}, {"B", {"b0", "b1"}}});
  EXPECT_EQ(texts(fs), (std::vector<std::string>{"a0", "a1", "b0", "b1"}));
  EXPECT_EQ(fs.features[2].origin, (std::pair<std::size_t, std::size_t>{1, 0}));
  for (std::size_t i = 0; i < fs.size(); ++i) {
    EXPECT_EQ(fs.features[i].id, i);
    EXPECT_EQ(fs.features[i].kind, FeatureKind::Sentence);
  }
}

TEST(SegmentSentences, SingleSentence) { EXPECT_EQ(segment_sentences({{"T", {"Only one."}}}).size(), 1u); }

TEST(SegmentSentences, EmptySentenceSkippedIdsDense) {
  const auto fs = segment_sentences({{"A", {"first one.", "", "third one."}}, {"B", {"   ", "b."}}});
  ASSERT_EQ(fs.size(), 3u);
  EXPECT_EQ(texts(fs), (std::vector<std::string>{"first one.", "third one.", "b."}));
  EXPECT_EQ(fs.features[1].origin, (std::pair<std::size_t, std::size_t>{0, 2}));
  EXPECT_EQ(fs.features[2].origin, (std::pair<std::size_t, std::size_t>{1, 1}));
}

TEST(SegmentSentences, NoSentencesThrows) {
  EXPECT_THROW(segment_sentences({{"A", {""}}}), Error);
}

TEST(RenderMasked, AllPresentIsIdentityUpToSpacing) {
  const auto fs = segment_words("one two three");
  EXPECT_EQ(render_masked(fs, all_present(3)), "one two three");
}

TEST(RenderMasked, DropsMaskedSentences) {
  const auto fs = segment_sentences({{"A", {"Sun is hot.", "Ice is cold.", "Sky is blue."}}});
  EXPECT_EQ(render_masked(fs, Mask{1, 0, 1}), "Sun is hot. Sky is blue.");
}

TEST(RenderMasked, AllMaskedIsEmpty) {
  EXPECT_EQ(render_masked(segment_words("a b"), Mask{0, 0}), "");
}

TEST(RenderMasked, LengthMismatchThrows) {
  EXPECT_THROW(render_masked(segment_words("a b"), Mask{1}), Error);
}

TEST(SegmentWords, FeatureTokenRangesPartitionTokens) {
  const auto fs = segment_words(", lead words : with ; scattered marks .");
  std::size_t next = 0;
  for (const auto& f : fs.features) {
    EXPECT_EQ(f.token_begin, next);
    EXPECT_GT(f.token_end, f.token_begin);
    next = f.token_end;
  }
  EXPECT_EQ(next, fs.tokens.size());
}
