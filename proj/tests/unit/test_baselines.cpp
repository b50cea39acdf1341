#include <gtest/gtest.h>

#include "freechunk/baselines.hpp"
#include "freechunk/embedders.hpp"
#include "freechunk/rng.hpp"

namespace fc = freechunk;

namespace {

// A document whose sentence i has token_counts[i] tokens.
fc::Document doc_with_tokens(const std::vector<std::size_t>& token_counts) {
  std::string text;
  for (const auto count : token_counts) {
    if (!text.empty()) text += ' ';
    for (std::size_t t = 0; t + 1 < count; ++t) text += "w ";
    text += ".";
  }
  return fc::make_document("doc", text);
}

void expect_partition(const std::vector<fc::Chunk>& chunks, std::size_t n) {
  std::size_t next = 0;
  for (const auto& c : chunks) {
    ASSERT_EQ(c.first, next);
    ASSERT_LE(c.first, c.last);
    next = c.last + 1;
  }
  ASSERT_EQ(next, n);
}

}  // namespace

TEST(TraditionalChunk, Examples) {
  const auto doc = doc_with_tokens({100, 100, 100, 100, 100});
  ASSERT_EQ(doc.sentences[0].token_count, 100u);
  const auto chunks = fc::traditional_chunk(doc, 256);
  ASSERT_EQ(chunks.size(), 3u);
  EXPECT_EQ(chunks[0].last, 1u);
  EXPECT_EQ(chunks[1].first, 2u);
  EXPECT_EQ(chunks[1].token_count, 200u);
  EXPECT_EQ(chunks[2].sentence_count(), 1u);

  const auto big = fc::traditional_chunk(doc_with_tokens({300}), 256);
  ASSERT_EQ(big.size(), 1u);
  EXPECT_EQ(big[0].token_count, 300u);

  EXPECT_TRUE(fc::traditional_chunk(fc::make_document("e", ""), 256).empty());
}

TEST(TraditionalChunk, TextIsTheSourceSpan) {
  const auto doc = fc::make_document("d", "One two.  Three four.\nFive.");
  const auto chunks = fc::traditional_chunk(doc, 6);
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(chunks[0].text, "One two.  Three four.");
  EXPECT_EQ(chunks[0].doc_id, "d");
}

TEST(SemanticChunk, Examples) {
  const auto doc = fc::make_document("d", "A. B. C. D.");
  const fc::Matrix same(4, 2, {1, 0, 1, 0, 1, 0, 1, 0});
  EXPECT_EQ(fc::semantic_chunk(doc, same).size(), 1u);

  EXPECT_EQ(fc::semantic_chunk(fc::make_document("d", "Only one."), fc::Matrix(1, 2, {1, 0})).size(), 1u);

  // Unit rows with adjacent distances 0.1, 0.9, 0.2.
  auto rotate = [](double angle) { return std::pair{std::cos(angle), std::sin(angle)}; };
  const double a1 = std::acos(0.9), a2 = a1 + std::acos(0.1), a3 = a2 + std::acos(0.8);
  fc::Matrix e(4, 2);
  double angles[] = {0.0, a1, a2, a3};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto [c, s] = rotate(angles[i]);
    e(i, 0) = static_cast<float>(c);
    e(i, 1) = static_cast<float>(s);
  }
  const auto chunks = fc::semantic_chunk(doc, e, 50.0);
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(chunks[0].last, 1u);
  EXPECT_EQ(chunks[1].first, 2u);
  EXPECT_EQ(chunks[1].last, 3u);
}

TEST(Percentile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(fc::percentile_linear({0.1, 0.9, 0.2}, 50), 0.2);
  EXPECT_DOUBLE_EQ(fc::percentile_linear({1, 2, 3, 4}, 50), 2.5);
  EXPECT_DOUBLE_EQ(fc::percentile_linear({1, 2, 3, 4}, 0), 1);
  EXPECT_DOUBLE_EQ(fc::percentile_linear({1, 2, 3, 4}, 100), 4);
  EXPECT_DOUBLE_EQ(fc::percentile_linear({5}, 30), 5);
}

TEST(Baselines, PartitionFuzz) {
  fc::Rng rng(42);
  fc::ToyEmbedder embedder(16, 7);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::size_t> counts;
    for (std::size_t i = 0, n = 1 + rng.below(40); i < n; ++i) counts.push_back(1 + rng.below(150));
    const auto doc = doc_with_tokens(counts);
    const std::size_t limit = 1 + rng.below(300);
    const auto trad = fc::traditional_chunk(doc, limit);
    expect_partition(trad, doc.size());
    for (const auto& c : trad) {
      if (c.sentence_count() > 1) EXPECT_LE(c.token_count, limit);
    }
    const auto sem = fc::semantic_chunk(doc, embedder, rng.uniform(0, 100));
    expect_partition(sem, doc.size());
    EXPECT_EQ(fc::semantic_chunk(doc, embedder).size(), fc::semantic_chunk(doc, embedder).size());
  }
}
