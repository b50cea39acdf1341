#include <gtest/gtest.h>

#include "freechunk/synthetic.hpp"

namespace fc = freechunk;

TEST(GenerateCorpus, DeterministicAndSentenceCountsHold) {
  fc::CorpusGeneratorConfig gen;
  gen.documents = 10;
  gen.min_sentences = 5;
  gen.max_sentences = 9;
  gen.seed = 1;
  const auto a = fc::generate_corpus(gen);
  const auto b = fc::generate_corpus(gen);
  ASSERT_EQ(a.size(), 10u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].text, b[i].text);
    const auto n = fc::make_document(a[i].id, a[i].text).size();
    EXPECT_GE(n, 5u);
    EXPECT_LE(n, 9u);
  }
}

TEST(ScoreQueries, ExactChunkQueriesHitAtOne) {
  fc::ChunkIndex index;
  std::vector<fc::NeedleQuery> queries;
  fc::ToyEmbedder toy(16, 0);
  for (std::size_t i = 0; i < 20; ++i) {
    auto e = fc::toy_embed("chunk " + std::to_string(i), 16, 0).values;
    index.add_chunks({{"d", fc::ChunkPattern::contiguous_range(2 * i, 2 * i + 2), e, 0}});
    queries.push_back({"d", 2 * i, 2 * i + 1, e});
  }
  const auto r = fc::score_queries(index, queries);
  EXPECT_EQ(r.hit_at_1, 1.0);
  EXPECT_EQ(r.mrr, 1.0);
  EXPECT_EQ(fc::score_queries(index, {}).queries, 0u);
}

TEST(SynthEval, ZeroQueriesGiveEmptyReport) {
  fc::SynthEvalConfig cfg;
  cfg.queries = 0;
  EXPECT_TRUE(fc::synth_eval(cfg, nullptr).empty());
}

TEST(SynthEval, ReportsAreWellFormed) {
  fc::SynthEvalConfig cfg;
  cfg.documents = 6;
  cfg.sentences_per_doc = 24;
  cfg.queries = 40;
  fc::EncoderConfig enc;
  enc.d = cfg.d;
  const auto w = fc::init_encoder_weights(enc);
  const auto reports = fc::synth_eval(cfg, &w);
  ASSERT_EQ(reports.size(), 3u);
  for (const auto& r : reports) {
    EXPECT_EQ(r.queries, 40u);
    EXPECT_LE(r.hit_at_1, r.hit_at_5);
    EXPECT_LE(r.hit_at_5, r.hit_at_10);
    EXPECT_LE(r.hit_at_10, 1.0);
    EXPECT_GE(r.chunking_seconds, 0.0);
    EXPECT_GE(r.encoding_seconds, 0.0);
    EXPECT_EQ(r.sentence_encodings, 6u * 24u);
  }
  EXPECT_EQ(reports[2].method, "freechunk");
  const auto text = fc::format_eval_text(reports);
  EXPECT_NE(text.find("not generator QA accuracies"), std::string::npos);
  const auto csv = fc::format_eval_csv(reports);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}
