#include <gtest/gtest.h>

#include <sstream>

#include "freechunk/error.hpp"
#include "freechunk/pipeline.hpp"
#include "freechunk/synthetic.hpp"

namespace fc = freechunk;

namespace {

fc::CorpusRecord document_with_sentences(const std::string& id, std::size_t n) {
  std::string text;
  for (std::size_t i = 0; i < n; ++i) text += "Sentence number " + std::to_string(i) + " of " + id + ". ";
  return {id, text};
}

fc::EncoderWeights small_encoder(std::size_t d) {
  fc::EncoderConfig cfg;
  cfg.d = d;
  cfg.layers = 2;
  return fc::init_encoder_weights(cfg);
}

}  // namespace

TEST(ReadCorpus, ParsesAndReportsLineNumbers) {
  std::stringstream ok("{\"id\":\"a\",\"text\":\"One.\"}\n\n{\"id\":\"b\",\"text\":\"Two.\"}\n");
  const auto corpus = fc::read_corpus_jsonl(ok);
  ASSERT_EQ(corpus.size(), 2u);
  EXPECT_EQ(corpus[1].id, "b");

  auto message_for = [](const std::string& content) {
    std::stringstream in(content);
    try {
      fc::read_corpus_jsonl(in);
    } catch (const fc::Error& e) {
      EXPECT_EQ(e.code(), fc::ErrorCode::kParseError);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message_for("{\"id\":\"a\",\"text\":\"x\"}\n{broken\n").find("line 2"), std::string::npos);
  EXPECT_NE(message_for("{\"id\":\"a\",\"text\":\"\"}\n").find("empty text"), std::string::npos);
  EXPECT_NE(message_for("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n").find("duplicate"),
            std::string::npos);
  EXPECT_NE(message_for("{\"id\":1,\"text\":\"x\"}\n").find("line 1"), std::string::npos);
}

TEST(RunPipeline, SingleDocumentTraditional) {
  fc::ToyEmbedder embedder(16, 0);
  const auto r = fc::run_pipeline({document_with_sentences("a", 5)}, fc::Method::kTraditional, {}, embedder);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].pattern.granularity(), 5u);
  EXPECT_GT(r.timings.total, 0.0);
  EXPECT_GT(r.timings.sentencize, 0.0);
}

TEST(RunPipeline, FreeChunkEncodesEachSentenceOnce) {
  fc::ToyEmbedder embedder(16, 0);
  const auto w = small_encoder(16);
  const auto r = fc::run_pipeline({document_with_sentences("a", 64)}, fc::Method::kFreeChunk, {}, embedder, &w);
  EXPECT_EQ(r.records.size(), 62u);
  EXPECT_EQ(r.sentence_encodings, 64u);
  EXPECT_EQ(r.forward_passes, 1u);
  for (std::size_t i = 0; i < r.records.size(); ++i) EXPECT_EQ(r.records[i].ordinal, i);

  fc::PipelineOptions opts;
  opts.granularities = fc::parse_granularity_spec("2,5");
  const auto ten = fc::run_pipeline({document_with_sentences("b", 10)}, fc::Method::kFreeChunk, opts, embedder, &w);
  EXPECT_EQ(ten.sentence_encodings, 10u);
  EXPECT_EQ(ten.records.size(), 7u);
}

TEST(RunPipeline, WiderEmbedderIsTruncatedToEncoderWidth) {
  fc::ToyEmbedder embedder(32, 0);
  const auto w = small_encoder(16);
  const auto r = fc::run_pipeline({document_with_sentences("a", 8)}, fc::Method::kFreeChunk, {}, embedder, &w);
  EXPECT_EQ(r.records[0].embedding.size(), 16u);
}

TEST(RunPipeline, BaselineEmbeddingModes) {
  fc::ToyEmbedder embedder(16, 0);
  const std::vector<fc::CorpusRecord> corpus{document_with_sentences("a", 30)};
  fc::PipelineOptions opts;
  opts.token_limit = 40;
  opts.baseline_embedding = fc::BaselineEmbedding::kDirect;
  const auto direct = fc::run_pipeline(corpus, fc::Method::kTraditional, opts, embedder);
  EXPECT_EQ(direct.sentence_encodings, direct.records.size());
  opts.baseline_embedding = fc::BaselineEmbedding::kMeanPool;
  const auto pooled = fc::run_pipeline(corpus, fc::Method::kTraditional, opts, embedder);
  EXPECT_EQ(pooled.sentence_encodings, 30u);
  const auto semantic = fc::run_pipeline(corpus, fc::Method::kSemantic, opts, embedder);
  EXPECT_EQ(semantic.sentence_encodings, 30u);
}

TEST(RunPipeline, ErrorsCarryDocumentId) {
  fc::ToyEmbedder embedder(4, 0);
  const auto w = small_encoder(8);
  try {
    fc::run_pipeline({document_with_sentences("doc-x", 3)}, fc::Method::kFreeChunk, {}, embedder, &w);
    FAIL();
  } catch (const fc::Error& e) {
    EXPECT_NE(std::string(e.what()).find("doc-x"), std::string::npos);
  }
  EXPECT_THROW(fc::run_pipeline({document_with_sentences("a", 3)}, fc::Method::kFreeChunk, {}, embedder), fc::Error);
}

TEST(RunPipeline, DeterministicRecordsAndAccountedTime) {
  fc::CorpusGeneratorConfig gen;
  gen.documents = 40;
  gen.seed = 4;
  const auto corpus = fc::generate_corpus(gen);
  fc::ToyEmbedder embedder(32, 1);
  const auto w = small_encoder(32);
  for (const auto method : {fc::Method::kTraditional, fc::Method::kSemantic, fc::Method::kFreeChunk}) {
    const auto a = fc::run_pipeline(corpus, method, {}, embedder, &w);
    const auto b = fc::run_pipeline(corpus, method, {}, embedder, &w);
    std::stringstream sa, sb;
    fc::write_index_jsonl(sa, a.records);
    fc::write_index_jsonl(sb, b.records);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_GE(a.timings.accounted(), 0.9 * a.timings.total) << fc::to_string(method);
    EXPECT_LE(a.timings.accounted(), a.timings.total * 1.0000001);
  }
}

TEST(Methods, ParseAndName) {
  EXPECT_EQ(fc::parse_method("semantic"), fc::Method::kSemantic);
  EXPECT_EQ(fc::to_string(fc::Method::kFreeChunk), "freechunk");
  EXPECT_THROW(fc::parse_method("magic"), fc::Error);
}

TEST(SentencesJsonl, OneLinePerSentence) {
  std::stringstream out;
  fc::write_sentences_jsonl(out, {fc::make_document("a", "It's done. Next.")});
  EXPECT_EQ(out.str(),
            "{\"doc_id\":\"a\",\"index\":0,\"text\":\"It's done.\",\"token_count\":5}\n"
            "{\"doc_id\":\"a\",\"index\":1,\"text\":\"Next.\",\"token_count\":2}\n");
}
