#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "freechunk/encoder.hpp"
#include "freechunk/pipeline.hpp"
#include "freechunk/retrieval.hpp"
#include "freechunk/training.hpp"

namespace freechunk {

/// Random-word corpus. Every sentence is distinct with overwhelming
/// probability, so toy embeddings of different sentences are independent.
struct CorpusGeneratorConfig {
  std::size_t documents = 20;
  std::size_t min_sentences = 16;
  std::size_t max_sentences = 64;
  std::size_t min_words = 6;
  std::size_t max_words = 14;
  std::size_t vocabulary = 2000;
  std::uint64_t seed = 0;
};

std::vector<CorpusRecord> generate_corpus(const CorpusGeneratorConfig& config);

/// Sentencizes and embeds each record; documents without sentences are dropped.
std::vector<TrainingDocument> make_training_documents(const std::vector<CorpusRecord>& corpus, Embedder& embedder,
                                                      const SentenceSplitter& splitter = SentenceSplitter());

/// Teacher that mean-pools a document's own sentence embeddings.
TeacherProvider mean_pool_teacher_provider();

struct NeedleQuery {
  std::string doc_id;
  std::size_t first = 0;  // needle span [first, last]
  std::size_t last = 0;
  std::vector<float> embedding;
};

struct SynthEvalConfig {
  std::size_t documents = 20;
  std::size_t sentences_per_doc = 64;
  std::size_t queries = 200;
  std::size_t needle_granularity = 4;
  std::uint64_t seed = 0;
  std::size_t d = 16;  // toy embedder width; must match the encoder
  PipelineOptions pipeline;
};

/// Queries are the mean-pooled teacher embedding of a random needle span.
std::vector<NeedleQuery> make_needle_queries(const std::vector<Document>& documents, Embedder& embedder,
                                             std::size_t count, std::size_t granularity, std::uint64_t seed);

struct EvalReport {
  std::string method;
  std::size_t queries = 0;
  double hit_at_1 = 0.0;
  double hit_at_5 = 0.0;
  double hit_at_10 = 0.0;
  double mrr = 0.0;  // reciprocal rank of the first hit within the top 10
  double chunking_seconds = 0.0;
  double encoding_seconds = 0.0;
  std::size_t sentence_encodings = 0;
  std::size_t chunk_count = 0;
};

/// A hit at k: some top-k chunk of the needle's document shares a sentence
/// with the needle span.
EvalReport score_queries(const ChunkIndex& index, const std::vector<NeedleQuery>& queries);

/// Runs traditional, semantic and (when weights are given) freechunk over the
/// same seeded corpus and queries.
std::vector<EvalReport> synth_eval(const SynthEvalConfig& config, const EncoderWeights* weights);

std::string format_eval_text(const std::vector<EvalReport>& reports);
std::string format_eval_csv(const std::vector<EvalReport>& reports);

}  // namespace freechunk
