#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "freechunk/embedders.hpp"
#include "freechunk/encoder.hpp"
#include "freechunk/patterns.hpp"
#include "freechunk/retrieval.hpp"
#include "freechunk/sentencizer.hpp"

namespace freechunk {

struct CorpusRecord {
  std::string id;
  std::string text;
};

/// JSONL with one {"id", "text"} object per line. Errors name the line.
std::vector<CorpusRecord> read_corpus_jsonl(std::istream& in);
std::vector<CorpusRecord> read_corpus_file(const std::string& path);
void write_corpus_jsonl(std::ostream& out, const std::vector<CorpusRecord>& corpus);

/// {"doc_id", "index", "text", "token_count"} per sentence.
void write_sentences_jsonl(std::ostream& out, const std::vector<Document>& documents);

enum class Method { kTraditional, kSemantic, kFreeChunk };

Method parse_method(std::string_view name);
std::string_view to_string(Method method);

/// How baseline chunks get their embeddings. kDirect embeds the chunk text
/// with the embedder; kMeanPool averages the chunk's sentence embeddings,
/// which is the ground-truth chunk model of the synthetic benchmark.
enum class BaselineEmbedding { kDirect, kMeanPool };

struct PipelineOptions {
  GranularitySpec granularities{kDefaultGranularities, {}};
  std::size_t token_limit = 256;
  double percentile = 50.0;
  BaselineEmbedding baseline_embedding = BaselineEmbedding::kMeanPool;
  SentenceSplitter splitter;
};

struct StageTimings {
  double sentencize = 0.0;
  double chunk = 0.0;   // boundary detection / pattern construction
  double embed = 0.0;   // base-embedder calls
  double encode = 0.0;  // cross-granularity forward or pooling
  double total = 0.0;

  double chunking() const { return sentencize + chunk; }
  double encoding() const { return embed + encode; }
  double accounted() const { return sentencize + chunk + embed + encode; }
};

struct PipelineResult {
  std::vector<Document> documents;
  std::vector<ChunkRecord> records;
  StageTimings timings;
  std::size_t sentence_encodings = 0;  // texts sent to the base embedder
  std::size_t forward_passes = 0;      // encoder forwards (freechunk only)
};

/// sentencize -> chunk or build patterns -> embed -> (freechunk) encode.
/// `weights` is required for Method::kFreeChunk. Documents with no sentences
/// are skipped. Errors carry the document id.
PipelineResult run_pipeline(const std::vector<CorpusRecord>& corpus, Method method, const PipelineOptions& options,
                            Embedder& embedder, const EncoderWeights* weights = nullptr);

}  // namespace freechunk
