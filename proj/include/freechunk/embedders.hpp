#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "freechunk/numerics.hpp"
#include "freechunk/patterns.hpp"

namespace freechunk {

struct EmbeddingVector {
  std::vector<float> values;
  std::string source;  // "toy", "teacher" or "remote:<model>"
};

/// Sentence/text embedding model. Every implementation returns unit-norm rows
/// in input order.
class Embedder {
 public:
  virtual ~Embedder() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::string source_tag() const = 0;
  virtual Matrix embed(std::span<const std::string> texts) = 0;

  EmbeddingVector embed_one(const std::string& text);
};

/// Hash-seeded pseudo-random unit vector. Text is normalized by trimming and
/// collapsing whitespace runs before hashing.
EmbeddingVector toy_embed(std::string_view text, std::size_t d, std::uint64_t seed);

class ToyEmbedder final : public Embedder {
 public:
  ToyEmbedder(std::size_t d, std::uint64_t seed);

  std::size_t dimension() const override { return d_; }
  std::string source_tag() const override { return "toy"; }
  Matrix embed(std::span<const std::string> texts) override;

 private:
  std::size_t d_;
  std::uint64_t seed_;
};

/// Decorator counting how many texts reach the wrapped embedder.
class CountingEmbedder final : public Embedder {
 public:
  explicit CountingEmbedder(Embedder& inner) : inner_(inner) {}

  std::size_t dimension() const override { return inner_.dimension(); }
  std::string source_tag() const override { return inner_.source_tag(); }
  Matrix embed(std::span<const std::string> texts) override;

  std::size_t texts_embedded() const { return count_.load(); }
  void reset() { count_ = 0; }

 private:
  Embedder& inner_;
  std::atomic<std::size_t> count_{0};
};

struct RemoteEmbedderConfig {
  std::string base_url = "http://127.0.0.1:8080/v1";
  std::string model = "text-embedding-3-small";
  std::string api_key_env = "OPENAI_API_KEY";
  std::size_t batch_size = 64;
  double timeout_seconds = 30.0;
  std::size_t max_retries = 3;
  double initial_backoff_seconds = 0.5;
  std::size_t max_in_flight = 1;

  void validate() const;
};

struct RemoteCallStats {
  std::size_t requests = 0;  // batches sent successfully
  std::size_t attempts = 0;  // HTTP attempts including retries
};

/// POSTs {"model", "input"} batches to base_url + "/embeddings", reorders each
/// response by its "index" field and L2-normalizes every vector. Retries 429,
/// 5xx and transport failures with exponential backoff.
std::vector<EmbeddingVector> remote_embed_batch(std::span<const std::string> texts,
                                                const RemoteEmbedderConfig& config,
                                                RemoteCallStats* stats = nullptr);

class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig config);

  std::size_t dimension() const override { return dimension_; }
  std::string source_tag() const override { return "remote:" + config_.model; }
  Matrix embed(std::span<const std::string> texts) override;

  const RemoteCallStats& stats() const { return stats_; }

 private:
  RemoteEmbedderConfig config_;
  std::size_t dimension_ = 0;  // known after the first response
  RemoteCallStats stats_;
};

enum class TeacherMode { kMeanPool, kRemoteConcat };

TeacherMode parse_teacher_mode(std::string_view name);
std::string_view to_string(TeacherMode mode);

/// Normalized mean of the pattern's rows of the sentence embeddings.
EmbeddingVector mean_pool_teacher(const Matrix& sentences, const ChunkPattern& pattern);
Matrix mean_pool_teacher(const Matrix& sentences, const PatternSet& patterns);

/// Embeds the pattern's sentence texts joined by single spaces.
Matrix concat_teacher(std::span<const std::string> sentence_texts, const PatternSet& patterns,
                      Embedder& embedder);

inline constexpr std::string_view kConcatJoiner = " ";

std::string join_pattern_text(std::span<const std::string> sentence_texts, const ChunkPattern& pattern);

}  // namespace freechunk
