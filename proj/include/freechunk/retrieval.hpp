#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "freechunk/patterns.hpp"
#include "freechunk/sentencizer.hpp"

namespace freechunk {

struct ChunkRecord {
  std::string doc_id;
  ChunkPattern pattern;
  std::vector<float> embedding;  // unit norm
  std::size_t ordinal = 0;       // assigned on insertion
};

struct RetrievalHit {
  ChunkRecord record;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based
};

inline constexpr double kUnitNormTolerance = 1e-4;

/// Exact cosine index over mixed-granularity chunks. Reads may run
/// concurrently; writers take exclusive access, so a query never observes a
/// partially inserted batch.
class ChunkIndex {
 public:
  ChunkIndex() = default;
  ChunkIndex(ChunkIndex&& other) noexcept;
  ChunkIndex& operator=(ChunkIndex&&) = delete;

  /// Validates every record first, then inserts. A record with the same
  /// (doc_id, sentence set) as an existing one replaces it. Returns the net
  /// growth of the index.
  std::size_t add_chunks(std::vector<ChunkRecord> records);

  /// Top-k by cosine; ties go to smaller granularity, then smaller start,
  /// then earlier insertion. k larger than the index returns everything.
  std::vector<RetrievalHit> query_top_k(std::span<const float> query, std::size_t k) const;

  std::size_t size() const;
  std::size_t dimension() const;
  std::vector<ChunkRecord> records() const;

 private:
  mutable std::shared_mutex mutex_;
  std::vector<ChunkRecord> records_;
  std::map<std::pair<std::string, std::vector<std::size_t>>, std::size_t> slots_;
  std::size_t next_ordinal_ = 0;
  std::size_t dimension_ = 0;
};

/// Score used by the index: dot(query, record) / |query|, in double.
double retrieval_score(std::span<const float> query, std::span<const float> record);

/// Strict weak ordering used for ranking.
bool ranks_before(const RetrievalHit& a, const RetrievalHit& b);

struct ContextBlock {
  std::string doc_id;
  std::vector<std::size_t> sentence_indices;  // document order
  std::string text;
};

struct AssembledContext {
  std::vector<ContextBlock> blocks;  // ordered by first appearance in the hits
  std::size_t tokens = 0;
  std::size_t hits_used = 0;
  bool budget_exhausted = false;  // a hit was left out for lack of budget
};

using SentencesByDoc = std::map<std::string, std::vector<Sentence>>;

/// Unions the hits' sentences in rank order, stopping before the first hit
/// whose unseen sentences would push the token total past the budget.
AssembledContext assemble_context(const std::vector<RetrievalHit>& hits, const SentencesByDoc& sentences,
                                  std::size_t token_budget);

/// One JSON object per line: {"doc_id", "indices", "g", "s", "embedding"}.
void write_index_jsonl(std::ostream& out, const std::vector<ChunkRecord>& records);
std::vector<ChunkRecord> read_index_jsonl(std::istream& in);

void save_index(const std::string& path, const ChunkIndex& index);
ChunkIndex load_index(const std::string& path);

}  // namespace freechunk
