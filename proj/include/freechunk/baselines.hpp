#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "freechunk/embedders.hpp"
#include "freechunk/numerics.hpp"
#include "freechunk/sentencizer.hpp"

namespace freechunk {

/// A contiguous run of sentences [first, last] produced by a baseline chunker.
struct Chunk {
  std::string doc_id;
  std::size_t first = 0;
  std::size_t last = 0;
  std::string text;  // source bytes from the first sentence's start to the last's end
  std::size_t token_count = 0;

  std::size_t sentence_count() const { return last - first + 1; }
};

inline constexpr std::size_t kDefaultTokenLimit = 256;
inline constexpr double kDefaultBreakpointPercentile = 50.0;

/// Greedy accumulation: a chunk closes before the sentence that would push
/// it over token_limit. A sentence above the limit forms its own chunk.
std::vector<Chunk> traditional_chunk(const Document& doc, std::size_t token_limit = kDefaultTokenLimit);

/// Splits after sentence i wherever 1 - cos(e_i, e_{i+1}) is strictly above
/// the given percentile of all adjacent distances.
std::vector<Chunk> semantic_chunk(const Document& doc, const Matrix& sentence_embeddings,
                                  double percentile = kDefaultBreakpointPercentile);
std::vector<Chunk> semantic_chunk(const Document& doc, Embedder& embedder,
                                  double percentile = kDefaultBreakpointPercentile);

/// Percentile with linear interpolation between order statistics.
double percentile_linear(std::vector<double> values, double percentile);

}  // namespace freechunk
