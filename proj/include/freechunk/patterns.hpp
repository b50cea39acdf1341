#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "freechunk/numerics.hpp"

namespace freechunk {

/// A non-empty, strictly increasing set of sentence indices treated as one
/// retrieval unit.
class ChunkPattern {
 public:
  /// Sorts and deduplicates; throws EmptyPattern on an empty set.
  explicit ChunkPattern(std::vector<std::size_t> indices);

  static ChunkPattern contiguous_range(std::size_t start, std::size_t end);

  const std::vector<std::size_t>& indices() const { return indices_; }
  std::size_t granularity() const { return indices_.size(); }
  std::size_t start() const { return indices_.front(); }
  std::size_t last() const { return indices_.back(); }
  bool contiguous() const { return last() - start() + 1 == indices_.size(); }
  bool contains(std::size_t index) const;

  friend bool operator==(const ChunkPattern&, const ChunkPattern&) = default;
  friend auto operator<=>(const ChunkPattern& a, const ChunkPattern& b) { return a.indices_ <=> b.indices_; }

 private:
  std::vector<std::size_t> indices_;
};

/// Ordered patterns over an n-sentence document. Row i of the mask belongs to
/// patterns()[i].
class PatternSet {
 public:
  PatternSet() = default;
  PatternSet(std::size_t n, std::vector<ChunkPattern> patterns);

  std::size_t sentence_count() const { return n_; }
  std::size_t size() const { return patterns_.size(); }
  const std::vector<ChunkPattern>& patterns() const { return patterns_; }
  const ChunkPattern& operator[](std::size_t i) const { return patterns_[i]; }

  friend bool operator==(const PatternSet&, const PatternSet&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<ChunkPattern> patterns_;
};

/// Window step per granularity. Without overrides the stride equals g, giving
/// non-overlapping windows.
struct StridePolicy {
  std::optional<std::size_t> uniform;
  std::map<std::size_t, std::size_t> per_granularity;

  std::size_t stride_for(std::size_t granularity) const;
};

inline const std::vector<std::size_t> kDefaultGranularities = {2, 4, 8, 16, 32};

/// Sliding windows [s, min(s+g, n)) for each granularity in ascending order.
/// Trailing partial windows are kept; repeated index sets are emitted once.
PatternSet build_sliding_patterns(std::size_t n, const std::vector<std::size_t>& granularities,
                                  const StridePolicy& stride = {});

/// Arbitrary (possibly non-contiguous) patterns in the given order.
PatternSet build_explicit_patterns(std::size_t n, const std::vector<std::vector<std::size_t>>& index_sets);

MaskMatrix pattern_to_mask(const PatternSet& patterns);

/// Inverse of pattern_to_mask: rows' unmasked columns as patterns.
PatternSet mask_to_patterns(const MaskMatrix& mask);

/// Sum of pattern sizes: the sentence encodings needed if every chunk were
/// embedded independently.
std::size_t independent_encoding_cost(const PatternSet& patterns);

/// Granularity list parsed from "g1,g2,...[:stride]".
struct GranularitySpec {
  std::vector<std::size_t> granularities;
  StridePolicy stride;
};

GranularitySpec parse_granularity_spec(std::string_view spec);
std::string format_granularity_spec(const GranularitySpec& spec);

/// Parses explicit index sets given as a JSON array of integer arrays.
std::vector<std::vector<std::size_t>> parse_index_sets_json(std::string_view json_text);

}  // namespace freechunk
