#include "freechunk/patterns.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include <json.hpp>

#include "freechunk/error.hpp"

namespace freechunk {
namespace {

std::size_t parse_positive(std::string_view text, std::string_view what) {
  std::size_t value = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || value == 0) {
    throw Error(ErrorCode::kParseError, std::string(what) + " must be a positive integer, got '" +
                                            std::string(text) + "'");
  }
  return value;
}

}  // namespace

ChunkPattern::ChunkPattern(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
  if (indices_.empty()) throw Error(ErrorCode::kEmptyPattern, "chunk pattern has no sentences");
}

ChunkPattern ChunkPattern::contiguous_range(std::size_t start, std::size_t end) {
  std::vector<std::size_t> indices;
  for (std::size_t i = start; i < end; ++i) indices.push_back(i);
  return ChunkPattern(std::move(indices));
}

bool ChunkPattern::contains(std::size_t index) const {
  return std::binary_search(indices_.begin(), indices_.end(), index);
}

PatternSet::PatternSet(std::size_t n, std::vector<ChunkPattern> patterns)
    : n_(n), patterns_(std::move(patterns)) {
  for (std::size_t i = 0; i < patterns_.size(); ++i) {
    if (patterns_[i].last() >= n_) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "pattern " + std::to_string(i) + " index " + std::to_string(patterns_[i].last()) +
                      " >= sentence count " + std::to_string(n_));
    }
  }
}

std::size_t StridePolicy::stride_for(std::size_t granularity) const {
  if (const auto it = per_granularity.find(granularity); it != per_granularity.end()) return it->second;
  return uniform.value_or(granularity);
}

PatternSet build_sliding_patterns(std::size_t n, const std::vector<std::size_t>& granularities,
                                  const StridePolicy& stride) {
  if (n == 0) throw Error(ErrorCode::kEmptyDocument, "cannot build patterns for 0 sentences");
  if (granularities.empty()) throw Error(ErrorCode::kNoGranularities, "granularity set is empty");
  std::set<std::size_t> ordered(granularities.begin(), granularities.end());
  if (ordered.contains(0)) throw Error(ErrorCode::kInvalidArgument, "granularity 0");

  std::vector<ChunkPattern> patterns;
  std::set<std::pair<std::size_t, std::size_t>> seen;  // contiguous [start, end)
  for (const std::size_t g : ordered) {
    const std::size_t step = stride.stride_for(g);
    if (step == 0) throw Error(ErrorCode::kInvalidArgument, "stride 0 for granularity " + std::to_string(g));
    for (std::size_t s = 0; s < n; s += step) {
      const std::size_t end = std::min(s + g, n);
      if (seen.emplace(s, end).second) patterns.push_back(ChunkPattern::contiguous_range(s, end));
    }
  }
  return PatternSet(n, std::move(patterns));
}

PatternSet build_explicit_patterns(std::size_t n, const std::vector<std::vector<std::size_t>>& index_sets) {
  std::vector<ChunkPattern> patterns;
  patterns.reserve(index_sets.size());
  for (std::size_t pos = 0; pos < index_sets.size(); ++pos) {
    for (const std::size_t index : index_sets[pos]) {
      if (index >= n) {
        throw Error(ErrorCode::kIndexOutOfRange,
                    "set " + std::to_string(pos) + " index " + std::to_string(index));
      }
    }
    patterns.emplace_back(index_sets[pos]);
  }
  return PatternSet(n, std::move(patterns));
}

MaskMatrix pattern_to_mask(const PatternSet& patterns) {
  MaskMatrix mask(patterns.size(), patterns.sentence_count());
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    for (const std::size_t j : patterns[i].indices()) mask.allow(i, j);
  }
  return mask;
}

PatternSet mask_to_patterns(const MaskMatrix& mask) {
  std::vector<ChunkPattern> patterns;
  for (std::size_t i = 0; i < mask.rows(); ++i) {
    std::vector<std::size_t> indices;
    for (std::size_t j = 0; j < mask.cols(); ++j) {
      if (!mask.is_masked(i, j)) indices.push_back(j);
    }
    if (indices.empty()) throw Error(ErrorCode::kAllMaskedRow, "row " + std::to_string(i));
    patterns.emplace_back(std::move(indices));
  }
  return PatternSet(mask.cols(), std::move(patterns));
}

std::size_t independent_encoding_cost(const PatternSet& patterns) {
  std::size_t total = 0;
  for (const auto& p : patterns.patterns()) total += p.granularity();
  return total;
}

GranularitySpec parse_granularity_spec(std::string_view spec) {
  GranularitySpec out;
  std::string_view list = spec;
  if (const auto colon = spec.find(':'); colon != std::string_view::npos) {
    list = spec.substr(0, colon);
    out.stride.uniform = parse_positive(spec.substr(colon + 1), "stride");
  }
  while (!list.empty()) {
    const auto comma = list.find(',');
    const auto item = list.substr(0, comma);
    out.granularities.push_back(parse_positive(item, "granularity"));
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  if (out.granularities.empty()) throw Error(ErrorCode::kNoGranularities, "empty granularity spec");
  return out;
}

std::string format_granularity_spec(const GranularitySpec& spec) {
  std::string out;
  for (std::size_t i = 0; i < spec.granularities.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(spec.granularities[i]);
  }
  if (spec.stride.uniform) out += ":" + std::to_string(*spec.stride.uniform);
  return out;
}

std::vector<std::vector<std::size_t>> parse_index_sets_json(std::string_view json_text) {
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("index sets: ") + e.what());
  }
  if (!parsed.is_array()) throw Error(ErrorCode::kParseError, "index sets must be a JSON array");
  std::vector<std::vector<std::size_t>> out;
  for (const auto& set : parsed) {
    if (!set.is_array()) throw Error(ErrorCode::kParseError, "each index set must be an array");
    std::vector<std::size_t> indices;
    for (const auto& v : set) {
      if (!v.is_number_unsigned()) throw Error(ErrorCode::kParseError, "indices must be non-negative integers");
      indices.push_back(v.get<std::size_t>());
    }
    out.push_back(std::move(indices));
  }
  return out;
}

}  // namespace freechunk
