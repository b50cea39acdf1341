#include "freechunk/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>

#include <json.hpp>

#include "freechunk/error.hpp"

namespace freechunk {

double retrieval_score(std::span<const float> query, std::span<const float> record) {
  double dot = 0.0;
  double qq = 0.0;
  for (std::size_t i = 0; i < query.size(); ++i) {
    dot += static_cast<double>(query[i]) * record[i];
    qq += static_cast<double>(query[i]) * query[i];
  }
  return dot / std::sqrt(qq);
}

namespace {

bool record_ranks_before(double score_a, const ChunkRecord& a, double score_b, const ChunkRecord& b) {
  if (score_a != score_b) return score_a > score_b;
  if (a.pattern.granularity() != b.pattern.granularity()) return a.pattern.granularity() < b.pattern.granularity();
  if (a.pattern.start() != b.pattern.start()) return a.pattern.start() < b.pattern.start();
  return a.ordinal < b.ordinal;
}

}  // namespace

bool ranks_before(const RetrievalHit& a, const RetrievalHit& b) {
  return record_ranks_before(a.score, a.record, b.score, b.record);
}

ChunkIndex::ChunkIndex(ChunkIndex&& other) noexcept {
  std::unique_lock lock(other.mutex_);
  records_ = std::move(other.records_);
  slots_ = std::move(other.slots_);
  next_ordinal_ = other.next_ordinal_;
  dimension_ = other.dimension_;
}

std::size_t ChunkIndex::add_chunks(std::vector<ChunkRecord> records) {
  std::size_t dim = dimension();
  for (const auto& r : records) {
    if (r.embedding.empty()) throw Error(ErrorCode::kShapeMismatch, "record for " + r.doc_id + " has no embedding");
    if (dim == 0) dim = r.embedding.size();
    if (r.embedding.size() != dim) {
      throw Error(ErrorCode::kShapeMismatch, "record for " + r.doc_id + " has dimension " +
                                                 std::to_string(r.embedding.size()) + ", index uses " +
                                                 std::to_string(dim));
    }
    double norm = 0.0;
    for (const float x : r.embedding) norm += static_cast<double>(x) * x;
    norm = std::sqrt(norm);
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > kUnitNormTolerance) {
      throw Error(ErrorCode::kNotUnitNorm, "record for " + r.doc_id + " has norm " + std::to_string(norm));
    }
  }

  std::unique_lock lock(mutex_);
  const std::size_t before = records_.size();
  dimension_ = dim;
  for (auto& r : records) {
    r.ordinal = next_ordinal_++;
    auto key = std::make_pair(r.doc_id, r.pattern.indices());
    if (const auto it = slots_.find(key); it != slots_.end()) {
      records_[it->second] = std::move(r);
    } else {
      slots_.emplace(std::move(key), records_.size());
      records_.push_back(std::move(r));
    }
  }
  return records_.size() - before;
}

std::vector<RetrievalHit> ChunkIndex::query_top_k(std::span<const float> query, std::size_t k) const {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  std::shared_lock lock(mutex_);
  if (records_.empty()) throw Error(ErrorCode::kEmptyIndex, "query against an empty index");
  if (query.size() != dimension_) {
    throw Error(ErrorCode::kShapeMismatch, "query dimension " + std::to_string(query.size()) +
                                               " vs index dimension " + std::to_string(dimension_));
  }
  double qq = 0.0;
  for (const float x : query) qq += static_cast<double>(x) * x;
  if (qq == 0.0) throw Error(ErrorCode::kZeroVector, "query has zero norm");

  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) scored.emplace_back(retrieval_score(query, records_[i].embedding), i);
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                    [this](const auto& a, const auto& b) {
                      return record_ranks_before(a.first, records_[a.second], b.first, records_[b.second]);
                    });
  std::vector<RetrievalHit> hits;
  hits.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) hits.push_back({records_[scored[i].second], scored[i].first, i + 1});
  return hits;
}

std::size_t ChunkIndex::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

std::size_t ChunkIndex::dimension() const {
  std::shared_lock lock(mutex_);
  return dimension_;
}

std::vector<ChunkRecord> ChunkIndex::records() const {
  std::shared_lock lock(mutex_);
  return records_;
}

AssembledContext assemble_context(const std::vector<RetrievalHit>& hits, const SentencesByDoc& sentences,
                                  std::size_t token_budget) {
  if (token_budget == 0) throw Error(ErrorCode::kInvalidArgument, "token budget must be >= 1");
  AssembledContext out;
  std::map<std::string, std::set<std::size_t>> chosen;
  std::vector<std::string> doc_order;

  for (const auto& hit : hits) {
    const auto doc_it = sentences.find(hit.record.doc_id);
    if (doc_it == sentences.end()) {
      throw Error(ErrorCode::kIndexOutOfRange, "no sentences for document " + hit.record.doc_id);
    }
    const auto& doc_sentences = doc_it->second;
    auto& seen = chosen[hit.record.doc_id];
    std::size_t added = 0;
    std::vector<std::size_t> fresh;
    for (const std::size_t i : hit.record.pattern.indices()) {
      if (i >= doc_sentences.size()) {
        throw Error(ErrorCode::kIndexOutOfRange, hit.record.doc_id + " sentence " + std::to_string(i));
      }
      if (seen.contains(i)) continue;
      fresh.push_back(i);
      added += count_tokens(doc_sentences[i].text);
    }
    if (out.tokens + added > token_budget) {
      out.budget_exhausted = true;
      break;
    }
    if (seen.empty() && !fresh.empty()) doc_order.push_back(hit.record.doc_id);
    seen.insert(fresh.begin(), fresh.end());
    out.tokens += added;
    ++out.hits_used;
  }

  for (const auto& doc_id : doc_order) {
    ContextBlock block;
    block.doc_id = doc_id;
    const auto& doc_sentences = sentences.at(doc_id);
    for (const std::size_t i : chosen[doc_id]) {
      block.sentence_indices.push_back(i);
      if (!block.text.empty()) block.text += ' ';
      block.text += doc_sentences[i].text;
    }
    out.blocks.push_back(std::move(block));
  }
  return out;
}

void write_index_jsonl(std::ostream& out, const std::vector<ChunkRecord>& records) {
  for (const auto& r : records) {
    nlohmann::json j;
    j["doc_id"] = r.doc_id;
    j["indices"] = r.pattern.indices();
    j["g"] = r.pattern.granularity();
    j["s"] = r.pattern.start();
    j["embedding"] = r.embedding;
    out << j.dump() << '\n';
  }
}

std::vector<ChunkRecord> read_index_jsonl(std::istream& in) {
  std::vector<ChunkRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ChunkRecord r{j.at("doc_id").get<std::string>(),
                    ChunkPattern(j.at("indices").get<std::vector<std::size_t>>()),
                    j.at("embedding").get<std::vector<float>>(), 0};
      if (j.contains("g") && j["g"].get<std::size_t>() != r.pattern.granularity()) {
        throw Error(ErrorCode::kParseError, "g disagrees with indices");
      }
      if (j.contains("s") && j["s"].get<std::size_t>() != r.pattern.start()) {
        throw Error(ErrorCode::kParseError, "s disagrees with indices");
      }
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParseError, "index line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "index line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void save_index(const std::string& path, const ChunkIndex& index) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  write_index_jsonl(out, index.records());
}

ChunkIndex load_index(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  ChunkIndex index;
  index.add_chunks(read_index_jsonl(in));
  return index;
}

}  // namespace freechunk
