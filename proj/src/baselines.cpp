#include "freechunk/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "freechunk/error.hpp"

namespace freechunk {
namespace {

Chunk make_chunk(const Document& doc, std::size_t first, std::size_t last) {
  Chunk c;
  c.doc_id = doc.id;
  c.first = first;
  c.last = last;
  const auto begin = doc.sentences[first].span.begin;
  const auto end = doc.sentences[last].span.end;
  c.text = doc.text.substr(begin, end - begin);
  for (std::size_t i = first; i <= last; ++i) c.token_count += doc.sentences[i].token_count;
  return c;
}

}  // namespace

std::vector<Chunk> traditional_chunk(const Document& doc, std::size_t token_limit) {
  if (token_limit == 0) throw Error(ErrorCode::kInvalidArgument, "token limit must be >= 1");
  std::vector<Chunk> out;
  const auto& s = doc.sentences;
  std::size_t first = 0;
  std::size_t running = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > first && running + s[i].token_count > token_limit) {
      out.push_back(make_chunk(doc, first, i - 1));
      first = i;
      running = 0;
    }
    running += s[i].token_count;
  }
  if (!s.empty()) out.push_back(make_chunk(doc, first, s.size() - 1));
  return out;
}

double percentile_linear(std::vector<double> values, double percentile) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "percentile of an empty set");
  if (percentile < 0.0 || percentile > 100.0) throw Error(ErrorCode::kInvalidArgument, "percentile outside [0, 100]");
  std::sort(values.begin(), values.end());
  const double rank = percentile / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = static_cast<std::size_t>(std::ceil(rank));
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

std::vector<Chunk> semantic_chunk(const Document& doc, const Matrix& sentence_embeddings, double percentile) {
  const std::size_t n = doc.sentences.size();
  if (n == 0) return {};
  if (sentence_embeddings.rows() != n) {
    throw Error(ErrorCode::kShapeMismatch, "document " + doc.id + " has " + std::to_string(n) + " sentences but " +
                                               std::to_string(sentence_embeddings.rows()) + " embeddings");
  }
  if (n == 1) return {make_chunk(doc, 0, 0)};
  std::vector<double> distances(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    distances[i] = 1.0 - cosine(sentence_embeddings.row(i), sentence_embeddings.row(i + 1));
  }
  const double threshold = percentile_linear(distances, percentile);
  std::vector<Chunk> out;
  std::size_t first = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (distances[i] > threshold) {
      out.push_back(make_chunk(doc, first, i));
      first = i + 1;
    }
  }
  out.push_back(make_chunk(doc, first, n - 1));
  return out;
}

std::vector<Chunk> semantic_chunk(const Document& doc, Embedder& embedder, double percentile) {
  if (doc.sentences.empty()) return {};
  std::vector<std::string> texts;
  texts.reserve(doc.sentences.size());
  for (const auto& s : doc.sentences) texts.push_back(s.text);
  return semantic_chunk(doc, embedder.embed(texts), percentile);
}

}  // namespace freechunk
