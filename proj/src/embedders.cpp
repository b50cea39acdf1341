#include "freechunk/embedders.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <future>
#include <optional>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "freechunk/error.hpp"
#include "freechunk/rng.hpp"

namespace freechunk {
namespace {

std::string normalize_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (const char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (space) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

void normalize_in_place(std::vector<float>& v) {
  double norm = 0.0;
  for (const float x : v) norm += static_cast<double>(x) * x;
  norm = std::sqrt(norm);
  if (norm == 0.0 || !std::isfinite(norm)) throw Error(ErrorCode::kZeroVector, "embedding has zero norm");
  for (auto& x : v) x = static_cast<float>(x / norm);
}

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path;
};

ParsedUrl parse_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::kConfigError, "base_url needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.scheme_host_port = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

std::string excerpt(const std::string& body) {
  constexpr std::size_t kMax = 200;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

std::vector<EmbeddingVector> parse_response(const std::string& body, std::size_t expected,
                                            const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedResponse, std::string("response is not JSON: ") + e.what());
  }
  if (!j.contains("data") || !j["data"].is_array()) {
    throw Error(ErrorCode::kMalformedResponse, "response has no data array");
  }
  const auto& data = j["data"];
  if (data.size() != expected) {
    throw Error(ErrorCode::kMalformedResponse, "expected " + std::to_string(expected) + " embeddings, got " +
                                                   std::to_string(data.size()));
  }
  std::vector<std::optional<EmbeddingVector>> slots(expected);
  std::size_t dim = 0;
  for (std::size_t pos = 0; pos < data.size(); ++pos) {
    const auto& item = data[pos];
    if (!item.is_object() || !item.contains("embedding") || !item["embedding"].is_array()) {
      throw Error(ErrorCode::kMalformedResponse, "data item " + std::to_string(pos) + " has no embedding");
    }
    const std::size_t index = item.contains("index") ? item["index"].get<std::size_t>() : pos;
    if (index >= expected || slots[index]) {
      throw Error(ErrorCode::kMalformedResponse, "bad or repeated index " + std::to_string(index));
    }
    EmbeddingVector v;
    v.source = source;
    for (const auto& x : item["embedding"]) {
      if (!x.is_number()) throw Error(ErrorCode::kMalformedResponse, "non-numeric embedding entry");
      v.values.push_back(x.get<float>());
    }
    if (v.values.empty()) throw Error(ErrorCode::kMalformedResponse, "empty embedding");
    if (dim == 0) dim = v.values.size();
    if (v.values.size() != dim) {
      throw Error(ErrorCode::kMalformedResponse, "embedding dimensions differ within one response (" +
                                                     std::to_string(dim) + " vs " +
                                                     std::to_string(v.values.size()) + ")");
    }
    try {
      normalize_in_place(v.values);
    } catch (const Error&) {
      throw Error(ErrorCode::kMalformedResponse, "zero or non-finite embedding at index " + std::to_string(index));
    }
    slots[index] = std::move(v);
  }
  std::vector<EmbeddingVector> out;
  out.reserve(expected);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

struct BatchOutcome {
  std::vector<EmbeddingVector> vectors;
  std::size_t attempts = 0;
};

BatchOutcome post_batch(std::span<const std::string> texts, const RemoteEmbedderConfig& config) {
  const auto url = parse_base_url(config.base_url);
  httplib::Client client(url.scheme_host_port);
  const auto timeout = std::chrono::duration<double>(config.timeout_seconds);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  httplib::Headers headers;
  if (const char* key = std::getenv(config.api_key_env.c_str()); key != nullptr && *key != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const nlohmann::json body = {{"model", config.model},
                               {"input", std::vector<std::string>(texts.begin(), texts.end())}};
  const std::string payload = body.dump();

  std::string last_failure;
  BatchOutcome outcome;
  for (std::size_t attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0) {
      const double wait = config.initial_backoff_seconds * std::pow(2.0, static_cast<double>(attempt - 1));
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
    ++outcome.attempts;
    auto res = client.Post(url.path + "/embeddings", headers, payload, "application/json");
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) {
      outcome.vectors = parse_response(res->body, texts.size(), "remote:" + config.model);
      return outcome;
    }
    if (res->status == 429 || res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    throw Error(ErrorCode::kRemoteRejected, "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body));
  }
  throw Error(ErrorCode::kRemoteUnavailable, "gave up after " + std::to_string(outcome.attempts) +
                                                 " attempts, last: " + last_failure);
}

}  // namespace

EmbeddingVector Embedder::embed_one(const std::string& text) {
  const auto m = embed(std::span<const std::string>(&text, 1));
  return {std::vector<float>(m.row(0).begin(), m.row(0).end()), source_tag()};
}

EmbeddingVector toy_embed(std::string_view text, std::size_t d, std::uint64_t seed) {
  if (d < 2) throw Error(ErrorCode::kInvalidArgument, "toy embedding dimension must be >= 2");
  Rng rng(hash_bytes(normalize_text(text), seed));
  EmbeddingVector out;
  out.source = "toy";
  out.values.resize(d);
  for (;;) {
    double norm = 0.0;
    std::vector<double> raw(d);
    for (auto& x : raw) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-12) continue;
    for (std::size_t i = 0; i < d; ++i) out.values[i] = static_cast<float>(raw[i] / norm);
    return out;
  }
}

ToyEmbedder::ToyEmbedder(std::size_t d, std::uint64_t seed) : d_(d), seed_(seed) {
  if (d < 2) throw Error(ErrorCode::kInvalidArgument, "toy embedding dimension must be >= 2");
}

Matrix ToyEmbedder::embed(std::span<const std::string> texts) {
  Matrix out(texts.size(), d_);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto v = toy_embed(texts[i], d_, seed_);
    std::copy(v.values.begin(), v.values.end(), out.row(i).begin());
  }
  return out;
}

Matrix CountingEmbedder::embed(std::span<const std::string> texts) {
  count_ += texts.size();
  return inner_.embed(texts);
}

void RemoteEmbedderConfig::validate() const {
  if (batch_size == 0) throw Error(ErrorCode::kConfigError, "batch_size must be >= 1");
  if (!(timeout_seconds > 0.0)) throw Error(ErrorCode::kConfigError, "timeout must be > 0");
  if (max_in_flight == 0) throw Error(ErrorCode::kConfigError, "max_in_flight must be >= 1");
  if (initial_backoff_seconds < 0.0) throw Error(ErrorCode::kConfigError, "backoff must be >= 0");
  parse_base_url(base_url);
}

std::vector<EmbeddingVector> remote_embed_batch(std::span<const std::string> texts,
                                                const RemoteEmbedderConfig& config, RemoteCallStats* stats) {
  config.validate();
  if (texts.empty()) throw Error(ErrorCode::kEmptyBatch, "no texts to embed");

  std::vector<std::span<const std::string>> batches;
  for (std::size_t start = 0; start < texts.size(); start += config.batch_size) {
    batches.push_back(texts.subspan(start, std::min(config.batch_size, texts.size() - start)));
  }
  std::vector<BatchOutcome> outcomes(batches.size());
  if (config.max_in_flight <= 1 || batches.size() == 1) {
    for (std::size_t b = 0; b < batches.size(); ++b) outcomes[b] = post_batch(batches[b], config);
  } else {
    for (std::size_t wave = 0; wave < batches.size(); wave += config.max_in_flight) {
      std::vector<std::future<BatchOutcome>> pending;
      const std::size_t end = std::min(batches.size(), wave + config.max_in_flight);
      for (std::size_t b = wave; b < end; ++b) {
        pending.push_back(std::async(std::launch::async, post_batch, batches[b], std::cref(config)));
      }
      for (std::size_t b = wave; b < end; ++b) outcomes[b] = pending[b - wave].get();
    }
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  std::size_t dim = 0;
  for (auto& o : outcomes) {
    if (stats) {
      ++stats->requests;
      stats->attempts += o.attempts;
    }
    for (auto& v : o.vectors) {
      if (dim == 0) dim = v.values.size();
      if (v.values.size() != dim) throw Error(ErrorCode::kMalformedResponse, "embedding dimensions differ across batches");
      out.push_back(std::move(v));
    }
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config) : config_(std::move(config)) { config_.validate(); }

Matrix RemoteEmbedder::embed(std::span<const std::string> texts) {
  if (texts.empty()) return Matrix(0, dimension_);
  const auto vectors = remote_embed_batch(texts, config_, &stats_);
  if (dimension_ == 0) dimension_ = vectors.front().values.size();
  Matrix out(vectors.size(), dimension_);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].values.size() != dimension_) {
      throw Error(ErrorCode::kMalformedResponse, "embedding dimension changed between calls");
    }
    std::copy(vectors[i].values.begin(), vectors[i].values.end(), out.row(i).begin());
  }
  return out;
}

TeacherMode parse_teacher_mode(std::string_view name) {
  if (name == "mean-pool") return TeacherMode::kMeanPool;
  if (name == "remote" || name == "remote-concat") return TeacherMode::kRemoteConcat;
  throw Error(ErrorCode::kConfigError, "unknown teacher mode '" + std::string(name) + "'");
}

std::string_view to_string(TeacherMode mode) {
  return mode == TeacherMode::kMeanPool ? "mean-pool" : "remote-concat";
}

EmbeddingVector mean_pool_teacher(const Matrix& sentences, const ChunkPattern& pattern) {
  if (pattern.last() >= sentences.rows()) {
    throw Error(ErrorCode::kIndexOutOfRange, "pattern index " + std::to_string(pattern.last()));
  }
  std::vector<double> acc(sentences.cols(), 0.0);
  for (const std::size_t i : pattern.indices()) {
    const auto row = sentences.row(i);
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += row[j];
  }
  double norm = 0.0;
  for (const double x : acc) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) throw Error(ErrorCode::kZeroVector, "pattern rows cancel out");
  EmbeddingVector out;
  out.source = "teacher";
  out.values.resize(acc.size());
  for (std::size_t j = 0; j < acc.size(); ++j) out.values[j] = static_cast<float>(acc[j] / norm);
  return out;
}

Matrix mean_pool_teacher(const Matrix& sentences, const PatternSet& patterns) {
  Matrix out(patterns.size(), sentences.cols());
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    const auto v = mean_pool_teacher(sentences, patterns[i]);
    std::copy(v.values.begin(), v.values.end(), out.row(i).begin());
  }
  return out;
}

std::string join_pattern_text(std::span<const std::string> sentence_texts, const ChunkPattern& pattern) {
  std::string out;
  for (const std::size_t i : pattern.indices()) {
    if (i >= sentence_texts.size()) throw Error(ErrorCode::kIndexOutOfRange, "sentence " + std::to_string(i));
    if (!out.empty()) out += kConcatJoiner;
    out += sentence_texts[i];
  }
  return out;
}

Matrix concat_teacher(std::span<const std::string> sentence_texts, const PatternSet& patterns, Embedder& embedder) {
  std::vector<std::string> texts;
  texts.reserve(patterns.size());
  for (const auto& p : patterns.patterns()) texts.push_back(join_pattern_text(sentence_texts, p));
  return embedder.embed(texts);
}

}  // namespace freechunk
