#include "freechunk/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <set>

#include <json.hpp>

#include "freechunk/baselines.hpp"
#include "freechunk/error.hpp"

namespace freechunk {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<float> row_vector(const Matrix& m, std::size_t r) {
  return std::vector<float>(m.row(r).begin(), m.row(r).end());
}

std::vector<std::string> sentence_texts(const Document& doc) {
  std::vector<std::string> texts;
  texts.reserve(doc.sentences.size());
  for (const auto& s : doc.sentences) texts.push_back(s.text);
  return texts;
}

}  // namespace

std::vector<CorpusRecord> read_corpus_jsonl(std::istream& in) {
  std::vector<CorpusRecord> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    CorpusRecord record;
    try {
      const auto j = nlohmann::json::parse(line);
      record.id = j.at("id").get<std::string>();
      record.text = j.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParseError, "corpus line " + std::to_string(line_no) + ": " + e.what());
    }
    if (record.text.empty()) {
      throw Error(ErrorCode::kParseError, "corpus line " + std::to_string(line_no) + ": empty text");
    }
    if (!ids.insert(record.id).second) {
      throw Error(ErrorCode::kParseError, "corpus line " + std::to_string(line_no) + ": duplicate id " + record.id);
    }
    out.push_back(std::move(record));
  }
  return out;
}

std::vector<CorpusRecord> read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open corpus " + path);
  return read_corpus_jsonl(in);
}

void write_corpus_jsonl(std::ostream& out, const std::vector<CorpusRecord>& corpus) {
  for (const auto& r : corpus) out << nlohmann::json{{"id", r.id}, {"text", r.text}}.dump() << '\n';
}

void write_sentences_jsonl(std::ostream& out, const std::vector<Document>& documents) {
  for (const auto& doc : documents) {
    for (const auto& s : doc.sentences) {
      out << nlohmann::json{{"doc_id", doc.id}, {"index", s.index}, {"text", s.text}, {"token_count", s.token_count}}
                 .dump()
          << '\n';
    }
  }
}

Method parse_method(std::string_view name) {
  if (name == "traditional") return Method::kTraditional;
  if (name == "semantic") return Method::kSemantic;
  if (name == "freechunk") return Method::kFreeChunk;
  throw Error(ErrorCode::kConfigError, "unknown method '" + std::string(name) + "'");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kTraditional: return "traditional";
    case Method::kSemantic: return "semantic";
    case Method::kFreeChunk: return "freechunk";
  }
  return "?";
}

PipelineResult run_pipeline(const std::vector<CorpusRecord>& corpus, Method method, const PipelineOptions& options,
                            Embedder& embedder, const EncoderWeights* weights) {
  if (method == Method::kFreeChunk && weights == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "freechunk indexing needs encoder weights");
  }
  CountingEmbedder counter(embedder);
  PipelineResult result;
  const auto pipeline_start = Clock::now();

  for (const auto& record : corpus) {
    try {
      auto t = Clock::now();
      auto doc = make_document(record.id, record.text, options.splitter);
      result.timings.sentencize += seconds_since(t);
      if (doc.sentences.empty()) {
        result.documents.push_back(std::move(doc));
        continue;
      }
      const auto texts = sentence_texts(doc);

      if (method == Method::kFreeChunk) {
        t = Clock::now();
        const auto patterns = build_sliding_patterns(doc.size(), options.granularities.granularities,
                                                     options.granularities.stride);
        result.timings.chunk += seconds_since(t);

        t = Clock::now();
        auto sentences = counter.embed(texts);
        if (sentences.cols() != weights->d) sentences = truncate_dimensions(sentences, weights->d);
        result.timings.embed += seconds_since(t);

        t = Clock::now();
        const auto chunks = encode_patterns(*weights, sentences, patterns);
        ++result.forward_passes;
        for (std::size_t i = 0; i < patterns.size(); ++i) {
          result.records.push_back({doc.id, patterns[i], row_vector(chunks.embeddings, i), 0});
        }
        result.timings.encode += seconds_since(t);
      } else {
        Matrix sentence_embeddings;
        std::vector<Chunk> chunks;
        t = Clock::now();
        if (method == Method::kTraditional) {
          chunks = traditional_chunk(doc, options.token_limit);
          result.timings.chunk += seconds_since(t);
        } else {
          // Boundary detection needs the sentence embeddings.
          sentence_embeddings = counter.embed(texts);
          const double embed_time = seconds_since(t);
          result.timings.embed += embed_time;
          const auto t_chunk = Clock::now();
          chunks = semantic_chunk(doc, sentence_embeddings, options.percentile);
          result.timings.chunk += seconds_since(t_chunk);
        }

        t = Clock::now();
        if (options.baseline_embedding == BaselineEmbedding::kDirect) {
          std::vector<std::string> chunk_texts;
          for (const auto& c : chunks) chunk_texts.push_back(c.text);
          const auto e = counter.embed(chunk_texts);
          result.timings.embed += seconds_since(t);
          for (std::size_t i = 0; i < chunks.size(); ++i) {
            result.records.push_back(
                {doc.id, ChunkPattern::contiguous_range(chunks[i].first, chunks[i].last + 1), row_vector(e, i), 0});
          }
        } else {
          if (sentence_embeddings.empty()) sentence_embeddings = counter.embed(texts);
          result.timings.embed += seconds_since(t);
          const auto t_pool = Clock::now();
          for (const auto& c : chunks) {
            auto pattern = ChunkPattern::contiguous_range(c.first, c.last + 1);
            auto v = mean_pool_teacher(sentence_embeddings, pattern);
            result.records.push_back({doc.id, std::move(pattern), std::move(v.values), 0});
          }
          result.timings.encode += seconds_since(t_pool);
        }
      }
      result.documents.push_back(std::move(doc));
    } catch (const Error& e) {
      throw Error(e.code(), "document " + record.id + ": " + e.detail());
    }
  }
  for (std::size_t i = 0; i < result.records.size(); ++i) result.records[i].ordinal = i;
  result.sentence_encodings = counter.texts_embedded();
  result.timings.total = seconds_since(pipeline_start);
  return result;
}

}  // namespace freechunk
