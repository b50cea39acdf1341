#include "freechunk/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "freechunk/error.hpp"
#include "freechunk/rng.hpp"

namespace freechunk {
namespace {

std::string make_word(Rng& rng) {
  static constexpr std::string_view kConsonants = "bcdfghklmnprstvz";
  static constexpr std::string_view kVowels = "aeiou";
  const std::size_t syllables = 1 + rng.below(3);
  std::string word;
  for (std::size_t i = 0; i < syllables; ++i) {
    word += kConsonants[rng.below(kConsonants.size())];
    word += kVowels[rng.below(kVowels.size())];
  }
  return word;
}

std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

void check_positive(std::size_t value, const char* name) {
  if (value == 0) throw Error(ErrorCode::kInvalidArgument, std::string(name) + " must be positive");
}

}  // namespace

std::vector<CorpusRecord> generate_corpus(const CorpusGeneratorConfig& config) {
  check_positive(config.min_sentences, "min_sentences");
  check_positive(config.min_words, "min_words");
  check_positive(config.vocabulary, "vocabulary");
  if (config.max_sentences < config.min_sentences || config.max_words < config.min_words) {
    throw Error(ErrorCode::kInvalidArgument, "corpus generator ranges are inverted");
  }
  Rng rng(config.seed);
  std::vector<std::string> vocabulary;
  vocabulary.reserve(config.vocabulary);
  // Words that read as abbreviations would hide sentence boundaries.
  const auto& abbreviations = default_abbreviations();
  while (vocabulary.size() < config.vocabulary) {
    auto word = make_word(rng);
    if (!abbreviations.contains(word + ".")) vocabulary.push_back(std::move(word));
  }

  std::vector<CorpusRecord> corpus;
  corpus.reserve(config.documents);
  for (std::size_t doc = 0; doc < config.documents; ++doc) {
    const std::size_t n = between(rng, config.min_sentences, config.max_sentences);
    std::string text;
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t words = between(rng, config.min_words, config.max_words);
      if (!text.empty()) text += ' ';
      for (std::size_t w = 0; w < words; ++w) {
        std::string word = vocabulary[rng.below(vocabulary.size())];
        if (w == 0) word[0] = static_cast<char>(word[0] - 'a' + 'A');
        else text += ' ';
        text += word;
      }
      text += '.';
    }
    char id[32];
    std::snprintf(id, sizeof id, "doc-%05zu", doc);
    corpus.push_back({id, std::move(text)});
  }
  return corpus;
}

std::vector<TrainingDocument> make_training_documents(const std::vector<CorpusRecord>& corpus, Embedder& embedder,
                                                      const SentenceSplitter& splitter) {
  std::vector<TrainingDocument> out;
  out.reserve(corpus.size());
  for (const auto& record : corpus) {
    const auto doc = make_document(record.id, record.text, splitter);
    if (doc.sentences.empty()) continue;
    TrainingDocument td;
    td.id = doc.id;
    for (const auto& s : doc.sentences) td.sentence_texts.push_back(s.text);
    td.sentences = embedder.embed(td.sentence_texts);
    out.push_back(std::move(td));
  }
  return out;
}

TeacherProvider mean_pool_teacher_provider() {
  return [](const TrainingDocument& doc, const PatternSet& patterns) {
    return mean_pool_teacher(doc.sentences, patterns);
  };
}

std::vector<NeedleQuery> make_needle_queries(const std::vector<Document>& documents, Embedder& embedder,
                                             std::size_t count, std::size_t granularity, std::uint64_t seed) {
  check_positive(granularity, "needle granularity");
  std::vector<const Document*> eligible;
  for (const auto& doc : documents) {
    if (doc.size() >= granularity) eligible.push_back(&doc);
  }
  if (count > 0 && eligible.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no document has " + std::to_string(granularity) + " sentences");
  }
  Rng rng(derive_seed(seed, 3));
  std::vector<NeedleQuery> queries;
  queries.reserve(count);
  for (std::size_t q = 0; q < count; ++q) {
    const Document& doc = *eligible[rng.below(eligible.size())];
    const std::size_t first = rng.below(doc.size() - granularity + 1);
    std::vector<std::string> texts;
    for (std::size_t i = first; i < first + granularity; ++i) texts.push_back(doc.sentences[i].text);
    const Matrix e = embedder.embed(texts);
    auto pooled = mean_pool_teacher(e, ChunkPattern::contiguous_range(0, granularity));
    queries.push_back({doc.id, first, first + granularity - 1, std::move(pooled.values)});
  }
  return queries;
}

EvalReport score_queries(const ChunkIndex& index, const std::vector<NeedleQuery>& queries) {
  EvalReport report;
  report.queries = queries.size();
  if (queries.empty()) return report;
  std::size_t hits1 = 0, hits5 = 0, hits10 = 0;
  double reciprocal = 0.0;
  for (const auto& q : queries) {
    const auto hits = index.query_top_k(q.embedding, 10);
    std::size_t first_rank = 0;
    for (const auto& hit : hits) {
      if (hit.record.doc_id != q.doc_id) continue;
      const auto& idx = hit.record.pattern.indices();
      const bool overlaps = std::any_of(idx.begin(), idx.end(), [&](std::size_t i) { return i >= q.first && i <= q.last; });
      if (overlaps) {
        first_rank = hit.rank;
        break;
      }
    }
    if (first_rank == 0) continue;
    hits1 += first_rank <= 1;
    hits5 += first_rank <= 5;
    hits10 += first_rank <= 10;
    reciprocal += 1.0 / static_cast<double>(first_rank);
  }
  const double n = static_cast<double>(queries.size());
  report.hit_at_1 = hits1 / n;
  report.hit_at_5 = hits5 / n;
  report.hit_at_10 = hits10 / n;
  report.mrr = reciprocal / n;
  return report;
}

std::vector<EvalReport> synth_eval(const SynthEvalConfig& config, const EncoderWeights* weights) {
  check_positive(config.documents, "documents");
  check_positive(config.sentences_per_doc, "sentences per doc");
  check_positive(config.needle_granularity, "needle granularity");
  if (weights != nullptr && weights->d != config.d) {
    throw Error(ErrorCode::kShapeMismatch, "encoder d " + std::to_string(weights->d) + " != eval d " +
                                               std::to_string(config.d));
  }
  CorpusGeneratorConfig gen;
  gen.documents = config.documents;
  gen.min_sentences = gen.max_sentences = config.sentences_per_doc;
  gen.seed = derive_seed(config.seed, 1);
  const auto corpus = generate_corpus(gen);

  ToyEmbedder embedder(config.d, derive_seed(config.seed, 2));
  std::vector<Method> methods = {Method::kTraditional, Method::kSemantic};
  if (weights != nullptr) methods.push_back(Method::kFreeChunk);

  std::vector<EvalReport> reports;
  std::vector<NeedleQuery> queries;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    auto result = run_pipeline(corpus, methods[m], config.pipeline, embedder, weights);
    if (m == 0) {
      queries = make_needle_queries(result.documents, embedder, config.queries, config.needle_granularity,
                                    config.seed);
    }
    EvalReport report;
    if (!queries.empty()) {
      ChunkIndex index;
      index.add_chunks(std::move(result.records));
      report = score_queries(index, queries);
      report.chunk_count = index.size();
    } else {
      report.chunk_count = result.records.size();
    }
    report.method = std::string(to_string(methods[m]));
    report.chunking_seconds = result.timings.chunking();
    report.encoding_seconds = result.timings.encoding();
    report.sentence_encodings = result.sentence_encodings;
    reports.push_back(std::move(report));
  }
  if (queries.empty()) return {};
  return reports;
}

namespace {

constexpr const char* kMetricNote =
    "# retrieval hit metrics: a hit means a top-k chunk overlaps the planted needle span; these are not "
    "generator QA accuracies";

}  // namespace

std::string format_eval_text(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << kMetricNote << '\n';
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %7s %7s %7s %7s %7s %10s %10s %9s %7s\n", "method", "queries", "hit@1",
                "hit@5", "hit@10", "mrr", "chunk_s", "encode_s", "encodings", "chunks");
  out << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-12s %7zu %7.4f %7.4f %7.4f %7.4f %10.4f %10.4f %9zu %7zu\n", r.method.c_str(),
                  r.queries, r.hit_at_1, r.hit_at_5, r.hit_at_10, r.mrr, r.chunking_seconds, r.encoding_seconds,
                  r.sentence_encodings, r.chunk_count);
    out << line;
  }
  return out.str();
}

std::string format_eval_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << kMetricNote << '\n';
  out << "method,queries,hit_at_1,hit_at_5,hit_at_10,mrr,chunking_seconds,encoding_seconds,sentence_encodings,"
         "chunk_count\n";
  char line[256];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%s,%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%zu,%zu\n", r.method.c_str(), r.queries,
                  r.hit_at_1, r.hit_at_5, r.hit_at_10, r.mrr, r.chunking_seconds, r.encoding_seconds,
                  r.sentence_encodings, r.chunk_count);
    out << line;
  }
  return out.str();
}

}  // namespace freechunk
