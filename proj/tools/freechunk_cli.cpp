// freechunk command-line driver.
//
// Exit status: 0 success, 1 usage or configuration error, 2 data error,
// 3 remote embedding service error.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "freechunk/baselines.hpp"
#include "freechunk/config.hpp"
#include "freechunk/embedders.hpp"
#include "freechunk/encoder.hpp"
#include "freechunk/error.hpp"
#include "freechunk/pipeline.hpp"
#include "freechunk/retrieval.hpp"
#include "freechunk/synthetic.hpp"
#include "freechunk/theory.hpp"
#include "freechunk/training.hpp"
#include "freechunk/weights_io.hpp"

namespace fc = freechunk;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRemote = 3;

int exit_code_for(fc::ErrorCode code) {
  switch (code) {
    case fc::ErrorCode::kRemoteRejected:
    case fc::ErrorCode::kRemoteUnavailable:
    case fc::ErrorCode::kMalformedResponse:
      return kExitRemote;
    case fc::ErrorCode::kConfigError:
    case fc::ErrorCode::kInvalidArgument:
      return kExitUsage;
    default:
      return kExitData;
  }
}

// Every config key is also a flag (underscores become dashes). Only flags the
// user actually passed take part in resolution.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON settings file")->group("Settings");
    const json defaults = fc::config_to_json(fc::Config{});
    for (auto it = defaults.begin(); it != defaults.end(); ++it) {
      const std::string key = it.key();
      std::string flag = key;
      for (char& c : flag) {
        if (c == '_') c = '-';
      }
      options[key] = app->add_option("--" + flag, values[key], "default: " + it.value().dump())->group("Settings");
    }
  }

  fc::Config resolve() const {
    std::map<std::string, std::string> passed;
    for (const auto& [key, option] : options) {
      if (option->count() > 0) passed[key] = values.at(key);
    }
    std::optional<std::string> path;
    if (!config_path.empty()) path = config_path;
    return fc::config_load(path, fc::process_environment(), passed);
  }
};

std::unique_ptr<fc::Embedder> make_embedder(const fc::Config& cfg) {
  if (cfg.embedder == "toy") return std::make_unique<fc::ToyEmbedder>(cfg.d, cfg.seed);
  if (cfg.embedder == "remote") return std::make_unique<fc::RemoteEmbedder>(cfg.remote());
  throw fc::Error(fc::ErrorCode::kConfigError, "embedder must be toy or remote, got '" + cfg.embedder + "'");
}

fc::SentenceSplitter make_splitter(const std::string& abbreviations_path) {
  if (abbreviations_path.empty()) return fc::SentenceSplitter();
  return fc::SentenceSplitter(fc::load_abbreviations(abbreviations_path));
}

// Writes to the named file, or stdout for "" and "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw fc::Error(fc::ErrorCode::kIoError, "cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fc::Error(fc::ErrorCode::kIoError, "cannot write " + path);
  out << text;
}

fc::PipelineOptions pipeline_options(const fc::Config& cfg, const std::string& abbreviations) {
  fc::PipelineOptions options;
  options.granularities = fc::parse_granularity_spec(cfg.granularities);
  options.token_limit = cfg.token_limit;
  options.percentile = cfg.percentile;
  options.splitter = make_splitter(abbreviations);
  return options;
}

fc::BaselineEmbedding parse_baseline_embedding(const std::string& name) {
  if (name == "direct") return fc::BaselineEmbedding::kDirect;
  if (name == "mean-pool") return fc::BaselineEmbedding::kMeanPool;
  throw fc::Error(fc::ErrorCode::kConfigError, "baseline embedding must be direct or mean-pool");
}

json timings_json(const fc::StageTimings& t) {
  return {{"sentencize", t.sentencize}, {"chunk", t.chunk}, {"embed", t.embed},
          {"encode", t.encode},         {"total", t.total}};
}

fc::EncoderWeights require_weights(const fc::Config& cfg) {
  if (cfg.weights.empty()) throw fc::Error(fc::ErrorCode::kConfigError, "--weights is required for freechunk");
  return fc::load_weights(cfg.weights);
}

// ---------------------------------------------------------------------------

struct SentencizeArgs {
  ConfigFlags settings;
  std::string corpus, out, abbreviations;
};

int run_sentencize(const SentencizeArgs& a) {
  a.settings.resolve();
  const auto corpus = fc::read_corpus_file(a.corpus);
  const auto splitter = make_splitter(a.abbreviations);
  std::vector<fc::Document> docs;
  for (const auto& r : corpus) docs.push_back(fc::make_document(r.id, r.text, splitter));
  Output out(a.out);
  fc::write_sentences_jsonl(out.stream(), docs);
  return kExitOk;
}

struct ChunkArgs {
  ConfigFlags settings;
  std::string corpus, out, abbreviations, method = "traditional", patterns_json;
};

int run_chunk(const ChunkArgs& a) {
  const auto cfg = a.settings.resolve();
  const auto method = fc::parse_method(a.method);
  const auto corpus = fc::read_corpus_file(a.corpus);
  const auto splitter = make_splitter(a.abbreviations);
  std::optional<std::vector<std::vector<std::size_t>>> explicit_sets;
  if (!a.patterns_json.empty()) {
    std::ifstream in(a.patterns_json);
    if (!in) throw fc::Error(fc::ErrorCode::kIoError, "cannot open " + a.patterns_json);
    std::stringstream buffer;
    buffer << in.rdbuf();
    explicit_sets = fc::parse_index_sets_json(buffer.str());
  }
  std::unique_ptr<fc::Embedder> embedder;
  if (method == fc::Method::kSemantic) embedder = make_embedder(cfg);

  Output out(a.out);
  for (const auto& record : corpus) {
    const auto doc = fc::make_document(record.id, record.text, splitter);
    if (doc.sentences.empty()) continue;
    try {
      if (method == fc::Method::kFreeChunk) {
        std::vector<std::string> texts;
        for (const auto& s : doc.sentences) texts.push_back(s.text);
        const auto spec = fc::parse_granularity_spec(cfg.granularities);
        const auto patterns = explicit_sets ? fc::build_explicit_patterns(doc.size(), *explicit_sets)
                                            : fc::build_sliding_patterns(doc.size(), spec.granularities, spec.stride);
        for (const auto& p : patterns.patterns()) {
          out.stream() << json{{"doc_id", doc.id}, {"method", "freechunk"}, {"indices", p.indices()},
                               {"text", fc::join_pattern_text(texts, p)}}
                              .dump()
                       << '\n';
        }
      } else {
        const auto chunks = method == fc::Method::kTraditional
                                ? fc::traditional_chunk(doc, cfg.token_limit)
                                : fc::semantic_chunk(doc, *embedder, cfg.percentile);
        for (const auto& c : chunks) {
          std::vector<std::size_t> indices;
          for (std::size_t i = c.first; i <= c.last; ++i) indices.push_back(i);
          out.stream() << json{{"doc_id", doc.id}, {"method", std::string(fc::to_string(method))},
                               {"indices", indices}, {"text", c.text}, {"token_count", c.token_count}}
                              .dump()
                       << '\n';
        }
      }
    } catch (const fc::Error& e) {
      throw fc::Error(e.code(), "document " + doc.id + ": " + e.detail());
    }
  }
  return kExitOk;
}

struct EncodeArgs {
  ConfigFlags settings;
  std::string corpus, out, abbreviations;
};

// Sentence embeddings from the base embedder, one JSON object per sentence.
int run_encode(const EncodeArgs& a) {
  const auto cfg = a.settings.resolve();
  const auto corpus = fc::read_corpus_file(a.corpus);
  const auto splitter = make_splitter(a.abbreviations);
  auto embedder = make_embedder(cfg);
  Output out(a.out);
  for (const auto& record : corpus) {
    const auto doc = fc::make_document(record.id, record.text, splitter);
    if (doc.sentences.empty()) continue;
    std::vector<std::string> texts;
    for (const auto& s : doc.sentences) texts.push_back(s.text);
    const auto e = embedder->embed(texts);
    for (std::size_t i = 0; i < e.rows(); ++i) {
      out.stream() << json{{"doc_id", doc.id}, {"index", i}, {"source", embedder->source_tag()},
                           {"embedding", std::vector<float>(e.row(i).begin(), e.row(i).end())}}
                          .dump()
                   << '\n';
    }
  }
  return kExitOk;
}

struct TrainArgs {
  ConfigFlags settings;
  std::string corpus, out, history, abbreviations;
  std::size_t synthetic_docs = 0;
  double validation_fraction = 0.1;
};

int run_train(const TrainArgs& a) {
  const auto cfg = a.settings.resolve();
  if (a.out.empty()) throw fc::Error(fc::ErrorCode::kConfigError, "--out is required");
  if (a.validation_fraction < 0.0 || a.validation_fraction >= 1.0) {
    throw fc::Error(fc::ErrorCode::kConfigError, "--validation-fraction must be in [0, 1)");
  }
  std::vector<fc::CorpusRecord> corpus;
  if (!a.corpus.empty()) {
    corpus = fc::read_corpus_file(a.corpus);
  } else if (a.synthetic_docs > 0) {
    fc::CorpusGeneratorConfig gen;
    gen.documents = a.synthetic_docs;
    gen.seed = cfg.seed;
    corpus = fc::generate_corpus(gen);
  } else {
    throw fc::Error(fc::ErrorCode::kConfigError, "pass --corpus or --synthetic-docs");
  }

  auto embedder = make_embedder(cfg);
  auto docs = fc::make_training_documents(corpus, *embedder, make_splitter(a.abbreviations));
  if (docs.empty()) throw fc::Error(fc::ErrorCode::kEmptyDocument, "corpus has no sentences");
  for (auto& doc : docs) {
    if (doc.sentences.cols() != cfg.d) doc.sentences = fc::truncate_dimensions(doc.sentences, cfg.d);
  }

  const auto held_out = static_cast<std::size_t>(a.validation_fraction * static_cast<double>(docs.size()));
  std::vector<fc::TrainingDocument> validation(docs.end() - static_cast<std::ptrdiff_t>(held_out), docs.end());
  docs.resize(docs.size() - held_out);

  fc::TeacherProvider teacher;
  const auto mode = fc::parse_teacher_mode(cfg.teacher);
  if (mode == fc::TeacherMode::kMeanPool) {
    teacher = fc::mean_pool_teacher_provider();
  } else {
    auto remote = std::make_shared<fc::RemoteEmbedder>(cfg.remote());
    const std::size_t d = cfg.d;
    teacher = [remote, d](const fc::TrainingDocument& doc, const fc::PatternSet& patterns) {
      auto t = fc::concat_teacher(doc.sentence_texts, patterns, *remote);
      return t.cols() == d ? t : fc::truncate_dimensions(t, d);
    };
  }

  fc::EncoderConfig enc;
  enc.d = cfg.d;
  enc.layers = cfg.layers;
  enc.seed = cfg.seed;
  fc::TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.base_lr = cfg.lr;
  tc.warmup_fraction = cfg.warmup_fraction;
  tc.granularities = fc::parse_granularity_spec(cfg.granularities).granularities;
  tc.validation_interval = cfg.validation_interval;
  tc.seed = cfg.seed;
  tc.adamw.weight_decay = cfg.weight_decay;

  const auto result = fc::train(fc::init_encoder_weights(enc), docs, validation, teacher, tc);
  json metadata = {{"config", fc::config_to_json(cfg)},
                   {"train_documents", docs.size()},
                   {"validation_documents", validation.size()}};
  if (result.final_val_loss) metadata["final_val_loss"] = *result.final_val_loss;
  fc::save_weights(a.out, result.weights, metadata);
  if (!a.history.empty()) write_text_file(a.history, fc::loss_history_csv(result.history));

  std::cerr << "trained " << docs.size() << " documents, " << result.history.size() << " steps";
  if (!result.history.empty()) std::cerr << ", final train loss " << result.history.back().train_loss;
  if (result.final_val_loss) std::cerr << ", held-out loss " << *result.final_val_loss;
  std::cerr << '\n';
  return kExitOk;
}

struct IndexArgs {
  ConfigFlags settings;
  std::string corpus, out, metadata, abbreviations, method = "freechunk", baseline_embedding = "direct";
};

int run_index(const IndexArgs& a) {
  const auto cfg = a.settings.resolve();
  if (a.out.empty()) throw fc::Error(fc::ErrorCode::kConfigError, "--out is required");
  const auto method = fc::parse_method(a.method);
  const auto corpus = fc::read_corpus_file(a.corpus);
  auto options = pipeline_options(cfg, a.abbreviations);
  options.baseline_embedding = parse_baseline_embedding(a.baseline_embedding);
  std::optional<fc::EncoderWeights> weights;
  if (method == fc::Method::kFreeChunk) weights = require_weights(cfg);
  auto embedder = make_embedder(cfg);

  auto result = fc::run_pipeline(corpus, method, options, *embedder, weights ? &*weights : nullptr);
  {
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw fc::Error(fc::ErrorCode::kIoError, "cannot write " + a.out);
    fc::write_index_jsonl(out, result.records);
  }
  const json meta = {{"config", fc::config_to_json(cfg)},
                     {"method", a.method},
                     {"baseline_embedding", a.baseline_embedding},
                     {"documents", result.documents.size()},
                     {"chunks", result.records.size()},
                     {"sentence_encodings", result.sentence_encodings},
                     {"encoder_forwards", result.forward_passes},
                     {"timings_seconds", timings_json(result.timings)}};
  write_text_file(a.metadata.empty() ? a.out + ".meta.json" : a.metadata, meta.dump(2) + "\n");
  std::cerr << "indexed " << result.records.size() << " chunks from " << result.documents.size() << " documents\n";
  return kExitOk;
}

struct QueryArgs {
  ConfigFlags settings;
  std::string index, text, corpus, out, abbreviations;
};

int run_query(const QueryArgs& a) {
  const auto cfg = a.settings.resolve();
  if (a.text.empty()) throw fc::Error(fc::ErrorCode::kConfigError, "--text is required");
  const auto index = fc::load_index(a.index);
  auto embedder = make_embedder(cfg);
  auto q = embedder->embed_one(a.text).values;
  if (q.size() > index.dimension() && index.dimension() > 0) {
    fc::Matrix m(1, q.size(), q);
    m = fc::truncate_dimensions(m, index.dimension());
    q.assign(m.row(0).begin(), m.row(0).end());
  }
  const auto hits = index.query_top_k(q, cfg.top_k);

  json out = {{"query", a.text}, {"hits", json::array()}};
  for (const auto& h : hits) {
    out["hits"].push_back({{"rank", h.rank},
                           {"score", h.score},
                           {"doc_id", h.record.doc_id},
                           {"indices", h.record.pattern.indices()}});
  }
  if (!a.corpus.empty()) {
    fc::SentencesByDoc sentences;
    const auto splitter = make_splitter(a.abbreviations);
    for (const auto& r : fc::read_corpus_file(a.corpus)) {
      sentences[r.id] = fc::make_document(r.id, r.text, splitter).sentences;
    }
    const auto context = fc::assemble_context(hits, sentences, cfg.token_budget);
    json blocks = json::array();
    for (const auto& b : context.blocks) {
      blocks.push_back({{"doc_id", b.doc_id}, {"indices", b.sentence_indices}, {"text", b.text}});
    }
    out["context"] = {{"blocks", blocks},
                      {"tokens", context.tokens},
                      {"hits_used", context.hits_used},
                      {"budget_exhausted", context.budget_exhausted}};
  }
  Output sink(a.out);
  sink.stream() << out.dump(2) << '\n';
  return kExitOk;
}

struct EvalArgs {
  ConfigFlags settings;
  std::size_t docs = 20, sentences = 64, queries = 200, needle = 4;
  std::string out_text, out_csv, baseline_embedding = "mean-pool";
};

int run_eval(const EvalArgs& a) {
  const auto cfg = a.settings.resolve();
  fc::SynthEvalConfig ec;
  ec.documents = a.docs;
  ec.sentences_per_doc = a.sentences;
  ec.queries = a.queries;
  ec.needle_granularity = a.needle;
  ec.seed = cfg.seed;
  ec.pipeline = pipeline_options(cfg, "");
  ec.pipeline.baseline_embedding = parse_baseline_embedding(a.baseline_embedding);
  std::optional<fc::EncoderWeights> weights;
  if (!cfg.weights.empty()) weights = fc::load_weights(cfg.weights);
  ec.d = weights ? weights->d : cfg.d;

  const auto reports = fc::synth_eval(ec, weights ? &*weights : nullptr);
  const auto text = fc::format_eval_text(reports);
  std::cout << text;
  if (!weights) std::cout << "# freechunk skipped: pass --weights to include it\n";
  if (!a.out_text.empty()) write_text_file(a.out_text, text);
  if (!a.out_csv.empty()) write_text_file(a.out_csv, fc::format_eval_csv(reports));
  return kExitOk;
}

struct TheoryArgs {
  ConfigFlags settings;
  std::vector<double> s_values{0.0, 0.25, 0.5, 0.75, 0.9, 0.99};
  std::vector<double> rho_values{0.0, 0.25, 0.5, 0.75, 0.9, 0.99};
  std::size_t trials = 10000, dimension = 3, partitions = 1, threads = 1;
  std::string csv;
};

int run_verify_theory(const TheoryArgs& a) {
  const auto cfg = a.settings.resolve();
  std::vector<fc::theory::BoundReport> reports;
  for (const double s : a.s_values) {
    for (const double rho : a.rho_values) {
      fc::theory::GeometryConfig g;
      g.s = s;
      g.rho = rho;
      g.d = a.dimension;
      g.trials = a.trials;
      g.seed = cfg.seed;
      g.partitions = a.partitions;
      g.threads = a.threads;
      reports.push_back(fc::theory::monte_carlo_verify(g));
    }
  }
  std::cout << fc::theory::format_reports_table(reports);
  if (!a.csv.empty()) write_text_file(a.csv, fc::theory::format_reports_csv(reports));
  std::size_t violations = 0;
  for (const auto& r : reports) violations += r.violations;
  return violations == 0 ? kExitOk : kExitData;
}

struct BenchArgs {
  ConfigFlags settings;
  std::size_t docs = 50, sentences = 64;
};

// Stage timings per method on a synthetic corpus. The encoder is untrained;
// only its cost matters here.
int run_bench(const BenchArgs& a) {
  const auto cfg = a.settings.resolve();
  fc::CorpusGeneratorConfig gen;
  gen.documents = a.docs;
  gen.min_sentences = gen.max_sentences = a.sentences;
  gen.seed = cfg.seed;
  const auto corpus = fc::generate_corpus(gen);
  fc::EncoderConfig enc;
  enc.d = cfg.d;
  enc.layers = cfg.layers;
  enc.seed = cfg.seed;
  const auto weights = cfg.weights.empty() ? fc::init_encoder_weights(enc) : fc::load_weights(cfg.weights);
  fc::ToyEmbedder embedder(weights.d, cfg.seed);
  const auto options = pipeline_options(cfg, "");

  std::printf("%-12s %8s %10s %10s %10s %10s %10s %10s\n", "method", "chunks", "encodings", "sentencize", "chunk",
              "embed", "encode", "total");
  for (const auto method : {fc::Method::kTraditional, fc::Method::kSemantic, fc::Method::kFreeChunk}) {
    const auto r = fc::run_pipeline(corpus, method, options, embedder, &weights);
    std::printf("%-12s %8zu %10zu %10.4f %10.4f %10.4f %10.4f %10.4f\n", std::string(fc::to_string(method)).c_str(),
                r.records.size(), r.sentence_encodings, r.timings.sentencize, r.timings.chunk, r.timings.embed,
                r.timings.encode, r.timings.total);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-granularity chunking: sentencize, chunk, encode, train, index, query and evaluate."};
  app.require_subcommand(1);

  SentencizeArgs sentencize;
  auto* sub = app.add_subcommand("sentencize", "Split a corpus into sentence JSONL");
  sub->add_option("--corpus", sentencize.corpus, "Corpus JSONL ({\"id\",\"text\"} per line)")->required();
  sub->add_option("--out", sentencize.out, "Output path (default stdout)");
  sub->add_option("--abbreviations", sentencize.abbreviations, "Abbreviation list replacing the built-in one");
  sentencize.settings.attach(sub);

  ChunkArgs chunk;
  sub = app.add_subcommand("chunk", "Chunk a corpus with one method and print the chunks");
  sub->add_option("--corpus", chunk.corpus, "Corpus JSONL")->required();
  sub->add_option("--method", chunk.method, "traditional | semantic | freechunk")->capture_default_str();
  sub->add_option("--patterns-json", chunk.patterns_json, "Explicit index sets (JSON array of arrays), freechunk only");
  sub->add_option("--out", chunk.out, "Output path (default stdout)");
  sub->add_option("--abbreviations", chunk.abbreviations, "Abbreviation list replacing the built-in one");
  chunk.settings.attach(sub);

  EncodeArgs encode;
  sub = app.add_subcommand("encode", "Write base-embedder sentence embeddings as JSONL");
  sub->add_option("--corpus", encode.corpus, "Corpus JSONL")->required();
  sub->add_option("--out", encode.out, "Output path (default stdout)");
  sub->add_option("--abbreviations", encode.abbreviations, "Abbreviation list replacing the built-in one");
  encode.settings.attach(sub);

  TrainArgs train;
  sub = app.add_subcommand("train", "Distill the chunk encoder from a teacher");
  sub->add_option("--corpus", train.corpus, "Corpus JSONL");
  sub->add_option("--synthetic-docs", train.synthetic_docs, "Generate this many random documents instead");
  sub->add_option("--out", train.out, "Weight container path")->required();
  sub->add_option("--history", train.history, "Loss history CSV (step,train_loss,val_loss)");
  sub->add_option("--validation-fraction", train.validation_fraction, "Held-out share of documents")
      ->capture_default_str();
  sub->add_option("--abbreviations", train.abbreviations, "Abbreviation list replacing the built-in one");
  train.settings.attach(sub);

  IndexArgs index;
  sub = app.add_subcommand("index", "Chunk, embed and write a retrieval index");
  sub->add_option("--corpus", index.corpus, "Corpus JSONL")->required();
  sub->add_option("--method", index.method, "traditional | semantic | freechunk")->capture_default_str();
  sub->add_option("--baseline-embedding", index.baseline_embedding,
                  "Baseline chunk embeddings: direct (embed chunk text) | mean-pool")
      ->capture_default_str();
  sub->add_option("--out", index.out, "Index JSONL path")->required();
  sub->add_option("--metadata", index.metadata, "Metadata sidecar (default <out>.meta.json)");
  sub->add_option("--abbreviations", index.abbreviations, "Abbreviation list replacing the built-in one");
  index.settings.attach(sub);

  QueryArgs query;
  sub = app.add_subcommand("query", "Top-k retrieval against an index");
  sub->add_option("--index", query.index, "Index JSONL")->required();
  sub->add_option("--text", query.text, "Query text")->required();
  sub->add_option("--corpus", query.corpus, "Corpus JSONL, enables context assembly");
  sub->add_option("--out", query.out, "Output path (default stdout)");
  sub->add_option("--abbreviations", query.abbreviations, "Abbreviation list replacing the built-in one");
  query.settings.attach(sub);

  EvalArgs eval;
  sub = app.add_subcommand("eval", "Needle retrieval benchmark on a synthetic corpus");
  sub->add_option("--docs", eval.docs, "Documents")->capture_default_str();
  sub->add_option("--sentences", eval.sentences, "Sentences per document")->capture_default_str();
  sub->add_option("--queries", eval.queries, "Needle queries")->capture_default_str();
  sub->add_option("--needle", eval.needle, "Needle span length in sentences")->capture_default_str();
  sub->add_option("--baseline-embedding", eval.baseline_embedding, "direct | mean-pool")->capture_default_str();
  sub->add_option("--out-text", eval.out_text, "Text report path");
  sub->add_option("--out-csv", eval.out_csv, "CSV report path");
  eval.settings.attach(sub);

  TheoryArgs theory;
  sub = app.add_subcommand("verify-theory", "Monte Carlo check of the substitution-loss bounds");
  sub->add_option("--s", theory.s_values, "cos(q, e) grid")->delimiter(',')->capture_default_str();
  sub->add_option("--rho", theory.rho_values, "cos(e, v) grid")->delimiter(',')->capture_default_str();
  sub->add_option("--trials", theory.trials, "Trials per cell")->capture_default_str();
  sub->add_option("--dimension", theory.dimension, "Ambient dimension (>= 3)")->capture_default_str();
  sub->add_option("--partitions", theory.partitions, "Independently seeded partitions")->capture_default_str();
  sub->add_option("--threads", theory.threads, "Worker threads")->capture_default_str();
  sub->add_option("--csv", theory.csv, "CSV report path");
  theory.settings.attach(sub);

  BenchArgs bench;
  sub = app.add_subcommand("bench", "Per-stage pipeline timings for every method");
  sub->add_option("--docs", bench.docs, "Documents")->capture_default_str();
  sub->add_option("--sentences", bench.sentences, "Sentences per document")->capture_default_str();
  bench.settings.attach(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "sentencize") return run_sentencize(sentencize);
    if (name == "chunk") return run_chunk(chunk);
    if (name == "encode") return run_encode(encode);
    if (name == "train") return run_train(train);
    if (name == "index") return run_index(index);
    if (name == "query") return run_query(query);
    if (name == "eval") return run_eval(eval);
    if (name == "verify-theory") return run_verify_theory(theory);
    if (name == "bench") return run_bench(bench);
  } catch (const fc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
