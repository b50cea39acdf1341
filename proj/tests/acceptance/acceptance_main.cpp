// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "../support/gradcheck.hpp"
#include "freechunk/baselines.hpp"
#include "freechunk/embedders.hpp"
#include "freechunk/encoder.hpp"
#include "freechunk/error.hpp"
#include "freechunk/patterns.hpp"
#include "freechunk/pipeline.hpp"
#include "freechunk/retrieval.hpp"
#include "freechunk/rng.hpp"
#include "freechunk/synthetic.hpp"
#include "freechunk/theory.hpp"
#include "freechunk/training.hpp"

namespace fc = freechunk;
namespace th = freechunk::theory;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(const char* name, const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const std::vector<double> kGrid = {0.0, 0.25, 0.5, 0.75, 0.9, 0.99};

fc::Matrix random_unit_rows(fc::Rng& rng, std::size_t n, std::size_t d) {
  fc::Matrix m(n, d);
  for (auto& x : m.values()) x = static_cast<float>(rng.normal());
  fc::normalize_rows(m);
  return m;
}

std::vector<float> random_unit(fc::Rng& rng, std::size_t d) {
  std::vector<float> v(d);
  double norm = 0;
  for (auto& x : v) {
    x = static_cast<float>(rng.normal());
    norm += double(x) * x;
  }
  for (auto& x : v) x = static_cast<float>(x / std::sqrt(norm));
  return v;
}

Outcome worst_case_bound() {
  std::size_t violations = 0, cells = 0;
  double max_slack = -1.0;
  for (const std::uint64_t seed : {11u, 22u, 33u}) {
    for (const double s : kGrid) {
      for (const double rho : kGrid) {
        th::GeometryConfig cfg;
        cfg.s = s;
        cfg.rho = rho;
        cfg.trials = 10000;
        cfg.seed = seed;
        const auto r = th::monte_carlo_verify(cfg);
        violations += r.violations;
        max_slack = std::max(max_slack, r.max_loss - r.worst_case);
        ++cells;
      }
    }
  }
  return {violations == 0,
          fmt("%zu cells x 1e4 trials, %zu violations, max(loss - bound) = %.3g", cells, violations, max_slack)};
}

Outcome expected_bound() {
  std::size_t bad_cells = 0, bad_phi = 0;
  double pooled_phi = 0.0, worst_margin = -1e9, phi_lo = 1.0, phi_hi = 0.0;
  for (const double s : kGrid) {
    for (const double rho : kGrid) {
      th::GeometryConfig cfg;
      cfg.s = s;
      cfg.rho = rho;
      cfg.trials = 100000;
      cfg.seed = 7;
      const auto r = th::monte_carlo_verify(cfg);
      if (!r.mean_within_expected()) ++bad_cells;
      worst_margin = std::max(worst_margin, r.mean_loss - r.expected);
      if (std::abs(r.mean_abs_cos_phi - 2.0 / std::numbers::pi) > 0.01) ++bad_phi;
      phi_lo = std::min(phi_lo, r.mean_abs_cos_phi);
      phi_hi = std::max(phi_hi, r.mean_abs_cos_phi);
      pooled_phi += r.mean_abs_cos_phi;
    }
  }
  pooled_phi /= static_cast<double>(kGrid.size() * kGrid.size());
  return {bad_cells == 0 && bad_phi == 0,
          fmt("36 cells x 1e5 trials, %zu cells above bound + 3 sigma/sqrt(N), max(mean - bound) = %.3g; "
              "mean |cos phi| = %.4f (cells %.4f..%.4f, 2/pi = %.4f)",
              bad_cells, worst_margin, pooled_phi, phi_lo, phi_hi, 2.0 / std::numbers::pi)};
}

Outcome spherical_identity() {
  fc::Rng rng(5);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    th::GeometryConfig cfg;
    cfg.s = rng.uniform(-1.0, 1.0);
    cfg.rho = rng.uniform(-1.0, 1.0);
    cfg.d = 3 + rng.below(14);
    const auto c = th::sample_configuration(cfg, rng);
    double dot = 0.0;
    for (std::size_t k = 0; k < cfg.d; ++k) dot += c.q[k] * c.v[k];
    worst = std::max(worst, std::abs(dot - th::spherical_cosine(cfg.s, cfg.rho, c.phi)));
  }
  return {worst < 1e-9, fmt("1e4 configurations, max identity error %.3g", worst)};
}

Outcome adversarial() {
  double worst = 0.0;
  for (const double s : {0.25, 0.5, 0.9}) {
    for (const double rho : {0.25, 0.5, 0.9}) {
      worst = std::max(worst, std::abs(th::adversarial_loss(s, rho, 3) - th::worst_case_bound(s, rho)));
    }
  }
  return {worst < 1e-6, fmt("max |loss(phi = pi) - bound| = %.3g over 9 cells", worst)};
}

Outcome gradients() {
  double worst = 0.0;
  std::string worst_name;
  for (const std::uint64_t seed : {1u, 2u, 3u}) {
    const auto inst = fc::testing::make_gradcheck_instance(8, 6, 3, 1, seed);
    for (const auto& [name, err] : fc::testing::gradcheck(inst)) {
      if (err > worst) {
        worst = err;
        worst_name = name;
      }
    }
  }
  return {worst < 1e-3, fmt("d=8 n=6 m=3 L=1, 3 seeds, max relative error %.3g (%s)", worst, worst_name.c_str())};
}

Outcome uniform_attention() {
  fc::Rng rng(9);
  const std::size_t d = 12, n = 10;
  fc::EncoderConfig cfg;
  cfg.d = d;
  cfg.layers = 1;
  auto w = fc::init_encoder_weights(cfg);
  w.layers[0].w_q = fc::Matrix(d, d);
  w.layers[0].w_k = fc::Matrix(d, d);
  w.layers[0].w_v = fc::Matrix::identity(d);
  const auto e = random_unit_rows(rng, n, d);
  std::vector<std::vector<std::size_t>> sets;
  for (int i = 0; i < 20; ++i) {
    std::vector<std::size_t> s;
    for (std::size_t j = 0; j < n; ++j) {
      if (rng.uniform() < 0.4) s.push_back(j);
    }
    if (s.empty()) s.push_back(rng.below(n));
    sets.push_back(s);
  }
  const auto ps = fc::build_explicit_patterns(n, sets);
  fc::ForwardCache<float> cache;
  fc::forward_raw(w, e, fc::pattern_to_mask(ps), &cache);
  const auto& out = cache.layers[0].attended;
  double worst = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      double mean = 0.0;
      for (const auto j : ps[i].indices()) mean += e(j, c);
      mean /= static_cast<double>(ps[i].granularity());
      worst = std::max(worst, std::abs(out(i, c) - mean));
    }
  }
  return {worst < 1e-6, fmt("%zu patterns, max deviation from member mean %.3g", ps.size(), worst)};
}

Outcome mask_locality() {
  fc::Rng rng(13);
  const std::size_t d = 16, n = 20;
  fc::EncoderConfig cfg;
  cfg.d = d;
  cfg.layers = 2;
  cfg.seed = 4;
  cfg.chunk_init_std = 0.5;
  const auto w = fc::init_encoder_weights(cfg);
  const auto e = random_unit_rows(rng, n, d);
  const auto ps = fc::build_sliding_patterns(n, {2, 4, 8});
  const auto mask = fc::pattern_to_mask(ps);
  const auto base = fc::forward(w, e, mask);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto perturbed = e;
    for (std::size_t j = 0; j < n; ++j) {
      if (ps[i].contains(j)) continue;
      for (auto& x : perturbed.row(j)) x = static_cast<float>(rng.normal() * 5.0);
    }
    const auto out = fc::forward(w, perturbed, mask);
    for (std::size_t c = 0; c < d; ++c) changed += out(i, c) != base(i, c);
  }
  return {changed == 0, fmt("%zu patterns perturbed outside their members, %zu output values changed", ps.size(), changed)};
}

Outcome efficiency() {
  std::string text;
  for (int i = 0; i < 64; ++i) text += "Line " + std::to_string(i) + " states one plain fact. ";
  fc::ToyEmbedder toy(16, 1);
  fc::CountingEmbedder counter(toy);
  fc::EncoderConfig cfg;
  cfg.d = 16;
  const auto w = fc::init_encoder_weights(cfg);
  const auto r = fc::run_pipeline({{"doc", text}}, fc::Method::kFreeChunk, {}, counter, &w);
  const bool ok = r.documents.at(0).size() == 64 && counter.texts_embedded() == 64 && r.forward_passes == 1 &&
                  r.records.size() == 62;
  return {ok, fmt("64 sentences -> %zu embedder calls, %zu encoder forward, %zu chunk rows", counter.texts_embedded(),
                  r.forward_passes, r.records.size())};
}

fc::EncoderWeights trained;

Outcome toy_training() {
  fc::CorpusGeneratorConfig gen;
  gen.documents = 200;
  gen.seed = 0;
  const auto corpus = fc::generate_corpus(gen);
  fc::ToyEmbedder embedder(16, 0);
  auto docs = fc::make_training_documents(corpus, embedder);
  std::vector<fc::TrainingDocument> held_out(docs.end() - 20, docs.end());
  docs.resize(docs.size() - 20);

  fc::EncoderConfig enc;
  enc.d = 16;
  enc.layers = 2;
  fc::TrainConfig tc;
  tc.epochs = 2;
  tc.base_lr = 2e-2;
  tc.validation_interval = 1000000;
  const auto teacher = fc::mean_pool_teacher_provider();
  auto result = fc::train(fc::init_encoder_weights(enc), docs, held_out, teacher, tc);
  const auto eval = fc::evaluate(result.weights, held_out, teacher, tc);
  trained = std::move(result.weights);
  return {eval.mean_loss < fc::kFitThreshold,
          fmt("180 train / 20 held-out docs, d=16, 2 epochs, lr 2e-2: held-out loss %.4f (threshold %.2f), "
              "%.0f%% of held-out docs fitted",
              eval.mean_loss, fc::kFitThreshold, 100.0 * eval.fit_fraction)};
}

Outcome retrieval_oracle() {
  fc::Rng rng(17);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 2 + rng.below(30);
    const std::size_t n = 1 + rng.below(200);
    std::vector<fc::ChunkRecord> records;
    for (std::size_t i = 0; i < n; ++i) {
      auto v = rng.uniform() < 0.2 && !records.empty() ? records[rng.below(records.size())].embedding
                                                       : random_unit(rng, d);
      const std::size_t start = rng.below(20), g = 1 + rng.below(6);
      std::vector<std::size_t> idx;
      for (std::size_t k = 0; k < g; ++k) idx.push_back(start + k);
      records.push_back({"doc" + std::to_string(i), fc::ChunkPattern(idx), v, 0});
    }
    fc::ChunkIndex index;
    index.add_chunks(records);
    const auto q = random_unit(rng, d);
    const std::size_t k = 1 + rng.below(n + 5);
    const auto hits = index.query_top_k(q, k);

    std::vector<fc::RetrievalHit> oracle;
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0, qq = 0;
      for (std::size_t c = 0; c < d; ++c) {
        dot += double(q[c]) * records[i].embedding[c];
        qq += double(q[c]) * q[c];
      }
      auto r = records[i];
      r.ordinal = i;
      oracle.push_back({r, dot / std::sqrt(qq), 0});
    }
    std::stable_sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.record.pattern.granularity() != b.record.pattern.granularity())
        return a.record.pattern.granularity() < b.record.pattern.granularity();
      return a.record.pattern.start() < b.record.pattern.start();
    });
    if (hits.size() != std::min(k, n)) {
      ++mismatches;
      continue;
    }
    for (std::size_t i = 0; i < hits.size(); ++i) {
      if (hits[i].record.doc_id != oracle[i].record.doc_id || hits[i].score != oracle[i].score ||
          hits[i].rank != i + 1) {
        ++mismatches;
        break;
      }
    }
  }
  return {mismatches == 0, fmt("100 random instances, %zu differ from the full-sort oracle", mismatches)};
}

Outcome synthetic_eval() {
  if (trained.layers.empty()) return {false, "no trained weights (toy training failed to run)"};
  fc::SynthEvalConfig cfg;
  cfg.needle_granularity = 4;
  const auto reports = fc::synth_eval(cfg, &trained);
  double trad = -1, sem = -1, free = -1;
  for (const auto& r : reports) {
    if (r.method == "traditional") trad = r.hit_at_5;
    if (r.method == "semantic") sem = r.hit_at_5;
    if (r.method == "freechunk") free = r.hit_at_5;
  }
  return {free >= 0 && trad >= 0 && free >= trad,
          fmt("needle 4, %zu queries: hit@5 freechunk %.3f, traditional %.3f, semantic %.3f "
              "(span-overlap retrieval hits, not QA accuracy)",
              cfg.queries, free, trad, sem)};
}

Outcome baseline_partition() {
  fc::Rng rng(23);
  fc::ToyEmbedder embedder(16, 3);
  const char* words[] = {"alpha", "river", "stone", "bright", "quiet", "market", "north", "signal", "lamp", "cold"};
  const char* ends[] = {".", "!", "?"};
  std::size_t bad = 0, sentences = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::string text;
    for (std::size_t i = 0, n = 1 + rng.below(40); i < n; ++i) {
      if (!text.empty()) text += ' ';
      std::string sentence = "Word";
      for (std::size_t t = 0, len = rng.below(120); t < len; ++t) sentence += std::string(" ") + words[rng.below(10)];
      text += sentence + ends[rng.below(3)];
    }
    const auto doc = fc::make_document("doc" + std::to_string(trial), text);
    sentences += doc.size();
    auto partitions = [&](const std::vector<fc::Chunk>& chunks) {
      std::size_t next = 0;
      for (const auto& c : chunks) {
        if (c.first != next || c.last < c.first) return false;
        next = c.last + 1;
      }
      return next == doc.size();
    };
    if (!partitions(fc::traditional_chunk(doc, 1 + rng.below(300)))) ++bad;
    if (!partitions(fc::semantic_chunk(doc, embedder, rng.uniform(0.0, 100.0)))) ++bad;
  }
  return {bad == 0, fmt("1000 documents (%zu sentences), %zu chunkings with a gap or overlap", sentences, bad)};
}

}  // namespace

int main() {
  run("worst-case bound", worst_case_bound);
  run("expected bound and azimuth coefficient", expected_bound);
  run("spherical cosine identity", spherical_identity);
  run("adversarial tightness", adversarial);
  run("gradient check", gradients);
  run("uniform attention oracle", uniform_attention);
  run("mask locality", mask_locality);
  run("efficiency contract", efficiency);
  run("toy training convergence", toy_training);
  run("retrieval oracle", retrieval_oracle);
  run("synthetic eval ordering", synthetic_eval);
  run("baseline partition", baseline_partition);
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
