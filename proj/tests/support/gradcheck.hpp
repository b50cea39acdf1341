#pragma once

// Central finite-difference oracle for the encoder's cosine-loss gradients,
// shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "freechunk/encoder.hpp"
#include "freechunk/patterns.hpp"
#include "freechunk/rng.hpp"
#include "freechunk/training.hpp"

namespace freechunk::testing {

struct GradcheckInstance {
  EncoderWeightsT<double> weights;
  MatrixD sentences;
  MaskMatrix mask;
  MatrixD teacher;
};

inline MatrixD random_unit_rows_d(Rng& rng, std::size_t n, std::size_t d) {
  MatrixD m(n, d);
  for (auto& x : m.values()) x = rng.normal();
  normalize_rows(m);
  return m;
}

/// Random encoder with every parameter (including layernorm and biases)
/// moved away from its special initial value.
inline GradcheckInstance make_gradcheck_instance(std::size_t d, std::size_t n, std::size_t m, std::size_t layers,
                                                 std::uint64_t seed) {
  EncoderConfig cfg;
  cfg.d = d;
  cfg.layers = layers;
  cfg.seed = seed;
  cfg.chunk_init_std = 0.5;
  GradcheckInstance inst;
  inst.weights = init_encoder_weights(cfg).cast<double>();
  Rng rng(seed ^ 0x5151);
  for (auto& l : inst.weights.layers) {
    for (auto* v : {&l.ln1_gain, &l.ln2_gain}) {
      for (auto& x : *v) x = 1.0 + 0.2 * rng.normal();
    }
    for (auto* v : {&l.ln1_bias, &l.ln2_bias, &l.ffn_b1, &l.ffn_b2}) {
      for (auto& x : *v) x = 0.2 * rng.normal();
    }
  }
  inst.sentences = random_unit_rows_d(rng, n, d);
  std::vector<std::vector<std::size_t>> sets;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<std::size_t> set;
    for (std::size_t j = 0; j < n; ++j) {
      if (rng.uniform() < 0.5) set.push_back(j);
    }
    if (set.empty()) set.push_back(rng.below(n));
    sets.push_back(set);
  }
  inst.mask = pattern_to_mask(build_explicit_patterns(n, sets));
  inst.teacher = random_unit_rows_d(rng, m, d);
  return inst;
}

inline double loss_of(const EncoderWeightsT<double>& w, const MatrixD& e, const MaskMatrix& mask,
                      const MatrixD& teacher) {
  return cosine_loss(teacher, forward_raw(w, e, mask));
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max(std::sqrt(na), std::sqrt(nb));
  if (scale < 1e-12) return 0.0;
  return std::sqrt(diff) / scale;
}

/// Per-tensor relative error ||analytic - numeric|| / max(||analytic||,
/// ||numeric||), plus the entry "sentences" for d loss / d E.
inline std::map<std::string, double> gradcheck(const GradcheckInstance& inst, double h = 1e-3) {
  const auto analytic = backward(inst.weights, inst.sentences, inst.mask, inst.teacher);
  std::map<std::string, std::vector<double>> analytic_by_name;
  for_each_tensor(analytic.grads, [&](const std::string& name, const std::vector<std::size_t>&, auto values) {
    analytic_by_name[name].assign(values.begin(), values.end());
  });

  std::map<std::string, double> errors;
  auto probe = inst.weights;
  for_each_tensor(probe, [&](const std::string& name, const std::vector<std::size_t>&, auto values) {
    std::vector<double> numeric(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = loss_of(probe, inst.sentences, inst.mask, inst.teacher);
      values[i] = saved - h;
      const double down = loss_of(probe, inst.sentences, inst.mask, inst.teacher);
      values[i] = saved;
      numeric[i] = (up - down) / (2 * h);
    }
    errors[name] = relative_error(analytic_by_name.at(name), numeric);
  });

  auto e = inst.sentences;
  std::vector<double> numeric(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double saved = e.values()[i];
    e.values()[i] = saved + h;
    const double up = loss_of(inst.weights, e, inst.mask, inst.teacher);
    e.values()[i] = saved - h;
    const double down = loss_of(inst.weights, e, inst.mask, inst.teacher);
    e.values()[i] = saved;
    numeric[i] = (up - down) / (2 * h);
  }
  errors["sentences"] = relative_error(analytic.sentence_grads.data(), numeric);
  return errors;
}

}  // namespace freechunk::testing
