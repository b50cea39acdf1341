#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "freechunk/numerics.hpp"
#include "freechunk/patterns.hpp"

namespace freechunk {

/// Parameters of one cross-granularity encoder layer. Weights use the
/// row-vector convention: Q = H * w_q.
template <typename T>
struct LayerWeightsT {
  BasicMatrix<T> w_q, w_k, w_v;  // d x d
  std::vector<T> h_chk;          // learnable chunk query, replicated per pattern
  std::vector<T> ln1_gain, ln1_bias;
  std::vector<T> ffn_b1;          // 4d
  BasicMatrix<T> ffn_w1, ffn_w2;  // d x 4d, 4d x d
  std::vector<T> ffn_b2;
  std::vector<T> ln2_gain, ln2_bias;
};

template <typename T>
struct EncoderWeightsT {
  std::size_t d = 0;
  bool normalize_output = true;
  std::vector<LayerWeightsT<T>> layers;

  template <typename U>
  EncoderWeightsT<U> cast() const;
};

using LayerWeights = LayerWeightsT<float>;
using EncoderWeights = EncoderWeightsT<float>;

/// Visits every parameter tensor as (name, shape, values). Names follow
/// "layers.<i>.<tensor>" and are stable across releases.
template <typename T, typename Fn>
void for_each_tensor(EncoderWeightsT<T>& weights, Fn&& fn);
template <typename T, typename Fn>
void for_each_tensor(const EncoderWeightsT<T>& weights, Fn&& fn);

struct EncoderConfig {
  std::size_t d = 64;
  std::size_t layers = 2;
  std::size_t ffn_multiplier = 4;
  bool normalize_output = true;
  double chunk_init_std = 0.02;
  std::uint64_t seed = 0;
};

/// Random initialization: h_chk ~ N(0, chunk_init_std), projections ~
/// N(0, 1/fan_in), layernorm gains 1, biases 0.
EncoderWeights init_encoder_weights(const EncoderConfig& config);

/// Throws ShapeMismatch if any tensor disagrees with weights.d, or
/// NonFiniteInput if any parameter is not finite.
template <typename T>
void validate_weights(const EncoderWeightsT<T>& weights);

/// Per-layer intermediates kept for backpropagation and inspection.
template <typename T>
struct LayerCache {
  BasicMatrix<T> query_in;      // H
  BasicMatrix<T> q, k, v;
  BasicMatrix<T> attention;     // softmax(QK^T/sqrt(d) + P)
  BasicMatrix<T> attended;      // attention * v, before the residual
  BasicMatrix<T> ln1_in, ln1_out;
  BasicMatrix<T> ffn_pre, ffn_act, ffn_out;
  BasicMatrix<T> ln2_in, ln2_out;
};

template <typename T>
struct ForwardCache {
  std::vector<LayerCache<T>> layers;
};

/// Runs every layer and returns the last layer output before the optional
/// final L2 normalization. Fills cache when given.
template <typename T>
BasicMatrix<T> forward_raw(const EncoderWeightsT<T>& weights, const BasicMatrix<T>& sentences,
                           const MaskMatrix& mask, ForwardCache<T>* cache = nullptr);

/// All m chunk embeddings for the mask rows in one pass over the sentence
/// embeddings. Rows are unit-norm when weights.normalize_output is set.
Matrix forward(const EncoderWeights& weights, const Matrix& sentences, const MaskMatrix& mask);

struct ChunkEmbeddings {
  Matrix embeddings;  // row i belongs to patterns[i]
  PatternSet patterns;
};

ChunkEmbeddings encode_patterns(const EncoderWeights& weights, const Matrix& sentences,
                                const PatternSet& patterns);

/// Keeps the first d columns and re-normalizes each row.
Matrix truncate_dimensions(const Matrix& embeddings, std::size_t d);

// ---------------------------------------------------------------------------

template <typename T>
template <typename U>
EncoderWeightsT<U> EncoderWeightsT<T>::cast() const {
  EncoderWeightsT<U> out;
  out.d = d;
  out.normalize_output = normalize_output;
  auto vec = [](const std::vector<T>& v) { return std::vector<U>(v.begin(), v.end()); };
  for (const auto& l : layers) {
    LayerWeightsT<U> c;
    c.w_q = l.w_q.template cast<U>();
    c.w_k = l.w_k.template cast<U>();
    c.w_v = l.w_v.template cast<U>();
    c.h_chk = vec(l.h_chk);
    c.ln1_gain = vec(l.ln1_gain);
    c.ln1_bias = vec(l.ln1_bias);
    c.ffn_w1 = l.ffn_w1.template cast<U>();
    c.ffn_b1 = vec(l.ffn_b1);
    c.ffn_w2 = l.ffn_w2.template cast<U>();
    c.ffn_b2 = vec(l.ffn_b2);
    c.ln2_gain = vec(l.ln2_gain);
    c.ln2_bias = vec(l.ln2_bias);
    out.layers.push_back(std::move(c));
  }
  return out;
}

namespace detail {

template <typename Layer, typename Fn>
void visit_layer(const std::string& prefix, Layer& l, Fn& fn) {
  auto mat = [&](const char* name, auto& m) {
    fn(prefix + name, std::vector<std::size_t>{m.rows(), m.cols()}, m.values());
  };
  auto vec = [&](const char* name, auto& v) {
    fn(prefix + name, std::vector<std::size_t>{v.size()}, std::span(v));
  };
  mat("w_q", l.w_q);
  mat("w_k", l.w_k);
  mat("w_v", l.w_v);
  vec("h_chk", l.h_chk);
  vec("ln1_gain", l.ln1_gain);
  vec("ln1_bias", l.ln1_bias);
  mat("ffn_w1", l.ffn_w1);
  vec("ffn_b1", l.ffn_b1);
  mat("ffn_w2", l.ffn_w2);
  vec("ffn_b2", l.ffn_b2);
  vec("ln2_gain", l.ln2_gain);
  vec("ln2_bias", l.ln2_bias);
}

}  // namespace detail

template <typename T, typename Fn>
void for_each_tensor(EncoderWeightsT<T>& weights, Fn&& fn) {
  for (std::size_t i = 0; i < weights.layers.size(); ++i) {
    detail::visit_layer("layers." + std::to_string(i) + ".", weights.layers[i], fn);
  }
}

template <typename T, typename Fn>
void for_each_tensor(const EncoderWeightsT<T>& weights, Fn&& fn) {
  for (std::size_t i = 0; i < weights.layers.size(); ++i) {
    detail::visit_layer("layers." + std::to_string(i) + ".", weights.layers[i], fn);
  }
}

}  // namespace freechunk
