#include "freechunk/encoder.hpp"

#include <cmath>

#include "freechunk/error.hpp"
#include "freechunk/rng.hpp"

namespace freechunk {
namespace {

template <typename T>
void check_shape(const BasicMatrix<T>& m, std::size_t rows, std::size_t cols, const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorCode::kShapeMismatch, name + " is " + std::to_string(m.rows()) + "x" +
                                               std::to_string(m.cols()) + ", expected " +
                                               std::to_string(rows) + "x" + std::to_string(cols));
  }
}

template <typename T>
void check_length(const std::vector<T>& v, std::size_t n, const std::string& name) {
  if (v.size() != n) {
    throw Error(ErrorCode::kShapeMismatch,
                name + " has length " + std::to_string(v.size()) + ", expected " + std::to_string(n));
  }
}

Matrix gaussian(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = static_cast<float>(rng.normal(0.0, stddev));
  return m;
}

}  // namespace

EncoderWeights init_encoder_weights(const EncoderConfig& config) {
  if (config.d == 0 || config.layers == 0 || config.ffn_multiplier == 0) {
    throw Error(ErrorCode::kInvalidArgument, "encoder needs d, layers and ffn multiplier >= 1");
  }
  const std::size_t d = config.d;
  const std::size_t hidden = config.ffn_multiplier * d;
  Rng rng(config.seed);
  EncoderWeights w;
  w.d = d;
  w.normalize_output = config.normalize_output;
  const double proj_std = 1.0 / std::sqrt(static_cast<double>(d));
  const double out_std = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (std::size_t i = 0; i < config.layers; ++i) {
    LayerWeights l;
    l.w_q = gaussian(d, d, proj_std, rng);
    l.w_k = gaussian(d, d, proj_std, rng);
    l.w_v = gaussian(d, d, proj_std, rng);
    l.h_chk.resize(d);
    for (auto& v : l.h_chk) v = static_cast<float>(rng.normal(0.0, config.chunk_init_std));
    l.ln1_gain.assign(d, 1.0f);
    l.ln1_bias.assign(d, 0.0f);
    l.ffn_w1 = gaussian(d, hidden, proj_std, rng);
    l.ffn_b1.assign(hidden, 0.0f);
    l.ffn_w2 = gaussian(hidden, d, out_std, rng);
    l.ffn_b2.assign(d, 0.0f);
    l.ln2_gain.assign(d, 1.0f);
    l.ln2_bias.assign(d, 0.0f);
    w.layers.push_back(std::move(l));
  }
  return w;
}

template <typename T>
void validate_weights(const EncoderWeightsT<T>& weights) {
  if (weights.layers.empty()) throw Error(ErrorCode::kInvalidArgument, "encoder has no layers");
  const std::size_t d = weights.d;
  for (std::size_t i = 0; i < weights.layers.size(); ++i) {
    const auto& l = weights.layers[i];
    const std::string p = "layers." + std::to_string(i) + ".";
    check_shape(l.w_q, d, d, p + "w_q");
    check_shape(l.w_k, d, d, p + "w_k");
    check_shape(l.w_v, d, d, p + "w_v");
    check_length(l.h_chk, d, p + "h_chk");
    check_length(l.ln1_gain, d, p + "ln1_gain");
    check_length(l.ln1_bias, d, p + "ln1_bias");
    if (l.ffn_w1.rows() != d || l.ffn_w2.cols() != d || l.ffn_w1.cols() != l.ffn_w2.rows()) {
      throw Error(ErrorCode::kShapeMismatch, p + "ffn weights do not chain d -> hidden -> d");
    }
    check_length(l.ffn_b1, l.ffn_w1.cols(), p + "ffn_b1");
    check_length(l.ffn_b2, d, p + "ffn_b2");
    check_length(l.ln2_gain, d, p + "ln2_gain");
    check_length(l.ln2_bias, d, p + "ln2_bias");
  }
  for_each_tensor(weights, [](const std::string& name, const auto&, auto values) {
    for (const auto v : values) {
      if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteInput, "parameter " + name + " is not finite");
    }
  });
}

template <typename T>
BasicMatrix<T> forward_raw(const EncoderWeightsT<T>& weights, const BasicMatrix<T>& sentences,
                           const MaskMatrix& mask, ForwardCache<T>* cache) {
  if (weights.layers.empty()) throw Error(ErrorCode::kInvalidArgument, "encoder has no layers");
  if (sentences.cols() != weights.d) {
    throw Error(ErrorCode::kShapeMismatch, "sentence embeddings have width " +
                                               std::to_string(sentences.cols()) + ", encoder expects " +
                                               std::to_string(weights.d));
  }
  if (mask.cols() != sentences.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "mask has " + std::to_string(mask.cols()) + " columns for " +
                                               std::to_string(sentences.rows()) + " sentences");
  }
  if (!sentences.all_finite()) throw Error(ErrorCode::kNonFiniteInput, "sentence embeddings");

  const std::size_t m = mask.rows();
  const std::size_t d = weights.d;
  const T scale = T(1) / std::sqrt(static_cast<T>(d));
  if (cache) cache->layers.clear();

  BasicMatrix<T> state(m, d);
  for (std::size_t li = 0; li < weights.layers.size(); ++li) {
    const auto& l = weights.layers[li];
    // Layer 0 starts every row from h_chk; later layers add their own h_chk to
    // the carried-over query stream.
    BasicMatrix<T> h = li == 0 ? BasicMatrix<T>(m, d) : state;
    add_row_bias(h, std::span<const T>(l.h_chk));

    auto q = matmul(h, l.w_q);
    auto k = matmul(sentences, l.w_k);
    auto v = matmul(sentences, l.w_v);
    auto logits = matmul_transposed(q, k);
    for (auto& x : logits.values()) x *= scale;
    auto attention = masked_softmax_rows(logits, mask);
    auto attended = matmul(attention, v);

    auto ln1_in = h;
    add_inplace(ln1_in, attended);
    auto ln1_out = layer_norm(ln1_in, std::span<const T>(l.ln1_gain), std::span<const T>(l.ln1_bias));

    auto ffn_pre = matmul(ln1_out, l.ffn_w1);
    add_row_bias(ffn_pre, std::span<const T>(l.ffn_b1));
    auto ffn_act = ffn_pre;
    for (auto& x : ffn_act.values()) x = gelu(x);
    auto ffn_out = matmul(ffn_act, l.ffn_w2);
    add_row_bias(ffn_out, std::span<const T>(l.ffn_b2));

    auto ln2_in = ln1_out;
    add_inplace(ln2_in, ffn_out);
    state = layer_norm(ln2_in, std::span<const T>(l.ln2_gain), std::span<const T>(l.ln2_bias));

    if (cache) {
      cache->layers.push_back(LayerCache<T>{std::move(h), std::move(q), std::move(k), std::move(v),
                                            std::move(attention), std::move(attended), std::move(ln1_in),
                                            std::move(ln1_out), std::move(ffn_pre), std::move(ffn_act),
                                            std::move(ffn_out), std::move(ln2_in), state});
    }
  }
  return state;
}

Matrix forward(const EncoderWeights& weights, const Matrix& sentences, const MaskMatrix& mask) {
  auto out = forward_raw(weights, sentences, mask);
  if (weights.normalize_output) normalize_rows(out);
  return out;
}

ChunkEmbeddings encode_patterns(const EncoderWeights& weights, const Matrix& sentences,
                                const PatternSet& patterns) {
  if (patterns.sentence_count() != sentences.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "pattern set covers " + std::to_string(patterns.sentence_count()) +
                                               " sentences, embeddings have " +
                                               std::to_string(sentences.rows()));
  }
  return {forward(weights, sentences, pattern_to_mask(patterns)), patterns};
}

Matrix truncate_dimensions(const Matrix& embeddings, std::size_t d) {
  if (d == 0 || d > embeddings.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "cannot truncate width " + std::to_string(embeddings.cols()) +
                                               " to " + std::to_string(d));
  }
  Matrix out(embeddings.rows(), d);
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) out(i, j) = embeddings(i, j);
  }
  normalize_rows(out);
  return out;
}

template void validate_weights(const EncoderWeightsT<float>&);
template void validate_weights(const EncoderWeightsT<double>&);
template MatrixD forward_raw(const EncoderWeightsT<double>&, const MatrixD&, const MaskMatrix&,
                             ForwardCache<double>*);
template Matrix forward_raw(const EncoderWeightsT<float>&, const Matrix&, const MaskMatrix&,
                            ForwardCache<float>*);

}  // namespace freechunk
