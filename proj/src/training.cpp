#include "freechunk/training.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "freechunk/error.hpp"
#include "freechunk/rng.hpp"

namespace freechunk {
namespace {

// dx for y = layer_norm(x) * gain + bias, accumulating dgain and dbias.
MatrixD layer_norm_backward(const MatrixD& x, const std::vector<double>& gain, const MatrixD& dy,
                            std::vector<double>& dgain, std::vector<double>& dbias) {
  const std::size_t d = x.cols();
  const double width = static_cast<double>(d);
  MatrixD dx(x.rows(), d);
  std::vector<double> xhat(d), dxhat(d);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    double mean = 0.0;
    for (const double v : row) mean += v;
    mean /= width;
    double var = 0.0;
    for (const double v : row) var += (v - mean) * (v - mean);
    var /= width;
    const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
    double mean_dxhat = 0.0;
    double mean_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      xhat[j] = (row[j] - mean) * inv_std;
      dgain[j] += dy(i, j) * xhat[j];
      dbias[j] += dy(i, j);
      dxhat[j] = dy(i, j) * gain[j];
      mean_dxhat += dxhat[j];
      mean_dxhat_xhat += dxhat[j] * xhat[j];
    }
    mean_dxhat /= width;
    mean_dxhat_xhat /= width;
    for (std::size_t j = 0; j < d; ++j) {
      dx(i, j) = inv_std * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
    }
  }
  return dx;
}

// out += a^T * b
void accumulate_at_b(const MatrixD& a, const MatrixD& b, MatrixD& out) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto a_row = a.row(r);
    const auto b_row = b.row(r);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double ai = a_row[i];
      if (ai == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += ai * b_row[j];
    }
  }
}

void accumulate_column_sums(const MatrixD& a, std::vector<double>& out) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto row = a.row(r);
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += row[j];
  }
}

Gradients zero_like(const EncoderWeightsT<double>& weights) {
  Gradients g = weights;
  for_each_tensor(g, [](const std::string&, const auto&, std::span<double> values) {
    for (auto& v : values) v = 0.0;
  });
  return g;
}

}  // namespace

Gradients zero_gradients_like(const EncoderWeights& weights) { return zero_like(weights.cast<double>()); }

template <typename T>
std::vector<double> cosine_loss_per_row(const BasicMatrix<T>& teacher, const BasicMatrix<T>& student) {
  if (teacher.rows() != student.rows() || teacher.cols() != student.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "teacher and student shapes differ");
  }
  std::vector<double> out(teacher.rows());
  for (std::size_t i = 0; i < teacher.rows(); ++i) out[i] = 1.0 - cosine(teacher.row(i), student.row(i));
  return out;
}

template <typename T>
double cosine_loss(const BasicMatrix<T>& teacher, const BasicMatrix<T>& student) {
  const auto rows = cosine_loss_per_row(teacher, student);
  if (rows.empty()) throw Error(ErrorCode::kEmptyBatch, "cosine loss over zero pairs");
  double mean_cos = 0.0;
  for (const double l : rows) mean_cos += 1.0 - l;
  return 1.0 - mean_cos / static_cast<double>(rows.size());
}

template double cosine_loss(const Matrix&, const Matrix&);
template double cosine_loss(const MatrixD&, const MatrixD&);
template std::vector<double> cosine_loss_per_row(const Matrix&, const Matrix&);
template std::vector<double> cosine_loss_per_row(const MatrixD&, const MatrixD&);

BackwardResult backward_from_output_grad(const EncoderWeightsT<double>& weights, const MatrixD& sentences,
                                         const MaskMatrix& mask, const MatrixD& output_grad) {
  ForwardCache<double> cache;
  forward_raw(weights, sentences, mask, &cache);
  const std::size_t d = weights.d;
  if (output_grad.rows() != mask.rows() || output_grad.cols() != d) {
    throw Error(ErrorCode::kShapeMismatch, "output gradient shape does not match the encoder output");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  BackwardResult result;
  result.grads = zero_like(weights);
  result.sentence_grads = MatrixD(sentences.rows(), sentences.cols());

  MatrixD d_state = output_grad;
  for (std::size_t li = weights.layers.size(); li-- > 0;) {
    const auto& l = weights.layers[li];
    const auto& c = cache.layers[li];
    auto& g = result.grads.layers[li];

    // Output = LN2(ln1_out + FFN(ln1_out))
    auto d_ln2_in = layer_norm_backward(c.ln2_in, l.ln2_gain, d_state, g.ln2_gain, g.ln2_bias);
    MatrixD d_ln1_out = d_ln2_in;
    const MatrixD& d_ffn_out = d_ln2_in;
    accumulate_at_b(c.ffn_act, d_ffn_out, g.ffn_w2);
    accumulate_column_sums(d_ffn_out, g.ffn_b2);
    auto d_act = matmul_transposed(d_ffn_out, l.ffn_w2);
    for (std::size_t i = 0; i < d_act.size(); ++i) d_act.values()[i] *= gelu_derivative(c.ffn_pre.values()[i]);
    accumulate_at_b(c.ln1_out, d_act, g.ffn_w1);
    accumulate_column_sums(d_act, g.ffn_b1);
    add_inplace(d_ln1_out, matmul_transposed(d_act, l.ffn_w1));

    // ln1_out = LN1(H + A V)
    auto d_ln1_in = layer_norm_backward(c.ln1_in, l.ln1_gain, d_ln1_out, g.ln1_gain, g.ln1_bias);
    MatrixD d_h = d_ln1_in;
    const MatrixD& d_attended = d_ln1_in;
    auto d_attention = matmul_transposed(d_attended, c.v);  // m x n
    MatrixD d_v(c.v.rows(), c.v.cols());
    accumulate_at_b(c.attention, d_attended, d_v);

    // Softmax rows; masked entries have zero probability and so zero gradient.
    MatrixD d_logits(d_attention.rows(), d_attention.cols());
    for (std::size_t i = 0; i < d_attention.rows(); ++i) {
      double inner = 0.0;
      for (std::size_t j = 0; j < d_attention.cols(); ++j) inner += d_attention(i, j) * c.attention(i, j);
      for (std::size_t j = 0; j < d_attention.cols(); ++j) {
        d_logits(i, j) = c.attention(i, j) * (d_attention(i, j) - inner) * scale;
      }
    }
    auto d_q = matmul(d_logits, c.k);  // m x d
    MatrixD d_k(c.k.rows(), c.k.cols());
    accumulate_at_b(d_logits, c.q, d_k);

    accumulate_at_b(c.query_in, d_q, g.w_q);
    add_inplace(d_h, matmul_transposed(d_q, l.w_q));
    accumulate_at_b(sentences, d_k, g.w_k);
    accumulate_at_b(sentences, d_v, g.w_v);
    add_inplace(result.sentence_grads, matmul_transposed(d_k, l.w_k));
    add_inplace(result.sentence_grads, matmul_transposed(d_v, l.w_v));

    accumulate_column_sums(d_h, g.h_chk);
    d_state = std::move(d_h);
  }
  return result;
}

BackwardResult backward(const EncoderWeightsT<double>& weights, const MatrixD& sentences, const MaskMatrix& mask,
                        const MatrixD& teacher) {
  const auto output = forward_raw(weights, sentences, mask);
  if (teacher.rows() != output.rows() || teacher.cols() != output.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "teacher rows do not match the mask rows");
  }
  const std::size_t m = output.rows();
  MatrixD d_out(m, output.cols());
  double mean_cos = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto y = output.row(i);
    const auto t = teacher.row(i);
    const double ny = l2_norm(y);
    const double nt = l2_norm(t);
    if (ny == 0.0 || nt == 0.0) throw Error(ErrorCode::kZeroVector, "row " + std::to_string(i));
    const double cos = dot(y, t) / (ny * nt);
    mean_cos += cos;
    // d(1 - cos/m)/dy = -(t/(|t||y|) - cos * y/|y|^2) / m
    for (std::size_t j = 0; j < y.size(); ++j) {
      d_out(i, j) = -(t[j] / (nt * ny) - cos * y[j] / (ny * ny)) / static_cast<double>(m);
    }
  }
  auto result = backward_from_output_grad(weights, sentences, mask, d_out);
  result.loss = 1.0 - mean_cos / static_cast<double>(m);
  return result;
}

void adamw_step(std::span<float> params, std::span<const double> grads, AdamWMoments& moments,
                std::uint64_t step, double lr, const AdamWHyper& hyper) {
  if (params.size() != grads.size()) throw Error(ErrorCode::kShapeMismatch, "parameter and gradient sizes differ");
  if (step == 0) throw Error(ErrorCode::kInvalidArgument, "adamw step count starts at 1");
  if (!(lr > 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning rate must be positive");
  for (const double g : grads) {
    if (!std::isfinite(g)) throw Error(ErrorCode::kNonFiniteGradient, "gradient entry is not finite");
  }
  moments.first.resize(params.size(), 0.0);
  moments.second.resize(params.size(), 0.0);
  const double correction1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
  const double correction2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double p = params[i];
    p -= lr * hyper.weight_decay * p;
    auto& m = moments.first[i];
    auto& v = moments.second[i];
    m = hyper.beta1 * m + (1.0 - hyper.beta1) * grads[i];
    v = hyper.beta2 * v + (1.0 - hyper.beta2) * grads[i] * grads[i];
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    p -= lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
    params[i] = static_cast<float>(p);
  }
}

AdamW::AdamW(const EncoderWeights& weights, AdamWHyper hyper) : hyper_(hyper) {
  for_each_tensor(weights, [&](const std::string&, const auto&, auto values) {
    moments_.push_back({std::vector<double>(values.size(), 0.0), std::vector<double>(values.size(), 0.0)});
  });
}

void AdamW::step(EncoderWeights& weights, const Gradients& grads, double lr) {
  std::vector<std::span<const double>> grad_tensors;
  for_each_tensor(grads, [&](const std::string&, const auto&, std::span<const double> values) {
    grad_tensors.push_back(values);
  });
  if (grad_tensors.size() != moments_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "gradient layout does not match the optimizer state");
  }
  ++step_;
  std::size_t i = 0;
  for_each_tensor(weights, [&](const std::string& name, const auto&, std::span<float> values) {
    try {
      adamw_step(values, grad_tensors[i], moments_[i], step_, lr, hyper_);
    } catch (const Error& e) {
      throw Error(e.code(), name + ": " + e.what());
    }
    ++i;
  });
}

std::size_t warmup_steps(std::size_t total_steps, const TrainConfig& config) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(total_steps) * config.warmup_fraction));
}

double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& config) {
  if (total_steps == 0) return 0.0;
  const std::size_t warmup = warmup_steps(total_steps, config);
  if (step <= warmup) {
    return warmup == 0 ? config.base_lr
                       : config.base_lr * static_cast<double>(step) / static_cast<double>(warmup);
  }
  if (step >= total_steps) return 0.0;
  const double progress = static_cast<double>(step - warmup) / static_cast<double>(total_steps - warmup);
  return config.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

namespace {

struct PreparedDocument {
  MatrixD sentences;
  MaskMatrix mask;
  MatrixD teacher;
};

PreparedDocument prepare(const TrainingDocument& doc, const TeacherProvider& teacher,
                         const TrainConfig& config) {
  const auto patterns = build_sliding_patterns(doc.sentences.rows(), config.granularities);
  const auto target = teacher(doc, patterns);
  if (target.rows() != patterns.size() || target.cols() != doc.sentences.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "teacher output for document " + doc.id + " has the wrong shape");
  }
  return {doc.sentences.cast<double>(), pattern_to_mask(patterns), target.cast<double>()};
}

void add_scaled(Gradients& acc, const Gradients& g, double scale) {
  std::vector<std::span<const double>> src;
  for_each_tensor(g, [&](const std::string&, const auto&, std::span<const double> v) { src.push_back(v); });
  std::size_t i = 0;
  for_each_tensor(acc, [&](const std::string&, const auto&, std::span<double> v) {
    for (std::size_t j = 0; j < v.size(); ++j) v[j] += scale * src[i][j];
    ++i;
  });
}

double mean_loss(const EncoderWeights& weights, const std::vector<PreparedDocument>& docs,
                 std::vector<double>* per_document = nullptr) {
  const auto w = weights.cast<double>();
  double total = 0.0;
  for (const auto& doc : docs) {
    const double loss = cosine_loss(doc.teacher, forward_raw(w, doc.sentences, doc.mask));
    if (per_document) per_document->push_back(loss);
    total += loss;
  }
  return docs.empty() ? 0.0 : total / static_cast<double>(docs.size());
}

}  // namespace

EvalResult evaluate(const EncoderWeights& weights, const std::vector<TrainingDocument>& documents,
                    const TeacherProvider& teacher, const TrainConfig& config) {
  std::vector<PreparedDocument> prepared;
  for (const auto& doc : documents) prepared.push_back(prepare(doc, teacher, config));
  EvalResult out;
  out.mean_loss = mean_loss(weights, prepared, &out.per_document);
  std::size_t fit = 0;
  for (const double l : out.per_document) fit += l < kFitThreshold ? 1 : 0;
  out.fit_fraction = out.per_document.empty() ? 0.0
                                              : static_cast<double>(fit) / static_cast<double>(out.per_document.size());
  return out;
}

TrainResult train(const EncoderWeights& initial, const std::vector<TrainingDocument>& train_set,
                  const std::vector<TrainingDocument>& validation_set, const TeacherProvider& teacher,
                  const TrainConfig& config) {
  validate_weights(initial);
  if (config.batch_size == 0 || config.validation_interval == 0 || !(config.base_lr > 0.0) ||
      !(config.warmup_fraction > 0.0 && config.warmup_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "training configuration values must be positive");
  }
  TrainResult result{initial, {}, std::nullopt};
  if (config.epochs == 0) return result;
  if (train_set.empty()) throw Error(ErrorCode::kEmptyBatch, "training corpus is empty");

  std::vector<PreparedDocument> train_docs;
  train_docs.reserve(train_set.size());
  for (const auto& doc : train_set) train_docs.push_back(prepare(doc, teacher, config));
  std::vector<PreparedDocument> val_docs;
  for (const auto& doc : validation_set) val_docs.push_back(prepare(doc, teacher, config));

  const std::size_t steps_per_epoch = (train_docs.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = steps_per_epoch * config.epochs;
  AdamW optimizer(result.weights, config.adamw);
  Rng rng(config.seed);
  std::vector<std::size_t> order(train_docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t batch_start = 0; batch_start < order.size(); batch_start += config.batch_size) {
      const std::size_t batch_end = std::min(order.size(), batch_start + config.batch_size);
      const double weight = 1.0 / static_cast<double>(batch_end - batch_start);
      const auto w = result.weights.cast<double>();
      auto grads = zero_like(w);
      double batch_loss = 0.0;
      for (std::size_t b = batch_start; b < batch_end; ++b) {
        const auto& doc = train_docs[order[b]];
        const auto r = backward(w, doc.sentences, doc.mask, doc.teacher);
        add_scaled(grads, r.grads, weight);
        batch_loss += weight * r.loss;
      }
      ++step;
      // The schedule reaches exactly 0 on the final step, where AdamW is a no-op.
      if (const double lr = lr_at(step, total_steps, config); lr > 0.0) optimizer.step(result.weights, grads, lr);
      LossRecord record{step, batch_loss, std::nullopt};
      if (!val_docs.empty() && (step % config.validation_interval == 0 || step == total_steps)) {
        record.val_loss = mean_loss(result.weights, val_docs);
      }
      result.history.push_back(record);
    }
  }
  if (!val_docs.empty()) result.final_val_loss = result.history.back().val_loss;
  return result;
}

std::string loss_history_csv(const std::vector<LossRecord>& history) {
  std::ostringstream out;
  out.precision(9);
  out << "step,train_loss,val_loss\n";
  for (const auto& r : history) {
    out << r.step << ',' << r.train_loss << ',';
    if (r.val_loss) out << *r.val_loss;
    out << '\n';
  }
  return out.str();
}

}  // namespace freechunk
