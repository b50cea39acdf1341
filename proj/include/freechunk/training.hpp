#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "freechunk/encoder.hpp"
#include "freechunk/numerics.hpp"
#include "freechunk/patterns.hpp"

namespace freechunk {

/// Gradients mirror the parameter layout, accumulated in double.
using Gradients = EncoderWeightsT<double>;

Gradients zero_gradients_like(const EncoderWeights& weights);

/// 1 - mean_i cos(teacher_i, student_i) over paired rows. Throws ZeroVector.
template <typename T>
double cosine_loss(const BasicMatrix<T>& teacher, const BasicMatrix<T>& student);

/// Per-row losses 1 - cos(teacher_i, student_i).
template <typename T>
std::vector<double> cosine_loss_per_row(const BasicMatrix<T>& teacher, const BasicMatrix<T>& student);

struct BackwardResult {
  double loss = 0.0;
  Gradients grads;
  MatrixD sentence_grads;  // d loss / d sentence embeddings
};

/// Gradient of cosine_loss(teacher, forward(weights, sentences, mask)) with
/// respect to every parameter and to the sentence embeddings.
BackwardResult backward(const EncoderWeightsT<double>& weights, const MatrixD& sentences,
                        const MaskMatrix& mask, const MatrixD& teacher);

/// Backpropagates an arbitrary upstream gradient on the raw (pre-normalization)
/// encoder output.
BackwardResult backward_from_output_grad(const EncoderWeightsT<double>& weights, const MatrixD& sentences,
                                         const MaskMatrix& mask, const MatrixD& output_grad);

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct AdamWMoments {
  std::vector<double> first;
  std::vector<double> second;
};

/// One decoupled-weight-decay Adam update of a flat tensor. `step` is the
/// 1-based update count used for bias correction. Throws NonFiniteGradient.
void adamw_step(std::span<float> params, std::span<const double> grads, AdamWMoments& moments,
                std::uint64_t step, double lr, const AdamWHyper& hyper);

/// Optimizer state for a whole encoder: one moment pair per tensor.
class AdamW {
 public:
  AdamW(const EncoderWeights& weights, AdamWHyper hyper);

  void step(EncoderWeights& weights, const Gradients& grads, double lr);

  std::uint64_t steps_taken() const { return step_; }
  const AdamWHyper& hyper() const { return hyper_; }

 private:
  AdamWHyper hyper_;
  std::vector<AdamWMoments> moments_;
  std::uint64_t step_ = 0;
};

inline constexpr double kFitThreshold = 0.06;

struct TrainConfig {
  std::size_t epochs = 2;
  std::size_t batch_size = 1;  // documents per optimizer step
  double base_lr = 1e-4;
  double warmup_fraction = 1.0 / 3.0;
  std::vector<std::size_t> granularities = kDefaultGranularities;
  std::size_t validation_interval = 1000;
  std::uint64_t seed = 0;
  AdamWHyper adamw;
};

/// Linear warmup to base_lr over the first ceil(total * warmup_fraction)
/// steps, then cosine decay to 0 at total_steps.
double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& config);

std::size_t warmup_steps(std::size_t total_steps, const TrainConfig& config);

struct TrainingDocument {
  std::string id;
  Matrix sentences;                      // n x d, unit rows
  std::vector<std::string> sentence_texts;  // optional; needed by remote teachers
};

/// Returns one unit-norm target row per pattern.
using TeacherProvider = std::function<Matrix(const TrainingDocument&, const PatternSet&)>;

struct LossRecord {
  std::size_t step = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
};

struct TrainResult {
  EncoderWeights weights;
  std::vector<LossRecord> history;
  std::optional<double> final_val_loss;
};

struct EvalResult {
  double mean_loss = 0.0;
  std::vector<double> per_document;
  double fit_fraction = 0.0;  // share of documents with loss < kFitThreshold
};

/// Mean held-out cosine loss under the sliding patterns of config.granularities.
EvalResult evaluate(const EncoderWeights& weights, const std::vector<TrainingDocument>& documents,
                    const TeacherProvider& teacher, const TrainConfig& config);

/// Distills `initial` toward the teacher: one optimizer step per batch of
/// documents, every sliding pattern of each document in a single forward.
TrainResult train(const EncoderWeights& initial, const std::vector<TrainingDocument>& train_set,
                  const std::vector<TrainingDocument>& validation_set, const TeacherProvider& teacher,
                  const TrainConfig& config);

/// Writes "step,train_loss,val_loss"; val_loss is empty when not evaluated.
std::string loss_history_csv(const std::vector<LossRecord>& history);

}  // namespace freechunk
