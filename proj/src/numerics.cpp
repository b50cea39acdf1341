#include "freechunk/numerics.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "freechunk/error.hpp"

namespace freechunk {
namespace {

std::string shape(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

template <typename T>
BasicMatrix<T>::BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw Error(ErrorCode::kShapeMismatch, "matrix " + shape(rows, cols) + " given " +
                                               std::to_string(data_.size()) + " values");
  }
}

template <typename T>
BasicMatrix<T> BasicMatrix<T>::identity(std::size_t n) {
  BasicMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
  return m;
}

template <typename T>
bool BasicMatrix<T>::all_finite() const {
  for (const T v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

MaskMatrix MaskMatrix::select_rows(std::span<const std::size_t> rows) const {
  MaskMatrix out(rows.size(), cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= this->rows()) {
      throw Error(ErrorCode::kIndexOutOfRange, "mask row " + std::to_string(rows[i]));
    }
    for (std::size_t j = 0; j < cols(); ++j) out.values_(i, j) = values_(rows[i], j);
  }
  return out;
}

template <typename T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::kShapeMismatch,
                "matmul " + shape(a.rows(), a.cols()) + " by " + shape(b.rows(), b.cols()));
  }
  BasicMatrix<T> out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T aik = a(i, k);
      const auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

template <typename T>
BasicMatrix<T> matmul_transposed(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::kShapeMismatch,
                "matmul_transposed " + shape(a.rows(), a.cols()) + " by " + shape(b.rows(), b.cols()));
  }
  BasicMatrix<T> out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto a_row = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto b_row = b.row(j);
      T acc = T(0);
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a_row[k] * b_row[k];
      out(i, j) = acc;
    }
  }
  return out;
}

template <typename T>
BasicMatrix<T> transpose(const BasicMatrix<T>& a) {
  BasicMatrix<T> out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

template <typename T>
BasicMatrix<T> masked_softmax_rows(const BasicMatrix<T>& logits, const MaskMatrix& mask) {
  if (logits.rows() != mask.rows() || logits.cols() != mask.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "softmax logits " + shape(logits.rows(), logits.cols()) +
                                               " vs mask " + shape(mask.rows(), mask.cols()));
  }
  BasicMatrix<T> out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    bool any = false;
    T max_logit = T(0);
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      if (mask.is_masked(i, j)) continue;
      const T v = logits(i, j) + static_cast<T>(mask(i, j));
      if (!any || v > max_logit) max_logit = v;
      any = true;
    }
    if (!any) throw Error(ErrorCode::kAllMaskedRow, "row " + std::to_string(i));
    T total = T(0);
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      if (mask.is_masked(i, j)) continue;
      const T e = std::exp(logits(i, j) + static_cast<T>(mask(i, j)) - max_logit);
      out(i, j) = e;
      total += e;
    }
    for (std::size_t j = 0; j < logits.cols(); ++j) out(i, j) /= total;
  }
  return out;
}

template <typename T>
BasicMatrix<T> layer_norm(const BasicMatrix<T>& x, std::span<const T> gain, std::span<const T> bias,
                          T eps) {
  if (gain.size() != x.cols() || bias.size() != x.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "layer_norm parameters do not match width " +
                                               std::to_string(x.cols()));
  }
  BasicMatrix<T> out(x.rows(), x.cols());
  const T width = static_cast<T>(x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    T mean = T(0);
    for (const T v : row) mean += v;
    mean /= width;
    T var = T(0);
    for (const T v : row) var += (v - mean) * (v - mean);
    var /= width;
    const T inv_std = T(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < x.cols(); ++j) {
      out(i, j) = (row[j] - mean) * inv_std * gain[j] + bias[j];
    }
  }
  return out;
}

template <typename T>
T gelu(T x) {
  constexpr T kC = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  constexpr T kCubic = static_cast<T>(0.044715);
  return T(0.5) * x * (T(1) + std::tanh(kC * (x + kCubic * x * x * x)));
}

template <typename T>
T gelu_derivative(T x) {
  constexpr T kC = static_cast<T>(0.7978845608028654);
  constexpr T kCubic = static_cast<T>(0.044715);
  const T t = std::tanh(kC * (x + kCubic * x * x * x));
  return T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * kC * (T(1) + T(3) * kCubic * x * x);
}

template <typename T>
void add_row_bias(BasicMatrix<T>& x, std::span<const T> bias) {
  if (bias.size() != x.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "bias of length " + std::to_string(bias.size()) +
                                               " for width " + std::to_string(x.cols()));
  }
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias[j];
  }
}

template <typename T>
void add_inplace(BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kShapeMismatch,
                "add " + shape(a.rows(), a.cols()) + " and " + shape(b.rows(), b.cols()));
  }
  auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) av[i] += bv[i];
}

template <typename T>
BasicMatrix<T> ffn_forward(const BasicMatrix<T>& x, const BasicMatrix<T>& w1, std::span<const T> b1,
                           const BasicMatrix<T>& w2, std::span<const T> b2) {
  if (w1.cols() != w2.rows() || w2.cols() != x.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "ffn weights " + shape(w1.rows(), w1.cols()) + " and " +
                                               shape(w2.rows(), w2.cols()) + " for width " +
                                               std::to_string(x.cols()));
  }
  auto hidden = matmul(x, w1);
  add_row_bias(hidden, b1);
  for (auto& v : hidden.values()) v = gelu(v);
  auto out = matmul(hidden, w2);
  add_row_bias(out, b2);
  return out;
}

template <typename T>
double dot(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kShapeMismatch, "dot of lengths " + std::to_string(a.size()) + " and " +
                                               std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

template <typename T>
double l2_norm(std::span<const T> a) {
  return std::sqrt(dot(a, a));
}

template <typename T>
double cosine(std::span<const T> a, std::span<const T> b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::kZeroVector, "cosine of a zero vector");
  return dot(a, b) / (na * nb);
}

template <typename T>
void normalize_rows(BasicMatrix<T>& x) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    const double norm = l2_norm(std::span<const T>(row));
    if (norm == 0.0) throw Error(ErrorCode::kZeroVector, "row " + std::to_string(i) + " has zero norm");
    for (auto& v : row) v = static_cast<T>(v / norm);
  }
}

#define FREECHUNK_INSTANTIATE(T)                                                                   \
  template class BasicMatrix<T>;                                                                   \
  template BasicMatrix<T> matmul(const BasicMatrix<T>&, const BasicMatrix<T>&);                    \
  template BasicMatrix<T> matmul_transposed(const BasicMatrix<T>&, const BasicMatrix<T>&);         \
  template BasicMatrix<T> transpose(const BasicMatrix<T>&);                                        \
  template BasicMatrix<T> masked_softmax_rows(const BasicMatrix<T>&, const MaskMatrix&);           \
  template BasicMatrix<T> layer_norm(const BasicMatrix<T>&, std::span<const T>, std::span<const T>, \
                                     T);                                                           \
  template T gelu(T);                                                                              \
  template T gelu_derivative(T);                                                                   \
  template BasicMatrix<T> ffn_forward(const BasicMatrix<T>&, const BasicMatrix<T>&,                \
                                      std::span<const T>, const BasicMatrix<T>&, std::span<const T>); \
  template void add_row_bias(BasicMatrix<T>&, std::span<const T>);                                 \
  template void add_inplace(BasicMatrix<T>&, const BasicMatrix<T>&);                               \
  template double dot(std::span<const T>, std::span<const T>);                                     \
  template double l2_norm(std::span<const T>);                                                     \
  template double cosine(std::span<const T>, std::span<const T>);                                  \
  template void normalize_rows(BasicMatrix<T>&);

FREECHUNK_INSTANTIATE(float)
FREECHUNK_INSTANTIATE(double)

#undef FREECHUNK_INSTANTIATE

}  // namespace freechunk
