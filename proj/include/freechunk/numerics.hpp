#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace freechunk {

/// Finite stand-in for -inf in additive attention masks.
inline constexpr float kMaskedValue = -1e9f;

/// Dense row-major matrix. Used with float for inference and double for
/// gradient computation.
template <typename T>
class BasicMatrix {
 public:
  using value_type = T;

  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data);

  static BasicMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  const std::vector<T>& data() const { return data_; }

  template <typename U>
  BasicMatrix<U> cast() const {
    return BasicMatrix<U>(rows_, cols_, std::vector<U>(data_.begin(), data_.end()));
  }

  bool all_finite() const;

  friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<float>;
using MatrixD = BasicMatrix<double>;

/// Additive attention mask: 0 where a sentence belongs to a pattern, the
/// kMaskedValue sentinel elsewhere.
class MaskMatrix {
 public:
  MaskMatrix() = default;
  MaskMatrix(std::size_t rows, std::size_t cols) : values_(rows, cols, kMaskedValue) {}

  std::size_t rows() const { return values_.rows(); }
  std::size_t cols() const { return values_.cols(); }

  void allow(std::size_t r, std::size_t c) { values_(r, c) = 0.0f; }
  bool is_masked(std::size_t r, std::size_t c) const { return values_(r, c) <= kMaskedValue * 0.5f; }
  float operator()(std::size_t r, std::size_t c) const { return values_(r, c); }

  const Matrix& values() const { return values_; }

  /// Keeps only the given rows, in the given order.
  MaskMatrix select_rows(std::span<const std::size_t> rows) const;

  friend bool operator==(const MaskMatrix&, const MaskMatrix&) = default;

 private:
  Matrix values_;
};

template <typename T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b);

/// a * b^T without materializing the transpose.
template <typename T>
BasicMatrix<T> matmul_transposed(const BasicMatrix<T>& a, const BasicMatrix<T>& b);

template <typename T>
BasicMatrix<T> transpose(const BasicMatrix<T>& a);

/// Row-wise softmax of logits + mask. Masked entries come out exactly zero.
/// Throws AllMaskedRow if some row has no unmasked entry.
template <typename T>
BasicMatrix<T> masked_softmax_rows(const BasicMatrix<T>& logits, const MaskMatrix& mask);

inline constexpr double kLayerNormEps = 1e-5;

/// Per-row normalization with the biased (1/d) variance estimator.
template <typename T>
BasicMatrix<T> layer_norm(const BasicMatrix<T>& x, std::span<const T> gain,
                          std::span<const T> bias, T eps = T(kLayerNormEps));

/// GELU, tanh approximation.
template <typename T>
T gelu(T x);

template <typename T>
T gelu_derivative(T x);

/// gelu(x w1 + b1) w2 + b2.
template <typename T>
BasicMatrix<T> ffn_forward(const BasicMatrix<T>& x, const BasicMatrix<T>& w1, std::span<const T> b1,
                           const BasicMatrix<T>& w2, std::span<const T> b2);

/// Adds bias to every row in place.
template <typename T>
void add_row_bias(BasicMatrix<T>& x, std::span<const T> bias);

/// In-place a += b.
template <typename T>
void add_inplace(BasicMatrix<T>& a, const BasicMatrix<T>& b);

template <typename T>
double dot(std::span<const T> a, std::span<const T> b);

template <typename T>
double l2_norm(std::span<const T> a);

/// Cosine similarity; throws ZeroVector if either side has zero norm.
template <typename T>
double cosine(std::span<const T> a, std::span<const T> b);

/// Scales every row to unit L2 norm. Throws ZeroVector on a zero row.
template <typename T>
void normalize_rows(BasicMatrix<T>& x);

}  // namespace freechunk
