#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rnngraph/netdef.hpp"

namespace rnngraph {

class ThreadPool;

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-owning strided view. Element (r, c) lives at data[r * ld + c * stride].
template <typename T>
struct BasicMatrixView {
  T* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t ld = 0;
  std::size_t stride = 1;

  T& operator()(std::size_t r, std::size_t c) const { return data[r * ld + c * stride]; }

  /// Columns [first, first + count).
  BasicMatrixView columns(std::size_t first, std::size_t count) const {
    return {data + first * stride, rows, count, ld, stride};
  }
  /// Every `step`-th column starting at `first`.
  BasicMatrixView strided_columns(std::size_t first, std::size_t count, std::size_t step) const {
    return {data + first * stride, rows, count, ld, stride * step};
  }
  operator BasicMatrixView<const T>() const { return {data, rows, cols, ld, stride}; }
};

using MatrixView = BasicMatrixView<double>;
using ConstMatrixView = BasicMatrixView<const double>;

/// Dense row-major float64 matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  MatrixView view() { return {values_.data(), rows_, cols_, cols_, 1}; }
  ConstMatrixView view() const { return {values_.data(), rows_, cols_, cols_, 1}; }
  operator MatrixView() { return view(); }
  operator ConstMatrixView() const { return view(); }

  void fill(double v);
  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

Matrix to_matrix(ConstMatrixView v);
void copy(ConstMatrixView src, MatrixView dst);
void fill(MatrixView dst, double value);

/// Columns of a batch are ordered frame-major: column (t, n) of a batch
/// with N streams sits at t * N + n.
constexpr std::size_t batch_column(std::size_t frame, std::size_t stream, std::size_t streams) {
  return frame * streams + stream;
}

enum class Transpose { kNo, kYes };

/// c += op(a) * b. Every element of c accumulates its products in
/// ascending inner index directly into c, so results do not depend on the
/// column range or on how rows are split across threads.
void gemm(ConstMatrixView a, Transpose transpose_a, ConstMatrixView b, MatrixView c,
          ThreadPool* pool = nullptr);

/// c += a * b^T, same per-element ordering guarantee (ascending column of a).
void gemm_nt(ConstMatrixView a, ConstMatrixView b, MatrixView c, ThreadPool* pool = nullptr);

/// Value-returning convenience: returns accumulate_into + op(a) * b.
Matrix gemm(const Matrix& a, const Matrix& b, bool transpose_a, Matrix accumulate_into);

enum class EwiseOp { kMul, kAdd };

/// Element-wise fold of equally shaped inputs, left to right.
Matrix ewise(EwiseOp op, std::span<const Matrix> inputs);

void add_into(ConstMatrixView src, MatrixView dst);
void mul_into(ConstMatrixView src, MatrixView dst);

/// y = f(s) in place. Softmax normalises each column independently.
void apply_activation(Activation f, MatrixView values);
Matrix activation(Activation f, const Matrix& s);

/// f'(s) written in terms of y = f(s). Softmax has no standalone
/// derivative here (it is fused with the cross-entropy error) and throws.
void activation_derivative(Activation f, ConstMatrixView y, MatrixView out);
Matrix activation_deriv(Activation f, const Matrix& y);

/// Debug check: throws if any element is NaN or infinite.
void check_finite(ConstMatrixView m, const char* what);

}  // namespace rnngraph
