#include "rnngraph/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rnngraph/thread_pool.hpp"

namespace rnngraph {

namespace {

// Rows per task below which splitting is not worth a fork/join.
constexpr std::size_t kMinWorkPerTask = 1 << 15;

std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

std::size_t row_grain(std::size_t work_per_row) {
  return std::max<std::size_t>(1, kMinWorkPerTask / std::max<std::size_t>(1, work_per_row));
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols)
    throw ShapeError("matrix " + shape_str(rows, cols) + " given " +
                     std::to_string(values_.size()) + " values");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

Matrix to_matrix(ConstMatrixView v) {
  Matrix m(v.rows, v.cols);
  copy(v, m.view());
  return m;
}

void copy(ConstMatrixView src, MatrixView dst) {
  if (src.rows != dst.rows || src.cols != dst.cols)
    throw ShapeError("copy " + shape_str(src.rows, src.cols) + " into " +
                     shape_str(dst.rows, dst.cols));
  for (std::size_t r = 0; r < src.rows; ++r) {
    if (src.stride == 1 && dst.stride == 1) {
      std::copy_n(&src(r, 0), src.cols, &dst(r, 0));
    } else {
      for (std::size_t c = 0; c < src.cols; ++c) dst(r, c) = src(r, c);
    }
  }
}

void fill(MatrixView dst, double value) {
  for (std::size_t r = 0; r < dst.rows; ++r)
    for (std::size_t c = 0; c < dst.cols; ++c) dst(r, c) = value;
}

void gemm(ConstMatrixView a, Transpose transpose_a, ConstMatrixView b, MatrixView c,
          ThreadPool* pool) {
  const bool ta = transpose_a == Transpose::kYes;
  const std::size_t m = ta ? a.cols : a.rows;
  const std::size_t k = ta ? a.rows : a.cols;
  if (k != b.rows || m != c.rows || b.cols != c.cols)
    throw ShapeError("gemm: op(a) " + shape_str(m, k) + " * b " + shape_str(b.rows, b.cols) +
                     " into c " + shape_str(c.rows, c.cols));
  const std::size_t n = c.cols;
  if (m == 0 || n == 0 || k == 0) return;

  parallel_for(pool, m, row_grain(k * n), [&](std::size_t row_begin, std::size_t row_end) {
    for (std::size_t i = row_begin; i < row_end; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = ta ? a(p, i) : a(i, p);
        if (b.stride == 1 && c.stride == 1) {
          const double* brow = &b(p, 0);
          double* crow = &c(i, 0);
          for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        } else {
          for (std::size_t j = 0; j < n; ++j) c(i, j) += aip * b(p, j);
        }
      }
    }
  });
}

void gemm_nt(ConstMatrixView a, ConstMatrixView b, MatrixView c, ThreadPool* pool) {
  if (a.cols != b.cols || a.rows != c.rows || b.rows != c.cols)
    throw ShapeError("gemm_nt: a " + shape_str(a.rows, a.cols) + " * b^T " +
                     shape_str(b.cols, b.rows) + " into c " + shape_str(c.rows, c.cols));
  Matrix bt(b.cols, b.rows);
  for (std::size_t r = 0; r < b.rows; ++r)
    for (std::size_t p = 0; p < b.cols; ++p) bt(p, r) = b(r, p);
  gemm(a, Transpose::kNo, bt.view(), c, pool);
}

Matrix gemm(const Matrix& a, const Matrix& b, bool transpose_a, Matrix accumulate_into) {
  gemm(a.view(), transpose_a ? Transpose::kYes : Transpose::kNo, b.view(), accumulate_into.view());
  return accumulate_into;
}

void add_into(ConstMatrixView src, MatrixView dst) {
  if (src.rows != dst.rows || src.cols != dst.cols)
    throw ShapeError("add " + shape_str(src.rows, src.cols) + " into " +
                     shape_str(dst.rows, dst.cols));
  for (std::size_t r = 0; r < dst.rows; ++r)
    for (std::size_t c = 0; c < dst.cols; ++c) dst(r, c) += src(r, c);
}

void mul_into(ConstMatrixView src, MatrixView dst) {
  if (src.rows != dst.rows || src.cols != dst.cols)
    throw ShapeError("mul " + shape_str(src.rows, src.cols) + " into " +
                     shape_str(dst.rows, dst.cols));
  for (std::size_t r = 0; r < dst.rows; ++r)
    for (std::size_t c = 0; c < dst.cols; ++c) dst(r, c) *= src(r, c);
}

Matrix ewise(EwiseOp op, std::span<const Matrix> inputs) {
  if (inputs.empty()) throw ShapeError("ewise: no inputs");
  Matrix out = inputs.front();
  for (std::size_t i = 1; i < inputs.size(); ++i) {
    if (op == EwiseOp::kMul) mul_into(inputs[i].view(), out.view());
    else add_into(inputs[i].view(), out.view());
  }
  return out;
}

void apply_activation(Activation f, MatrixView v) {
  switch (f) {
    case Activation::kIdentity:
      return;
    case Activation::kSigmoid:
      for (std::size_t r = 0; r < v.rows; ++r)
        for (std::size_t c = 0; c < v.cols; ++c) v(r, c) = 1.0 / (1.0 + std::exp(-v(r, c)));
      return;
    case Activation::kTanh:
      for (std::size_t r = 0; r < v.rows; ++r)
        for (std::size_t c = 0; c < v.cols; ++c) v(r, c) = std::tanh(v(r, c));
      return;
    case Activation::kSoftmax:
      for (std::size_t c = 0; c < v.cols; ++c) {
        double peak = v(0, c);
        for (std::size_t r = 1; r < v.rows; ++r) peak = std::max(peak, v(r, c));
        double total = 0.0;
        for (std::size_t r = 0; r < v.rows; ++r) {
          v(r, c) = std::exp(v(r, c) - peak);
          total += v(r, c);
        }
        for (std::size_t r = 0; r < v.rows; ++r) v(r, c) /= total;
      }
      return;
  }
}

Matrix activation(Activation f, const Matrix& s) {
  Matrix y = s;
  apply_activation(f, y.view());
  return y;
}

void activation_derivative(Activation f, ConstMatrixView y, MatrixView out) {
  if (y.rows != out.rows || y.cols != out.cols)
    throw ShapeError("activation_derivative: shape mismatch");
  for (std::size_t r = 0; r < y.rows; ++r) {
    for (std::size_t c = 0; c < y.cols; ++c) {
      const double v = y(r, c);
      switch (f) {
        case Activation::kIdentity: out(r, c) = 1.0; break;
        case Activation::kSigmoid: out(r, c) = v * (1.0 - v); break;
        case Activation::kTanh: out(r, c) = 1.0 - v * v; break;
        case Activation::kSoftmax:
          throw Error("softmax derivative is only available fused with cross-entropy");
      }
    }
  }
}

Matrix activation_deriv(Activation f, const Matrix& y) {
  Matrix out(y.rows(), y.cols());
  activation_derivative(f, y.view(), out.view());
  return out;
}

void check_finite(ConstMatrixView m, const char* what) {
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c)
      if (!std::isfinite(m(r, c)))
        throw Error(std::string(what) + ": non-finite value at (" + std::to_string(r) + ", " +
                    std::to_string(c) + ")");
}

}  // namespace rnngraph
