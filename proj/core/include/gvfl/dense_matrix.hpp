#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gvfl {

class SeededRng;

/// Row-major dense matrix of doubles. Scalars travel as 1x1 matrices.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols);  // zero-filled
  DenseMatrix(int rows, int cols, std::vector<double> data);

  static DenseMatrix identity(int n);
  static DenseMatrix filled(int rows, int cols, double value);
  static DenseMatrix scalar(double value);
  /// Glorot-uniform init: U(-b, b) with b = sqrt(6 / (rows + cols)).
  static DenseMatrix glorot(int rows, int cols, SeededRng& rng);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int r, int c) {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> row(int r) {
    return {data_.data() + static_cast<std::size_t>(r) * cols_,
            static_cast<std::size_t>(cols_)};
  }
  std::span<const double> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_,
            static_cast<std::size_t>(cols_)};
  }

  bool same_shape(const DenseMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }
  bool all_finite() const;
  void fill(double v);

  /// Scalar accessor; requires a 1x1 matrix.
  double scalar_value() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Products go through a tuned GEMM; everything else is plain loops.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);  // a^T * b
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);  // a * b^T

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scale(const DenseMatrix& a, double s);
DenseMatrix relu(const DenseMatrix& a);

/// Numerically stable softmax per row (max subtraction); rows sum to 1.
DenseMatrix row_softmax(const DenseMatrix& logits);

/// Column-wise concatenation; all parts must have equal row counts.
DenseMatrix concat_cols(std::span<const DenseMatrix> parts);
DenseMatrix slice_cols(const DenseMatrix& m, int begin, int end);

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace gvfl
