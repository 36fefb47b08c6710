#include "gvfl/dense_matrix.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gvfl/rng.hpp"

namespace gvfl {

namespace {

using EigenMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstEigenMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void require_shape(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

DenseMatrix::DenseMatrix(int rows, int cols)
    : rows_(rows), cols_(cols),
      data_(static_cast<std::size_t>(rows) * cols, 0.0) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("negative dimension");
}

DenseMatrix::DenseMatrix(int rows, int cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != static_cast<std::size_t>(rows) * cols)
    throw std::invalid_argument("data length does not match rows*cols");
}

DenseMatrix DenseMatrix::identity(int n) {
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::filled(int rows, int cols, double value) {
  DenseMatrix m(rows, cols);
  m.fill(value);
  return m;
}

DenseMatrix DenseMatrix::scalar(double value) {
  DenseMatrix m(1, 1);
  m(0, 0) = value;
  return m;
}

DenseMatrix DenseMatrix::glorot(int rows, int cols, SeededRng& rng) {
  const double bound = std::sqrt(6.0 / (rows + cols));
  DenseMatrix m(rows, cols);
  for (double& v : m.data_) v = rng.uniform(-bound, bound);
  return m;
}

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

void DenseMatrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double DenseMatrix::scalar_value() const {
  if (rows_ != 1 || cols_ != 1)
    throw std::invalid_argument("scalar_value on non-1x1 matrix");
  return data_[0];
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.cols() == b.rows(), "matmul: inner dimensions differ");
  DenseMatrix out(a.rows(), b.cols());
  EigenMap(out.data(), out.rows(), out.cols()) =
      ConstEigenMap(a.data(), a.rows(), a.cols()) *
      ConstEigenMap(b.data(), b.rows(), b.cols());
  return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.rows() == b.rows(), "matmul_tn: row counts differ");
  DenseMatrix out(a.cols(), b.cols());
  EigenMap(out.data(), out.rows(), out.cols()) =
      ConstEigenMap(a.data(), a.rows(), a.cols()).transpose() *
      ConstEigenMap(b.data(), b.rows(), b.cols());
  return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.cols() == b.cols(), "matmul_nt: column counts differ");
  DenseMatrix out(a.rows(), b.rows());
  EigenMap(out.data(), out.rows(), out.cols()) =
      ConstEigenMap(a.data(), a.rows(), a.cols()) *
      ConstEigenMap(b.data(), b.rows(), b.cols()).transpose();
  return out;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.same_shape(b), "add: shape mismatch");
  DenseMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = a.data()[i] + b.data()[i];
  return out;
}

DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.same_shape(b), "sub: shape mismatch");
  DenseMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = a.data()[i] - b.data()[i];
  return out;
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.same_shape(b), "hadamard: shape mismatch");
  DenseMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = a.data()[i] * b.data()[i];
  return out;
}

DenseMatrix scale(const DenseMatrix& a, double s) {
  DenseMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a.data()[i] * s;
  return out;
}

DenseMatrix relu(const DenseMatrix& a) {
  DenseMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
  return out;
}

DenseMatrix row_softmax(const DenseMatrix& logits) {
  DenseMatrix out(logits.rows(), logits.cols());
  for (int r = 0; r < logits.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < logits.cols(); ++c) mx = std::max(mx, logits(r, c));
    double sum = 0.0;
    for (int c = 0; c < logits.cols(); ++c) {
      out(r, c) = std::exp(logits(r, c) - mx);
      sum += out(r, c);
    }
    for (int c = 0; c < logits.cols(); ++c) out(r, c) /= sum;
  }
  return out;
}

DenseMatrix concat_cols(std::span<const DenseMatrix> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  const int rows = parts[0].rows();
  int cols = 0;
  for (const auto& p : parts) {
    require_shape(p.rows() == rows, "concat_cols: row counts differ");
    cols += p.cols();
  }
  DenseMatrix out(rows, cols);
  int offset = 0;
  for (const auto& p : parts) {
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < p.cols(); ++c) out(r, offset + c) = p(r, c);
    offset += p.cols();
  }
  return out;
}

DenseMatrix slice_cols(const DenseMatrix& m, int begin, int end) {
  if (begin < 0 || end > m.cols() || begin > end)
    throw std::invalid_argument("slice_cols: range out of bounds");
  DenseMatrix out(m.rows(), end - begin);
  for (int r = 0; r < m.rows(); ++r)
    for (int c = begin; c < end; ++c) out(r, c - begin) = m(r, c);
  return out;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.same_shape(b), "max_abs_diff: shape mismatch");
  double mx = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    mx = std::max(mx, std::abs(a.data()[i] - b.data()[i]));
  return mx;
}

}  // namespace gvfl
