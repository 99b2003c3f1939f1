#include "dsgd/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dsgd {

namespace {

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
  }
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("DenseMatrix: dimensions must be positive");
  }
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("DenseMatrix: dimensions must be positive");
  }
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("DenseMatrix: expected " + std::to_string(rows * cols) +
                                " entries, got " + std::to_string(data_.size()));
  }
  if (!all_finite()) {
    throw std::invalid_argument("DenseMatrix: non-finite entry");
  }
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  if (rows_ == 0 || cols_ == 0) {
    throw std::invalid_argument("DenseMatrix: dimensions must be positive");
  }
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw std::invalid_argument("DenseMatrix: ragged rows");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  if (!all_finite()) throw std::invalid_argument("DenseMatrix: non-finite entry");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::column(std::span<const double> values) {
  return DenseMatrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

bool DenseMatrix::is_zero() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return x == 0.0; });
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

void DenseMatrix::add_scaled(const DenseMatrix& other, double s) {
  require_same_shape(*this, other, "add_scaled");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += s * other.data_[k];
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

double frobenius_inner(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "frobenius_inner");
  const auto x = a.values();
  const auto y = b.values();
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
  return s;
}

double frobenius_norm(const DenseMatrix& a) { return std::sqrt(frobenius_inner(a, a)); }

double max_abs_difference(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "max_abs_difference");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
  return m;
}

double block_inner(const BlockVector& a, const BlockVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("block_inner: block count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += frobenius_inner(a[i], b[i]);
  return s;
}

bool same_shapes(const BlockVector& a, const BlockVector& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!a[i].same_shape(b[i])) return false;
  return true;
}

BlockVector zeros_like(const BlockVector& a) {
  BlockVector z;
  z.reserve(a.size());
  for (const auto& m : a) z.emplace_back(m.rows(), m.cols());
  return z;
}

void add_scaled(BlockVector& a, const BlockVector& b, double s) {
  if (a.size() != b.size()) throw std::invalid_argument("add_scaled: block count mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i].add_scaled(b[i], s);
}

}  // namespace dsgd
