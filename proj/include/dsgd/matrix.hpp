#ifndef DSGD_MATRIX_HPP
#define DSGD_MATRIX_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace dsgd {

/// Row-major dense real matrix. Entries are finite on construction.
class DenseMatrix {
 public:
  DenseMatrix() = default;

  /// Zero matrix of the given shape. Both dimensions must be positive.
  DenseMatrix(std::size_t rows, std::size_t cols);

  /// Takes ownership of row-major `entries`; throws std::invalid_argument on
  /// a size mismatch or a non-finite entry.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  /// Nested row lists, e.g. {{3, -5}, {2, 2}}.
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix column(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  bool same_shape(const DenseMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;
  bool is_zero() const;

  DenseMatrix transposed() const;

  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator-=(const DenseMatrix& other);
  DenseMatrix& operator*=(double s);

  /// this += s * other
  void add_scaled(const DenseMatrix& other, double s);

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double s, DenseMatrix a);

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

/// Frobenius pairing <a, b> = sum_ij a_ij b_ij. Shapes must agree.
double frobenius_inner(const DenseMatrix& a, const DenseMatrix& b);
double frobenius_norm(const DenseMatrix& a);
double max_abs_difference(const DenseMatrix& a, const DenseMatrix& b);

/// Ordered blocks, one matrix per factor of a product space. Used for
/// network weights (one block per layer) and for generic parameter points.
using BlockVector = std::vector<DenseMatrix>;

double block_inner(const BlockVector& a, const BlockVector& b);
bool same_shapes(const BlockVector& a, const BlockVector& b);
BlockVector zeros_like(const BlockVector& a);
/// a += s * b, blockwise.
void add_scaled(BlockVector& a, const BlockVector& b, double s);

}  // namespace dsgd

#endif  // DSGD_MATRIX_HPP
