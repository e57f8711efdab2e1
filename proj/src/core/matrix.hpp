#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace ff {

// Dense row-major matrix of doubles. Sized for dense fully-connected layers;
// no sparse storage, no views into foreign memory.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }
  std::span<double> row_span(std::size_t r) { return {row(r), cols_}; }
  std::span<const double> row_span(std::size_t r) const { return {row(r), cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void fill(double value);
  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// c = a * b. Shapes must conform; entries of the result are checked finite.
Matrix matmul(const Matrix& a, const Matrix& b);

// c = a^T * b where a is (k x m) and b is (k x n); used for batched weight
// gradients X^T * dA without materializing the transpose.
Matrix matmul_transpose_a(const Matrix& a, const Matrix& b);

// c = a * b^T where a is (m x k) and b is (n x k).
Matrix matmul_transpose_b(const Matrix& a, const Matrix& b);

double sq_norm(std::span<const double> v);
double l1_norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace ff
