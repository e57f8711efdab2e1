#include "core/matrix.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "core/error.hpp"

namespace ff {
namespace {

void check_mul_shapes(std::size_t a_rows, std::size_t a_cols, std::size_t b_rows,
                      std::size_t b_cols, const char* op) {
  if (a_cols != b_rows) {
    raise(Errc::dimension_mismatch,
          std::string(op) + ": cannot multiply " + std::to_string(a_rows) + "x" +
              std::to_string(a_cols) + " by " + std::to_string(b_rows) + "x" +
              std::to_string(b_cols));
  }
}

void check_finite(const Matrix& m, const char* op) {
  if (!m.all_finite()) {
    raise(Errc::numeric_failure, std::string(op) + ": non-finite entry in result");
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
  std::size_t r = 0;
  for (const auto& row : rows) {
    if (row.size() != m.cols_) {
      raise(Errc::dimension_mismatch, "from_rows: ragged initializer");
    }
    std::size_t c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

void Matrix::fill(double value) {
  for (auto& v : data_) v = value;
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace {

// Four output rows at a time: every streamed row of b feeds four
// fused-multiply-adds, which keeps the kernel compute bound. Each output row
// is still accumulated in a fixed sequential k order, so thread count cannot
// change the result.
inline void accumulate_block4(double* c0, double* c1, double* c2, double* c3,
                              const double* b, std::size_t n, double a0, double a1,
                              double a2, double a3) {
  for (std::size_t j = 0; j < n; ++j) {
    const double bv = b[j];
    c0[j] += a0 * bv;
    c1[j] += a1 * bv;
    c2[j] += a2 * bv;
    c3[j] += a3 * bv;
  }
}

// stride picks the element (kk, i) of the left operand: `cols` for a plain
// row-major walk down column i, 1 when iterating a row.
template <typename GetA>
void blocked_product(Matrix& c, const GetA& a_at, const Matrix& b, std::size_t m,
                     std::size_t k) {
  const std::size_t n = b.cols();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t block = 0; block < static_cast<std::ptrdiff_t>((m + 3) / 4);
       ++block) {
    const std::size_t i0 = static_cast<std::size_t>(block) * 4;
    const std::size_t rows = std::min<std::size_t>(4, m - i0);
    if (rows == 4) {
      double* c0 = c.row(i0);
      double* c1 = c.row(i0 + 1);
      double* c2 = c.row(i0 + 2);
      double* c3 = c.row(i0 + 3);
      for (std::size_t kk = 0; kk < k; ++kk) {
        accumulate_block4(c0, c1, c2, c3, b.row(kk), n, a_at(i0, kk), a_at(i0 + 1, kk),
                          a_at(i0 + 2, kk), a_at(i0 + 3, kk));
      }
    } else {
      for (std::size_t r = 0; r < rows; ++r) {
        double* crow = c.row(i0 + r);
        for (std::size_t kk = 0; kk < k; ++kk) {
          const double av = a_at(i0 + r, kk);
          const double* brow = b.row(kk);
          for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
      }
    }
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_mul_shapes(a.rows(), a.cols(), b.rows(), b.cols(), "matmul");
  Matrix c(a.rows(), b.cols());
  blocked_product(c, [&](std::size_t i, std::size_t kk) { return a(i, kk); }, b,
                  a.rows(), a.cols());
  check_finite(c, "matmul");
  return c;
}

Matrix matmul_transpose_a(const Matrix& a, const Matrix& b) {
  check_mul_shapes(a.cols(), a.rows(), b.rows(), b.cols(), "matmul_transpose_a");
  Matrix c(a.cols(), b.cols());
  blocked_product(c, [&](std::size_t i, std::size_t kk) { return a(kk, i); }, b,
                  a.cols(), a.rows());
  check_finite(c, "matmul_transpose_a");
  return c;
}

Matrix matmul_transpose_b(const Matrix& a, const Matrix& b) {
  check_mul_shapes(a.rows(), a.cols(), b.cols(), b.rows(), "matmul_transpose_b");
  Matrix c(a.rows(), b.rows());
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    const double* arow = a.row(static_cast<std::size_t>(i));
    double* crow = c.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.row(j);
      double acc = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      crow[j] = acc;
    }
  }
  check_finite(c, "matmul_transpose_b");
  return c;
}

double sq_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

double l1_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += std::fabs(x);
  return acc;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    raise(Errc::dimension_mismatch, "dot: length " + std::to_string(a.size()) +
                                        " vs " + std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace ff
