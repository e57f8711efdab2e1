#include <cmath>

#include "core/error.hpp"
#include "core/matrix.hpp"
#include "core/rng.hpp"
#include "doctest.h"

using namespace ff;

namespace {

// Independent reference product: plain triple loop, no blocking.
Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("matmul identity") {
  const Matrix eye = Matrix::from_rows({{1, 0}, {0, 1}});
  const Matrix m = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix out = matmul(eye, m);
  CHECK(out(0, 0) == 1);
  CHECK(out(0, 1) == 2);
  CHECK(out(1, 0) == 3);
  CHECK(out(1, 1) == 4);
}

TEST_CASE("matmul 1x2 by 2x1") {
  const Matrix a = Matrix::from_rows({{1, 2}});
  const Matrix b = Matrix::from_rows({{3}, {4}});
  const Matrix out = matmul(a, b);
  CHECK(out.rows() == 1);
  CHECK(out.cols() == 1);
  CHECK(out(0, 0) == 11);
}

TEST_CASE("matmul matches the triple-loop oracle") {
  Rng rng(7);
  const Matrix a = random_matrix(7, 5, rng);
  const Matrix b = random_matrix(5, 3, rng);
  const Matrix got = matmul(a, b);
  const Matrix want = naive_matmul(a, b);
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("matmul rejects mismatched shapes with both named") {
  const Matrix a(2, 3), b(4, 2);
  try {
    matmul(a, b);
    FAIL("expected dimension error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::dimension_mismatch);
    CHECK(std::string(e.what()).find("2x3") != std::string::npos);
    CHECK(std::string(e.what()).find("4x2") != std::string::npos);
  }
}

TEST_CASE("matmul associativity on random conformable triples") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix a = random_matrix(4, 6, rng);
    const Matrix b = random_matrix(6, 3, rng);
    const Matrix c = random_matrix(3, 5, rng);
    const Matrix left = matmul(matmul(a, b), c);
    const Matrix right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < left.size(); ++i) {
      const double scale = std::max(1.0, std::fabs(left.data()[i]));
      CHECK(std::fabs(left.data()[i] - right.data()[i]) / scale < 1e-9);
    }
  }
}

TEST_CASE("transposed products match explicit transposes") {
  Rng rng(13);
  const Matrix a = random_matrix(6, 4, rng);
  const Matrix b = random_matrix(6, 3, rng);
  Matrix a_t(4, 6);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 4; ++j) a_t(j, i) = a(i, j);
  }
  const Matrix got = matmul_transpose_a(a, b);
  const Matrix want = naive_matmul(a_t, b);
  REQUIRE(got.rows() == 4);
  REQUIRE(got.cols() == 3);
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-12));
  }

  const Matrix c = random_matrix(5, 4, rng);
  Matrix c_t(4, 5);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 4; ++j) c_t(j, i) = c(i, j);
  }
  const Matrix got2 = matmul_transpose_b(a, c);
  const Matrix want2 = naive_matmul(a, c_t);
  for (std::size_t i = 0; i < got2.size(); ++i) {
    CHECK(got2.data()[i] == doctest::Approx(want2.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("sq_norm basics") {
  const std::vector<double> zero{0, 0, 0};
  CHECK(sq_norm(zero) == 0.0);
  const std::vector<double> v{3, 4};
  CHECK(sq_norm(v) == 25.0);
}

TEST_CASE("sq_norm equals dot with itself") {
  Rng rng(17);
  const std::vector<double> v = rng.normal_vec(64);
  CHECK(sq_norm(v) == doctest::Approx(dot(v, v)).epsilon(1e-14));
}

TEST_CASE("sq_norm scaling is exact") {
  Rng rng(19);
  const std::vector<double> v = rng.normal_vec(32);
  const double c = 1.75;
  std::vector<double> scaled = v;
  for (double& x : scaled) x *= c;
  CHECK(std::fabs(sq_norm(scaled) - c * c * sq_norm(v)) / sq_norm(scaled) < 1e-12);
}

TEST_CASE("rng streams are seed-deterministic") {
  Rng a(42), b(42);
  const std::vector<double> va = a.normal_vec(100);
  const std::vector<double> vb = b.normal_vec(100);
  CHECK(va == vb);

  Rng c(43);
  const std::vector<double> vc = c.normal_vec(100);
  CHECK(va != vc);
}

TEST_CASE("rng normal moments at 1e5 draws") {
  Rng rng(101);
  const std::size_t n = 100000;
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::fabs(mean) < 0.02);
  CHECK(std::fabs(var - 1.0) < 0.03);
}

TEST_CASE("rng uniform_int stays in range and covers values") {
  Rng rng(5);
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 10000; ++i) counts[rng.uniform_int(10)] += 1;
  for (int c : counts) CHECK(c > 800);
}

TEST_CASE("rng split streams differ from parent and each other") {
  Rng base(7);
  Rng a = base.split(1);
  Rng b = base.split(2);
  CHECK(a.normal_vec(8) != b.normal_vec(8));
  // Splitting is deterministic.
  Rng a2 = Rng(7).split(1);
  CHECK(Rng(7).split(1).normal_vec(8) == a2.normal_vec(8));
}

TEST_CASE("rng snapshot round-trips mid-stream") {
  Rng rng(99);
  rng.normal_vec(7);
  const Rng::Snapshot snap = rng.snapshot();
  Rng restored = Rng::from_snapshot(snap);
  CHECK(rng.normal_vec(16) == restored.normal_vec(16));
}

TEST_CASE("permutation is a permutation") {
  Rng rng(3);
  const std::vector<std::size_t> p = rng.permutation(50);
  std::vector<bool> seen(50, false);
  for (std::size_t idx : p) {
    CHECK(!seen[idx]);
    seen[idx] = true;
  }
}
