#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coopt/kernels.hpp"
#include "coopt/rng.hpp"

using namespace coopt;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix m(rows, cols);
  Rng rng(seed);
  for (float& f : m.v) f = static_cast<float>(rng.next_gaussian());
  return m;
}

}  // namespace

TEST_CASE("parallel map_rows is bit-identical to the serial reference") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix w = random_matrix(17, 33, seed * 2 + 1);
    const Matrix x = random_matrix(101, 33, seed * 2 + 2);
    Matrix a, b;
    kernels::map_rows(w, x, a);
    kernels::map_rows_serial(w, x, b);
    CHECK(a == b);
  }
}

TEST_CASE("parallel pairwise reduction is bit-identical to serial") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Matrix f = random_matrix(63, 8, seed + 10);
    kernels::normalize_rows(f);
    CHECK(kernels::pairwise_log_mean_exp(f, 2.0, -1.0) ==
          kernels::pairwise_log_mean_exp_serial(f, 2.0, -1.0));
  }
}

TEST_CASE("map_rows result is independent of row batching") {
  const Matrix w = random_matrix(8, 12, 1);
  const Matrix x = random_matrix(40, 12, 2);
  Matrix whole;
  kernels::map_rows(w, x, whole);
  // Project each row alone; must match the batched result exactly.
  for (std::size_t i = 0; i < x.rows; ++i) {
    Matrix one(1, x.cols);
    for (std::size_t j = 0; j < x.cols; ++j) one.at(0, j) = x.at(i, j);
    Matrix out;
    kernels::map_rows(w, one, out);
    for (std::size_t j = 0; j < w.rows; ++j)
      CHECK(out.at(0, j) == whole.at(i, j));
  }
}

TEST_CASE("map_rows rejects inner dimension mismatch") {
  const Matrix w = random_matrix(4, 5, 1);
  const Matrix x = random_matrix(3, 6, 2);
  Matrix out;
  CHECK_THROWS_AS(kernels::map_rows(w, x, out), NumericError);
}

TEST_CASE("normalize_rows leaves zero rows and produces unit rows") {
  Matrix f(3, 4);
  f.at(0, 0) = 3.0f;
  f.at(0, 1) = 4.0f;
  // row 1 stays zero
  f.at(2, 2) = -2.0f;
  kernels::normalize_rows(f);
  CHECK(f.at(0, 0) == doctest::Approx(0.6));
  CHECK(f.at(0, 1) == doctest::Approx(0.8));
  for (std::size_t j = 0; j < 4; ++j) CHECK(f.at(1, j) == 0.0f);
  CHECK(f.at(2, 2) == doctest::Approx(-1.0));
}
