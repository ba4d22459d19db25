#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "coopt/alignment.hpp"
#include "coopt/kernels.hpp"
#include "coopt/rng.hpp"

using namespace coopt;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                     double scale = 1.0) {
  Matrix m(rows, cols);
  Rng rng(seed);
  for (float& f : m.v) f = static_cast<float>(rng.next_gaussian() * scale);
  return m;
}

double frob(const Matrix& m) {
  double s = 0.0;
  for (float x : m.v) s += double(x) * double(x);
  return std::sqrt(s);
}

double rel_frob_diff(const Matrix& a, const Matrix& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    const double d = double(a.v[i]) - double(b.v[i]);
    num += d * d;
    den += double(b.v[i]) * double(b.v[i]);
  }
  return std::sqrt(num / den);
}

SharedTargets as_targets(Matrix values) {
  SharedTargets y;
  y.n = values.cols;
  y.values = std::move(values);
  return y;
}

}  // namespace

TEST_CASE("Ystar == F with full rank recovers the identity") {
  const Matrix f = random_matrix(40, 6, 1);
  const auto t = fit_transformation(f, as_targets(f), 0.0);
  CHECK(rel_frob_diff(t.values, Matrix::identity(6)) < 1e-8);
  CHECK(t.residual < 1e-8);
}

TEST_CASE("exact linear relation is recovered within 1e-6") {
  const std::size_t n = 8, s = 32;  // |S| >= 2n
  const Matrix f = random_matrix(s, n, 2);
  const Matrix a = random_matrix(n, n, 3);
  const Matrix y = kernels::map_rows(a, f);  // rows y_i = A f_i
  const auto t = fit_transformation(f, as_targets(y), 1e-10);
  CHECK(rel_frob_diff(t.values, a) < 1e-6);
}

TEST_CASE("rank-deficient system needs a positive lambda") {
  // Fewer rows than columns: F^T F is singular.
  const Matrix f = random_matrix(4, 8, 4);
  const Matrix y = random_matrix(4, 8, 5);
  CHECK_THROWS_WITH_AS(fit_transformation(f, as_targets(y), 0.0),
                       doctest::Contains("ridge_lambda"), NumericError);
  const auto t = fit_transformation(f, as_targets(y), 1e-6);
  CHECK(t.values.all_finite());
}

TEST_CASE("gradient of the ridge objective vanishes at the solution") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const std::size_t n = 6, s = 25;
    const Matrix f = random_matrix(s, n, 100 + seed);
    const Matrix y = random_matrix(s, n, 200 + seed);
    const double lambda = 1e-3;
    const auto t = fit_transformation(f, as_targets(y), lambda);
    // grad = (T F^T - Y^T) F + lambda T, computed densely in double.
    double grad_frob = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double g = lambda * double(t.values.at(i, j));
        for (std::size_t r = 0; r < s; ++r) {
          double pred = 0.0;
          for (std::size_t c = 0; c < n; ++c)
            pred += double(t.values.at(i, c)) * double(f.at(r, c));
          g += (pred - double(y.at(r, i))) * double(f.at(r, j));
        }
        grad_frob += g * g;
      }
    CHECK(std::sqrt(grad_frob) <= 1e-6 * (1.0 + frob(y)));
  }
}

TEST_CASE("unregularized residual is non-decreasing in lambda") {
  const Matrix f = random_matrix(30, 5, 6);
  const Matrix y = random_matrix(30, 5, 7);
  double prev = -1.0;
  for (double lambda : {0.0, 1e-4, 1e-2, 1.0, 100.0}) {
    const auto t = fit_transformation(f, as_targets(y), lambda);
    CHECK(t.residual >= prev);
    prev = t.residual;
  }
}

TEST_CASE("apply_transformation with identity is a bitwise no-op") {
  const auto t = alignment_for_best(5, 3);
  CHECK(t.residual == 0.0);
  CHECK(t.values == Matrix::identity(5));
  TargetSet ts;
  ts.shard_id = 1;
  ts.n = 5;
  ts.targets = random_matrix(12, 5, 8);
  const Matrix before = ts.targets;
  const TargetSet out = apply_transformation(t, ts);
  CHECK(out.aligned);
  CHECK(out.targets == before);
}

TEST_CASE("zero target rows map to zero and shapes are enforced") {
  const Matrix f = random_matrix(20, 4, 9);
  const auto t = fit_transformation(f, as_targets(f), 1e-8);
  TargetSet ts;
  ts.shard_id = 0;
  ts.n = 4;
  ts.targets = Matrix(2, 4);  // zero rows
  const TargetSet out = apply_transformation(t, ts);
  for (float v : out.targets.v) CHECK(v == 0.0f);

  TargetSet bad;
  bad.n = 3;
  bad.targets = Matrix(2, 3);
  CHECK_THROWS_AS(apply_transformation(t, bad), NumericError);
  SharedTargets wrong_rows = as_targets(random_matrix(19, 4, 10));
  CHECK_THROWS_AS(fit_transformation(f, wrong_rows, 0.0), NumericError);
}

TEST_CASE("fitted map generalizes to held-out shared samples") {
  // 80/20 split of an exactly-linear relation.
  const std::size_t n = 6, total = 60, train = 48;
  const Matrix all = random_matrix(total, n, 11);
  const Matrix a = random_matrix(n, n, 12);
  const Matrix y_all = kernels::map_rows(a, all);

  Matrix f(train, n), y(train, n), f_hold(total - train, n),
      y_hold(total - train, n);
  std::copy(all.v.begin(), all.v.begin() + train * n, f.v.begin());
  std::copy(y_all.v.begin(), y_all.v.begin() + train * n, y.v.begin());
  std::copy(all.v.begin() + train * n, all.v.end(), f_hold.v.begin());
  std::copy(y_all.v.begin() + train * n, y_all.v.end(), y_hold.v.begin());

  const auto t = fit_transformation(f, as_targets(y), 1e-10);
  const Matrix pred = kernels::map_rows(t.values, f_hold);
  CHECK(rel_frob_diff(pred, y_hold) < 1e-5);
}

TEST_CASE("default ridge lambda scales with the feature Gram diagonal") {
  Matrix f = random_matrix(10, 4, 13);
  const double base = default_ridge_lambda(f);
  CHECK(base > 0.0);
  for (float& x : f.v) x *= 2.0f;
  CHECK(default_ridge_lambda(f) == doctest::Approx(4.0 * base).epsilon(1e-6));
}
