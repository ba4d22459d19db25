#include "coopt/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace coopt {

bool Matrix::all_finite() const {
  for (float x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace coopt

namespace coopt::kernels {

namespace {

inline void map_one_row(const Matrix& m, const Matrix& in, Matrix& out,
                        std::size_t i) {
  const float* src = in.row(i);
  float* dst = out.row(i);
  for (std::size_t o = 0; o < m.rows; ++o) {
    const float* w = m.row(o);
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) acc += double(w[j]) * double(src[j]);
    dst[o] = static_cast<float>(acc);
  }
}

inline double pair_partial(const Matrix& f, std::size_t i, double tau,
                           double sign) {
  const std::size_t d = f.cols;
  const float* fi = f.row(i);
  double acc = 0.0;
  for (std::size_t j = 0; j < f.rows; ++j) {
    if (j == i) continue;
    const float* fj = f.row(j);
    double d2 = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = double(fi[c]) - double(fj[c]);
      d2 += diff * diff;
    }
    acc += std::exp(sign * tau * d2);
  }
  return acc;
}

}  // namespace

void map_rows(const Matrix& m, const Matrix& in, Matrix& out) {
  if (in.cols != m.cols)
    throw NumericError("map_rows: inner dimension mismatch");
  out = Matrix(in.rows, m.rows);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(in.rows); ++i)
    map_one_row(m, in, out, static_cast<std::size_t>(i));
}

void map_rows_serial(const Matrix& m, const Matrix& in, Matrix& out) {
  if (in.cols != m.cols)
    throw NumericError("map_rows: inner dimension mismatch");
  out = Matrix(in.rows, m.rows);
  for (std::size_t i = 0; i < in.rows; ++i) map_one_row(m, in, out, i);
}

Matrix map_rows(const Matrix& m, const Matrix& in) {
  Matrix out;
  map_rows(m, in, out);
  return out;
}

void tanh_inplace(Matrix& m) {
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(m.v.size()); ++i)
    m.v[static_cast<std::size_t>(i)] =
        std::tanh(m.v[static_cast<std::size_t>(i)]);
}

double pairwise_log_mean_exp(const Matrix& f, double tau, double sign) {
  const std::size_t r = f.rows;
  std::vector<double> partial(r, 0.0);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(r); ++i)
    partial[static_cast<std::size_t>(i)] =
        pair_partial(f, static_cast<std::size_t>(i), tau, sign);
  double total = 0.0;
  for (std::size_t i = 0; i < r; ++i) total += partial[i];
  return std::log(total / (double(r) * double(r - 1)));
}

double pairwise_log_mean_exp_serial(const Matrix& f, double tau, double sign) {
  const std::size_t r = f.rows;
  double total = 0.0;
  for (std::size_t i = 0; i < r; ++i) total += pair_partial(f, i, tau, sign);
  return std::log(total / (double(r) * double(r - 1)));
}

void normalize_rows(Matrix& f) {
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(f.rows); ++i) {
    float* row = f.row(static_cast<std::size_t>(i));
    double norm2 = 0.0;
    for (std::size_t c = 0; c < f.cols; ++c)
      norm2 += double(row[c]) * double(row[c]);
    if (norm2 == 0.0) continue;
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t c = 0; c < f.cols; ++c)
      row[c] = static_cast<float>(double(row[c]) * inv);
  }
}

}  // namespace coopt::kernels
