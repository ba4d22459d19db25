#pragma once

#include "coopt/types.hpp"

namespace coopt::kernels {

// out.row(i) = M * in.row(i), with M of shape (out_dim x in_dim).
// Accumulation order over the inner dimension is fixed, and parallelism is
// over rows only, so the parallel and serial variants are bit-identical and
// independent of thread count and of how rows are batched.
void map_rows(const Matrix& m, const Matrix& in, Matrix& out);
void map_rows_serial(const Matrix& m, const Matrix& in, Matrix& out);

Matrix map_rows(const Matrix& m, const Matrix& in);

void tanh_inplace(Matrix& m);

// log( mean over ordered pairs i != j of exp(sign * tau * ||f_i - f_j||^2) ).
// Per-row partial sums are each computed sequentially and then reduced in row
// order, so the result does not depend on thread count.
double pairwise_log_mean_exp(const Matrix& f, double tau, double sign);
double pairwise_log_mean_exp_serial(const Matrix& f, double tau, double sign);

// In-place l2 row normalization; zero rows are left as zero.
void normalize_rows(Matrix& f);

}  // namespace coopt::kernels
