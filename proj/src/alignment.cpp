#include "coopt/alignment.hpp"

#include <Eigen/Dense>

#include "coopt/kernels.hpp"

namespace coopt {

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) out(i, j) = m.at(i, j);
  return out;
}

}  // namespace

double default_ridge_lambda(const Matrix& f, double scale) {
  if (f.rows == 0) return scale;
  double trace = 0.0;
  for (float x : f.v) trace += double(x) * double(x);
  return scale * trace / double(f.rows);
}

TransformationMatrix fit_transformation(const Matrix& f,
                                        const SharedTargets& ystar,
                                        double ridge_lambda,
                                        std::uint32_t participant_id) {
  const std::size_t n = f.cols;
  if (ystar.values.rows != f.rows)
    throw NumericError("fit_transformation: row count mismatch (" +
                       std::to_string(f.rows) + " vs " +
                       std::to_string(ystar.values.rows) + ")");
  if (ystar.values.cols != ystar.n || ystar.n != n)
    throw NumericError("fit_transformation: target dimension mismatch");
  if (ridge_lambda < 0.0)
    throw NumericError("fit_transformation: ridge_lambda must be >= 0");

  const Eigen::MatrixXd fe = to_eigen(f);          // |S| x n
  const Eigen::MatrixXd ye = to_eigen(ystar.values);
  Eigen::MatrixXd gram = fe.transpose() * fe;      // n x n
  if (ridge_lambda == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    if (!lu.isInvertible())
      throw NumericError(
          "fit_transformation: F^T F is rank-deficient and ridge_lambda is 0; "
          "set a positive ridge_lambda");
  }
  gram.diagonal().array() += ridge_lambda;

  // T (F^T F + lambda I) = Ystar^T F  =>  solve for T row block.
  const Eigen::MatrixXd rhs = ye.transpose() * fe;  // n x n
  const Eigen::MatrixXd t =
      gram.ldlt().solve(rhs.transpose()).transpose();

  TransformationMatrix out;
  out.participant_id = participant_id;
  out.n = n;
  out.ridge_lambda = ridge_lambda;
  out.values = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out.values.at(i, j) = static_cast<float>(t(i, j));
  out.residual = (t * fe.transpose() - ye.transpose()).squaredNorm();
  return out;
}

TargetSet apply_transformation(const TransformationMatrix& t, TargetSet ts) {
  if (ts.n != t.n || ts.targets.cols != t.n)
    throw NumericError("apply_transformation: dimension mismatch");
  ts.targets = kernels::map_rows(t.values, ts.targets);
  ts.aligned = true;
  return ts;
}

TransformationMatrix alignment_for_best(std::size_t n,
                                        std::uint32_t participant_id) {
  if (n < 1) throw NumericError("alignment_for_best: n must be >= 1");
  TransformationMatrix t;
  t.participant_id = participant_id;
  t.n = n;
  t.values = Matrix::identity(n);
  t.ridge_lambda = 0.0;
  t.residual = 0.0;
  return t;
}

}  // namespace coopt
