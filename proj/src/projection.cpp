#include "coopt/projection.hpp"

#include <cmath>

#include "coopt/kernels.hpp"
#include "coopt/rng.hpp"

namespace coopt {

ProjectionMatrix sample_projection(std::size_t l, std::size_t n,
                                   std::uint64_t seed, bool identity) {
  if (l < 1 || n < 1)
    throw NumericError("sample_projection: dimensions must be >= 1");
  ProjectionMatrix w;
  w.l = l;
  w.n = n;
  w.seed = seed;
  w.identity = identity;
  if (identity) {
    if (l != n)
      throw NumericError("identity projection requires l == n");
    w.values = Matrix::identity(n);
    return w;
  }
  Rng rng(derive_seed(seed, SeedRole::projection));
  w.values = Matrix(n, l);
  const double scale = 1.0 / std::sqrt(double(n));
  for (float& f : w.values.v)
    f = static_cast<float>(rng.next_gaussian() * scale);
  return w;
}

Matrix project(const ProjectionMatrix& w, const Matrix& features) {
  if (features.cols != w.l)
    throw NumericError("project: feature dimension " +
                       std::to_string(features.cols) + " != l " +
                       std::to_string(w.l));
  return kernels::map_rows(w.values, features);
}

}  // namespace coopt
