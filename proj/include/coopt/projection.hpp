#pragma once

#include <cstdint>

#include "coopt/types.hpp"

namespace coopt {

// Dense Gaussian dimension-alignment matrix, entries N(0, 1/n); preserves
// pairwise distances in the Johnson-Lindenstrauss sense.
struct ProjectionMatrix {
  std::size_t l = 0;  // input dimension
  std::size_t n = 0;  // output dimension
  std::uint64_t seed = 0;
  bool identity = false;
  Matrix values;  // n x l
};

ProjectionMatrix sample_projection(std::size_t l, std::size_t n,
                                   std::uint64_t seed, bool identity = false);

// Row-wise W * f; linear and independent per row.
Matrix project(const ProjectionMatrix& w, const Matrix& features);

}  // namespace coopt
