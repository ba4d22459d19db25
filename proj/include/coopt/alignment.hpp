#pragma once

#include <cstdint>
#include <vector>

#include "coopt/types.hpp"

namespace coopt {

// Small platform-hosted dataset every participant sees.
struct SharedSet {
  std::vector<Sample> samples;
  std::uint64_t hash = 0;
};

// Best prior's targets on the shared set.
struct SharedTargets {
  std::size_t n = 0;
  Matrix values;  // |S| x n
};

struct TransformationMatrix {
  std::uint32_t participant_id = 0;
  std::size_t n = 0;
  Matrix values;  // n x n
  double ridge_lambda = 0.0;
  double residual = 0.0;  // unregularized Frobenius objective at the optimum
};

// Unique minimizer of ||T F^T - Ystar^T||_F^2 + lambda ||T||_F^2 via the
// normal equations, F being the participant's |S| x n projected shared
// features. lambda = 0 on a rank-deficient system is rejected.
TransformationMatrix fit_transformation(const Matrix& f,
                                        const SharedTargets& ystar,
                                        double ridge_lambda,
                                        std::uint32_t participant_id = 0);

// lambda = scale * trace(F F^T) / |S|; the relative default used when a
// config leaves ridge_lambda negative.
double default_ridge_lambda(const Matrix& f, double scale = 1e-6);

// Rows replaced by T * row; marks the set aligned.
TargetSet apply_transformation(const TransformationMatrix& t, TargetSet ts);

// Identity map with zero residual, for the alignment reference itself.
TransformationMatrix alignment_for_best(std::size_t n,
                                        std::uint32_t participant_id = 0);

}  // namespace coopt
