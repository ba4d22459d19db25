#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "coopt/types.hpp"

namespace coopt {

struct UniformValueReport {
  std::uint32_t participant_id = 0;
  double value = 0.0;
  double tau = 2.0;
  std::uint64_t shared_set_hash = 0;
};

std::string report_to_json(const UniformValueReport& r);
UniformValueReport report_from_json(const std::string& json);

// log mean over ordered pairs i != j of exp(sign * tau * ||f_i - f_j||^2).
// With the default negative sign the value is <= 0, with equality iff all
// (normalized) rows coincide; lower means a more uniform feature spread.
// The printed formula carries a positive exponent, which inverts the
// "lower is better" ranking rule; sign=+1 reproduces it literally.
double uniform_value(const Matrix& features, double tau, bool normalize = true,
                     double sign = -1.0);

// Same estimand over a seeded uniform sample of ordered pairs; falls back to
// the exact computation when max_pairs covers every pair.
double uniform_value_subsampled(const Matrix& features, double tau,
                                std::size_t max_pairs, std::uint64_t seed,
                                bool normalize = true, double sign = -1.0);

// Argmin of value, ties broken by smallest participant id. All reports must
// share the same shared-set hash and tau.
std::uint32_t select_best_prior(std::span<const UniformValueReport> reports);

}  // namespace coopt
