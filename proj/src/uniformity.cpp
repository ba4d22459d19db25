#include "coopt/uniformity.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "coopt/kernels.hpp"
#include "coopt/rng.hpp"

namespace coopt {

namespace {

Matrix prepare(const Matrix& features, bool normalize) {
  if (features.rows < 2)
    throw NumericError("uniform_value: need at least 2 rows");
  if (!features.all_finite())
    throw NumericError("uniform_value: non-finite input");
  Matrix f = features;
  if (normalize) kernels::normalize_rows(f);
  return f;
}

}  // namespace

double uniform_value(const Matrix& features, double tau, bool normalize,
                     double sign) {
  if (tau <= 0.0) throw NumericError("uniform_value: tau must be > 0");
  Matrix f = prepare(features, normalize);
  return kernels::pairwise_log_mean_exp(f, tau, sign);
}

double uniform_value_subsampled(const Matrix& features, double tau,
                                std::size_t max_pairs, std::uint64_t seed,
                                bool normalize, double sign) {
  if (tau <= 0.0) throw NumericError("uniform_value: tau must be > 0");
  if (max_pairs < 1)
    throw NumericError("uniform_value_subsampled: max_pairs must be >= 1");
  Matrix f = prepare(features, normalize);
  const std::size_t r = f.rows;
  const std::size_t all_pairs = r * (r - 1);
  if (max_pairs >= all_pairs)
    return kernels::pairwise_log_mean_exp(f, tau, sign);

  Rng rng(derive_seed(seed, SeedRole::pair_sampling));
  double total = 0.0;
  for (std::size_t p = 0; p < max_pairs; ++p) {
    const std::size_t i = rng.next_below(r);
    std::size_t j = rng.next_below(r - 1);
    if (j >= i) ++j;
    const float* fi = f.row(i);
    const float* fj = f.row(j);
    double d2 = 0.0;
    for (std::size_t c = 0; c < f.cols; ++c) {
      const double diff = double(fi[c]) - double(fj[c]);
      d2 += diff * diff;
    }
    total += std::exp(sign * tau * d2);
  }
  return std::log(total / double(max_pairs));
}

std::uint32_t select_best_prior(std::span<const UniformValueReport> reports) {
  if (reports.empty())
    throw ProtocolError("select_best_prior: no reports");
  const UniformValueReport* best = &reports[0];
  for (const auto& r : reports) {
    if (r.shared_set_hash != reports[0].shared_set_hash)
      throw ProtocolError("select_best_prior: inconsistent shared-set hashes");
    if (r.tau != reports[0].tau)
      throw ProtocolError("select_best_prior: inconsistent tau");
    if (r.value < best->value ||
        (r.value == best->value && r.participant_id < best->participant_id))
      best = &r;
  }
  return best->participant_id;
}

std::string report_to_json(const UniformValueReport& r) {
  nlohmann::json j{{"participant_id", r.participant_id},
                   {"value", r.value},
                   {"tau", r.tau},
                   {"shared_set_hash", r.shared_set_hash}};
  return j.dump();
}

UniformValueReport report_from_json(const std::string& json) {
  const auto j = nlohmann::json::parse(json);
  UniformValueReport r;
  r.participant_id = j.at("participant_id").get<std::uint32_t>();
  r.value = j.at("value").get<double>();
  r.tau = j.at("tau").get<double>();
  r.shared_set_hash = j.at("shared_set_hash").get<std::uint64_t>();
  return r;
}

}  // namespace coopt
