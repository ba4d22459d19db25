#include "coopt/rng.hpp"

#include <cmath>

namespace coopt {

double Rng::next_gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // Box-Muller on two fresh uniforms; u1 shifted away from 0 for the log.
  double u1 = next_double();
  double u2 = next_double();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 6.283185307179586476925286766559 * u2;
  cached_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

std::uint64_t derive_seed(std::uint64_t master, SeedRole role,
                          std::uint64_t index) {
  // One splitmix scramble keyed by (master, role, index).
  Rng r(master ^ (static_cast<std::uint64_t>(role) * 0x9e3779b97f4a7c15ULL) ^
        (index * 0xd1b54a32d192ed03ULL));
  return r.next_u64();
}

}  // namespace coopt
