#pragma once

#include <cstdint>

namespace coopt {

// SplitMix64 generator. Chosen over std::mt19937 + std::normal_distribution
// because the distribution adaptors are implementation-defined; every value
// produced here is bit-reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound) { return next_u64() % bound; }

  // Standard normal via Box-Muller; generates pairs and caches one.
  double next_gaussian();

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// Seed roles. All per-component seeds are derived from the master seed with a
// fixed (role, index) offset so that changing one knob never perturbs another
// component's random stream.
enum class SeedRole : std::uint64_t {
  partition = 1,
  shared_set = 2,
  prior = 3,
  projection = 4,
  training = 5,
  probe = 6,
  upgrade = 7,
  pair_sampling = 8,
  benchmark = 9,
  schedule = 10,
};

std::uint64_t derive_seed(std::uint64_t master, SeedRole role,
                          std::uint64_t index = 0);

}  // namespace coopt
