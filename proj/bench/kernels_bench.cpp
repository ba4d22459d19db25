// Compares the OpenMP kernels against the serial reference implementations
// and verifies that both produce bit-identical results.

#include <chrono>
#include <cstdio>

#include "coopt/kernels.hpp"
#include "coopt/rng.hpp"

using namespace coopt;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix m(rows, cols);
  Rng rng(seed);
  for (float& f : m.v) f = static_cast<float>(rng.next_gaussian());
  return m;
}

template <typename F>
double time_best_of(F&& fn, int reps = 5) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    best = std::min(best, secs);
  }
  return best;
}

}  // namespace

int main() {
  {
    const Matrix w = random_matrix(128, 512, 1);
    const Matrix x = random_matrix(4096, 512, 2);
    Matrix out_par, out_ser;
    const double tp = time_best_of([&] { kernels::map_rows(w, x, out_par); });
    const double ts =
        time_best_of([&] { kernels::map_rows_serial(w, x, out_ser); });
    const bool same = out_par == out_ser;
    std::printf("map_rows 4096x512 -> 128 : omp %.4fs  serial %.4fs  "
                "speedup %.2fx  bit-identical %s\n",
                tp, ts, ts / tp, same ? "yes" : "NO");
    if (!same) return 1;
  }
  {
    Matrix f = random_matrix(2048, 64, 3);
    kernels::normalize_rows(f);
    double vp = 0, vs = 0;
    const double tp = time_best_of(
        [&] { vp = kernels::pairwise_log_mean_exp(f, 2.0, -1.0); });
    const double ts = time_best_of(
        [&] { vs = kernels::pairwise_log_mean_exp_serial(f, 2.0, -1.0); });
    const bool same = vp == vs;
    std::printf("pairwise 2048x64         : omp %.4fs  serial %.4fs  "
                "speedup %.2fx  bit-identical %s\n",
                tp, ts, ts / tp, same ? "yes" : "NO");
    if (!same) return 1;
  }
  return 0;
}
