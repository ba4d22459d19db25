// End-to-end acceptance suite. Each numbered check prints exactly one
// PASS/FAIL line; the process exits nonzero if any check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "coopt/alignment.hpp"
#include "coopt/downstream.hpp"
#include "coopt/io.hpp"
#include "coopt/kernels.hpp"
#include "coopt/priors.hpp"
#include "coopt/projection.hpp"
#include "coopt/protocol.hpp"
#include "coopt/rng.hpp"
#include "coopt/uniformity.hpp"

using namespace coopt;

namespace {

int g_failures = 0;

void report(int idx, const char* name, bool ok, double seconds) {
  std::printf("[%s] %2d %-38s (%.1fs)\n", ok ? "PASS" : "FAIL", idx, name,
              seconds);
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

template <typename Fn>
void run_check(int idx, const char* name, Fn fn) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    ok = fn();
  } catch (const std::exception& e) {
    std::printf("        exception: %s\n", e.what());
    ok = false;
  }
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  report(idx, name, ok, dt);
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix m(rows, cols);
  Rng rng(seed);
  for (float& f : m.v) f = static_cast<float>(rng.next_gaussian());
  return m;
}

ExperimentConfig homogeneous_config(std::uint32_t k, std::size_t m,
                                    std::uint64_t master_seed) {
  ExperimentConfig cfg;
  cfg.run_id = "acceptance";
  cfg.master_seed = master_seed;
  cfg.participants = k;
  PriorModelSpec spec;
  spec.kind = PriorKind::mlp;
  spec.seed = 7;
  spec.in_dim = m;
  spec.out_dim = 32;
  cfg.roster.assign(k, spec);
  cfg.probe_each_round = false;
  return cfg;
}

ExperimentConfig heterogeneous_config(std::size_t m,
                                      std::uint64_t master_seed) {
  ExperimentConfig cfg;
  cfg.run_id = "acceptance";
  cfg.master_seed = master_seed;
  cfg.participants = 4;
  const double qualities[] = {1.0, 0.7, 0.45, 0.2};
  const std::size_t dims[] = {16, 24, 16, 12};
  for (std::uint32_t p = 0; p < 4; ++p) {
    PriorModelSpec spec;
    spec.kind = PriorKind::weak_mlp;
    spec.seed = 30 + p + master_seed;
    spec.in_dim = m;
    spec.out_dim = dims[p];
    spec.quality = qualities[p];
    cfg.roster.push_back(spec);
  }
  cfg.probe_each_round = false;
  return cfg;
}

double probe_accuracy(ExperimentConfig cfg, const Dataset& train,
                      const EvalSet& eval) {
  cfg.probe_each_round = true;
  const RoundResult rr = run_round(cfg, train, {}, &eval);
  return rr.metrics.probe_accuracy.value_or(0.0);
}

// --- 1: merged targets do not depend on the participant count -------------

bool check_merge_equivalence() {
  auto [train, eval] = make_synthetic_benchmark(5, 2000, 20, 1);
  std::optional<Matrix> first;
  for (std::uint32_t k : {1u, 2u, 4u, 8u}) {
    const RoundResult rr = run_round(homogeneous_config(k, 20, 11), train);
    if (!first)
      first = rr.data.targets;
    else if (!(rr.data.targets == *first))
      return false;
  }
  return true;
}

// --- 2: merged digest does not depend on the schedule ---------------------

bool check_schedule_independence() {
  auto [train, eval] = make_synthetic_benchmark(5, 1000, 20, 2);
  const ExperimentConfig cfg = heterogeneous_config(20, 21);
  const RoundResult base = run_round(cfg, train);
  std::vector<std::uint32_t> schedule{0, 1, 2, 3};
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    for (std::size_t i = schedule.size() - 1; i > 0; --i)
      std::swap(schedule[i], schedule[rng.next_below(i + 1)]);
    const RoundResult rr = run_round(cfg, train, schedule);
    if (rr.metrics.merged_digest != base.metrics.merged_digest) return false;
  }
  return true;
}

// --- 3: uniform value closed-form cases and subsampling -------------------

bool check_uniform_value() {
  Matrix same(6, 4);
  for (std::size_t i = 0; i < 6; ++i) same.at(i, 2) = 3.0f;
  if (uniform_value(same, 2.0) != 0.0) return false;

  Matrix pair(2, 3);
  pair.at(0, 0) = 1.0f;
  pair.at(1, 0) = -1.0f;
  if (std::abs(uniform_value(pair, 2.0) - (-8.0)) > 1e-9) return false;

  const Matrix big = random_matrix(512, 16, 3);
  const double exact = uniform_value(big, 2.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double est = uniform_value_subsampled(big, 2.0, 100000, seed);
    if (std::abs(est - exact) > 0.05) return false;
  }
  return true;
}

// --- 4: uniform value ranks priors the way probe accuracy does ------------

bool check_uniformity_quality_correlation() {
  PriorModelSpec base;
  base.kind = PriorKind::weak_mlp;
  base.seed = 500;
  base.in_dim = 20;
  base.out_dim = 16;
  std::vector<double> levels;
  for (int i = 1; i <= 10; ++i) levels.push_back(0.1 * i);
  const auto roster = grade_roster(base, levels);

  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto [train, eval] =
        make_synthetic_benchmark(8, 600, 20, 40 + seed, 1.0, 600);
    std::vector<double> values, accuracies;
    for (const auto& spec : roster) {
      const auto model = PriorModel::build(spec);
      const Matrix feats = model.extract(eval.samples);
      values.push_back(uniform_value(feats, 2.0));
      accuracies.push_back(
          linear_probe_features(feats, eval, 70 + seed).accuracy);
    }
    const double rho = spearman(values, accuracies);
    std::printf("        correlation seed %llu: rho = %.4f\n",
                (unsigned long long)seed, rho);
    if (!(rho <= -0.8)) return false;
  }
  return true;
}

// --- 5: aligning to the best prior beats not aligning ---------------------

bool check_alignment_necessity() {
  double gap_sum = 0.0;
  int ordered = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto [train, eval] =
        make_synthetic_benchmark(8, 1200, 20, 60 + seed, 0.9, 800);
    ExperimentConfig cfg = heterogeneous_config(20, 31 + seed);
    std::map<AlignmentStrategy, double> acc;
    for (auto s : {AlignmentStrategy::best, AlignmentStrategy::median,
                   AlignmentStrategy::worst, AlignmentStrategy::none}) {
      cfg.alignment_strategy = s;
      acc[s] = probe_accuracy(cfg, train, eval);
    }
    const double gap = acc[AlignmentStrategy::best] - acc[AlignmentStrategy::none];
    std::printf(
        "        seed %llu: best=%.3f median=%.3f worst=%.3f none=%.3f\n",
        (unsigned long long)seed, acc[AlignmentStrategy::best],
        acc[AlignmentStrategy::median], acc[AlignmentStrategy::worst],
        acc[AlignmentStrategy::none]);
    gap_sum += gap;
    if (acc[AlignmentStrategy::best] >= acc[AlignmentStrategy::median] &&
        acc[AlignmentStrategy::median] >= acc[AlignmentStrategy::worst])
      ++ordered;
  }
  return gap_sum / 3.0 >= 0.05 && ordered >= 2;
}

// --- 6: least-squares alignment solve is exact ----------------------------

bool check_least_squares_recovery() {
  // Exact linear relation.
  {
    const Matrix f = random_matrix(64, 12, 80);
    const Matrix a = random_matrix(12, 12, 81);
    SharedTargets ystar;
    ystar.n = 12;
    ystar.values = kernels::map_rows(a, f);
    const auto t = fit_transformation(f, ystar, 1e-10);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < t.values.v.size(); ++i) {
      const double d = double(t.values.v[i]) - double(a.v[i]);
      num += d * d;
      den += double(a.v[i]) * double(a.v[i]);
    }
    if (std::sqrt(num / den) > 1e-6) return false;
  }
  // Optimality gradient certificate on random fixtures.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const std::size_t n = 8, s = 40;
    const Matrix f = random_matrix(s, n, 90 + seed);
    SharedTargets ystar;
    ystar.n = n;
    ystar.values = random_matrix(s, n, 190 + seed);
    const double lambda = 1e-4;
    const auto t = fit_transformation(f, ystar, lambda);
    double grad_frob = 0.0, y_frob = 0.0;
    for (float v : ystar.values.v) y_frob += double(v) * double(v);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double g = lambda * double(t.values.at(i, j));
        for (std::size_t r = 0; r < s; ++r) {
          double pred = 0.0;
          for (std::size_t c = 0; c < n; ++c)
            pred += double(t.values.at(i, c)) * double(f.at(r, c));
          g += (pred - double(ystar.values.at(r, i))) * double(f.at(r, j));
        }
        grad_frob += g * g;
      }
    if (std::sqrt(grad_frob) > 1e-6 * (1.0 + std::sqrt(y_frob))) return false;
  }
  return true;
}

// --- 7: random projections preserve pairwise distances --------------------

bool check_jl_distortion() {
  const std::size_t count = 200, l = 512, n = 64;
  std::size_t ok = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix points = random_matrix(count, l, 3000 + seed);
    const auto w = sample_projection(l, n, seed);
    const Matrix proj = project(w, points);
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = i + 1; j < count; ++j) {
        double orig = 0.0, mapped = 0.0;
        for (std::size_t c = 0; c < l; ++c) {
          const double d = double(points.at(i, c)) - double(points.at(j, c));
          orig += d * d;
        }
        for (std::size_t c = 0; c < n; ++c) {
          const double d = double(proj.at(i, c)) - double(proj.at(j, c));
          mapped += d * d;
        }
        ++total;
        if (mapped >= 0.5 * orig && mapped <= 1.5 * orig) ++ok;
      }
  }
  const double fraction = double(ok) / double(total);
  std::printf("        distance-preserving pairs: %.4f\n", fraction);
  return fraction >= 0.99;
}

// --- 8: growing the shared set has diminishing returns --------------------

bool check_shared_size_returns() {
  const double fractions[] = {0.01, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8};
  double gain_small = 0.0, gain_large = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto [train, eval] = make_synthetic_benchmark(5, 1000, 20, 100 + seed);
    ExperimentConfig cfg = heterogeneous_config(20, 71 + seed);
    std::map<double, double> acc;
    for (double f : fractions) {
      cfg.shared_fraction = f;
      acc[f] = probe_accuracy(cfg, train, eval);
    }
    std::printf("        seed %llu:", (unsigned long long)seed);
    for (double f : fractions) std::printf(" %.2f:%.3f", f, acc[f]);
    std::printf("\n");
    gain_small += acc[0.05] - acc[0.01];
    gain_large += acc[0.8] - acc[0.1];
  }
  return gain_large / 3.0 < gain_small / 3.0;
}

// --- 9: continuous rounds monotonically refine retained targets -----------

bool check_continuous_optimization() {
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto [train, eval] =
        make_synthetic_benchmark(8, 1000, 20, 200 + seed, 0.9, 800);
    ExperimentConfig cfg;
    cfg.run_id = "acceptance";
    cfg.master_seed = 81 + seed;
    cfg.participants = 10;
    for (std::uint32_t p = 0; p < 10; ++p) {
      PriorModelSpec spec;
      spec.kind = PriorKind::weak_mlp;
      spec.seed = 700 + p + seed * 100;
      spec.in_dim = 20;
      spec.out_dim = 16;
      spec.quality = 0.15 + 0.02 * p;
      cfg.roster.push_back(spec);
    }
    cfg.continuous.rounds = 10;
    cfg.continuous.upgrade_fraction = 0.2;
    const ContinuousResult cr = run_continuous(cfg, train, &eval);
    for (std::uint32_t p = 0; p < 10; ++p)
      for (std::size_t r = 1; r < cr.per_round.size(); ++r)
        if (cr.per_round[r].uniform_values[p].second >
            cr.per_round[r - 1].uniform_values[p].second)
          return false;
    const double first = cr.per_round.front().probe_accuracy.value_or(0.0);
    const double last = cr.per_round.back().probe_accuracy.value_or(0.0);
    std::printf("        seed %llu: round-1=%.3f final=%.3f\n",
                (unsigned long long)seed, first, last);
    if (last >= first) ++improved;
  }
  return improved >= 2;
}

// --- 10: downstream trainer numerics --------------------------------------

bool check_downstream_numerics() {
  // Analytic vs central finite-difference gradients.
  DownstreamModel model = init_model(6, 8, 4, 5);
  Rng rng(6);
  for (double& w : model.w2) w = rng.next_gaussian() * 0.3;
  for (double& b : model.b2) b = rng.next_gaussian() * 0.1;
  const Matrix x = random_matrix(10, 6, 7);
  const Matrix y = random_matrix(10, 4, 8);
  const auto grad = mse_gradient(model, x, y);
  const auto params = flatten_params(model);
  const double eps = 1e-5;
  for (std::size_t k = 0; k < params.size(); k += 3) {
    DownstreamModel probe = model;
    std::vector<double> p = params;
    p[k] += eps;
    unflatten_params(probe, p);
    const double hi = mse_loss(probe, x, y);
    p[k] -= 2 * eps;
    unflatten_params(probe, p);
    const double lo = mse_loss(probe, x, y);
    const double fd = (hi - lo) / (2 * eps);
    if (std::abs(fd - grad[k]) > 1e-4 * (1.0 + std::abs(grad[k])))
      return false;
  }

  // Untrained model probes at chance.
  auto [train, eval] = make_synthetic_benchmark(5, 800, 20, 300);
  OptimizedDataset data;
  data.n = 16;
  data.samples = train.samples;
  data.targets = random_matrix(train.samples.size(), 16, 9);
  DownstreamConfig cfg;
  const DownstreamModel untrained = train_on_optimized(data, cfg, 0, 10);
  const double acc = linear_probe(untrained, eval, 11, cfg).accuracy;
  const double p0 = 1.0 / 5.0;
  const double n_test = double(eval.samples.size()) / 2.0;
  const double half_width = 2.576 * std::sqrt(p0 * (1.0 - p0) / n_test);
  std::printf("        epochs=0 probe accuracy %.4f, chance %.2f +- %.4f\n",
              acc, p0, half_width);
  return std::abs(acc - p0) <= half_width;
}

// --- 11: binary file formats round-trip bit-exactly -----------------------

bool check_format_round_trip() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "coopt-acceptance";
  fs::create_directories(dir);

  Shard shard;
  shard.shard_id = 5;
  Rng rng(12);
  for (std::uint64_t id : {3ull, 8ull, 21ull}) {
    Sample s;
    s.id = id;
    for (int j = 0; j < 6; ++j)
      s.x.push_back(static_cast<float>(rng.next_gaussian()));
    shard.sample_ids.push_back(id);
    shard.samples.push_back(std::move(s));
  }
  const fs::path cptd = dir / "shard.cptd";
  write_shard_file(cptd.string(), shard, 6);
  const Shard shard_back = read_shard_file(cptd.string());
  if (shard_back.shard_id != shard.shard_id) return false;
  for (std::size_t i = 0; i < shard.samples.size(); ++i)
    if (shard_back.samples[i].x != shard.samples[i].x) return false;

  TargetSet ts;
  ts.shard_id = 5;
  ts.n = 4;
  ts.aligned = true;
  ts.targets = random_matrix(3, 4, 13);
  const fs::path cptt = dir / "targets.cptt";
  write_targets_file(cptt.string(), ts);
  const TargetSet ts_back = read_targets_file(cptt.string());
  if (!(ts_back.targets == ts.targets) || ts_back.aligned != ts.aligned)
    return false;

  // Corrupt the magic bytes and expect a format error.
  std::fstream f(cptt, std::ios::in | std::ios::out | std::ios::binary);
  f.put('X');
  f.close();
  try {
    (void)read_targets_file(cptt.string());
    return false;
  } catch (const FormatError&) {
  }
  return true;
}

}  // namespace

int main() {
  run_check(1, "merge equivalence across K", check_merge_equivalence);
  run_check(2, "schedule independence", check_schedule_independence);
  run_check(3, "uniform value correctness", check_uniform_value);
  run_check(4, "uniformity-quality correlation",
            check_uniformity_quality_correlation);
  run_check(5, "alignment necessity", check_alignment_necessity);
  run_check(6, "least-squares recovery", check_least_squares_recovery);
  run_check(7, "projection distortion", check_jl_distortion);
  run_check(8, "shared-size diminishing returns", check_shared_size_returns);
  run_check(9, "continuous optimization", check_continuous_optimization);
  run_check(10, "downstream numerics", check_downstream_numerics);
  run_check(11, "format round trip", check_format_round_trip);

  if (g_failures == 0) {
    std::printf("all acceptance checks passed\n");
    return 0;
  }
  std::printf("%d acceptance check(s) failed\n", g_failures);
  return 1;
}
