#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "coopt/types.hpp"

namespace coopt {

enum class TrainLoss { mse, cosine };

struct DownstreamConfig {
  std::size_t hidden = 64;
  std::size_t epochs = 30;
  std::size_t batch = 64;
  double lr = 0.1;
  TrainLoss loss = TrainLoss::mse;
  std::size_t probe_iters = 300;
  double probe_lr = 0.5;
};

// Small regression network x -> representation in R^n, trained to match the
// optimized targets. The output layer is zero-initialized so an untrained
// model produces a constant (uninformative) representation; the probe reads
// this final representation layer.
struct DownstreamModel {
  std::size_t m = 0, hidden = 0, n = 0;
  std::uint64_t seed = 0;
  // Parameters in double; training is bit-deterministic for fixed seeds.
  std::vector<double> w1;  // hidden x m
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // n x hidden
  std::vector<double> b2;  // n
  std::vector<double> loss_curve;  // full-dataset loss per epoch
};

struct EvalSet {
  std::vector<Sample> samples;
  std::vector<int> labels;
  int classes = 0;
};

struct ProbeResult {
  double accuracy = 0.0;
  std::vector<double> per_class;
  std::vector<double> loss_curve;
};

DownstreamModel init_model(std::size_t m, std::size_t hidden, std::size_t n,
                           std::uint64_t seed);

std::vector<double> representation(const DownstreamModel& model,
                                   std::span<const float> x);
Matrix representations(const DownstreamModel& model,
                       std::span<const Sample> batch);

DownstreamModel train_on_optimized(const OptimizedDataset& data,
                                   const DownstreamConfig& cfg,
                                   std::size_t epochs, std::uint64_t seed);

// Flat-parameter objective and analytic gradient over a fixed batch, used by
// the trainer and directly checkable against finite differences.
std::vector<double> flatten_params(const DownstreamModel& model);
void unflatten_params(DownstreamModel& model, std::span<const double> params);
double mse_loss(const DownstreamModel& model, const Matrix& x,
                const Matrix& y);
std::vector<double> mse_gradient(const DownstreamModel& model, const Matrix& x,
                                 const Matrix& y);

ProbeResult linear_probe(const DownstreamModel& model, const EvalSet& eval,
                         std::uint64_t probe_seed,
                         const DownstreamConfig& cfg = {});

// Probe an arbitrary representation matrix directly (rows follow eval order).
ProbeResult linear_probe_features(const Matrix& features, const EvalSet& eval,
                                  std::uint64_t probe_seed,
                                  const DownstreamConfig& cfg = {});

// Average-rank Spearman correlation; returns 0 when either ranking is
// degenerate (all ties).
double spearman(std::span<const double> xs, std::span<const double> ys);

// Seeded Gaussian class clusters with ids 0..N-1 for training and a disjoint
// id range for evaluation.
std::pair<Dataset, EvalSet> make_synthetic_benchmark(
    int classes, std::size_t n_samples, std::size_t dim, std::uint64_t seed,
    double margin = 1.5, std::size_t eval_samples = 1000);

}  // namespace coopt
