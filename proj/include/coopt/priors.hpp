#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "coopt/types.hpp"

namespace coopt {

enum class PriorKind { linear, mlp, weak_mlp, oracle };

const char* to_string(PriorKind kind);
PriorKind prior_kind_from_string(const std::string& s);

struct PriorModelSpec {
  PriorKind kind = PriorKind::mlp;
  std::uint64_t seed = 0;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  double quality = 1.0;       // fidelity knob in [0,1]
  double label_noise = 0.0;   // oracle only
  std::size_t hidden = 64;    // mlp variants
  bool identity_init = false; // linear only, requires out_dim == in_dim
  // weak-mlp alternative: simulate "trained for t steps" instead of blending,
  // with t = round(quality * train_steps_max). Needs a labeled dataset.
  bool weak_trained = false;
  std::size_t train_steps_max = 200;

  bool operator==(const PriorModelSpec&) const = default;
};

// Deterministic feature extractor psi: R^m -> R^l. Immutable after build;
// extract() is a pure per-sample function, so results never depend on how a
// batch is split across shards or workers.
class PriorModel {
 public:
  // labels_source is required for the oracle kind and for weak_trained.
  static PriorModel build(const PriorModelSpec& spec,
                          const Dataset* labels_source = nullptr);

  Matrix extract(std::span<const Sample> batch) const;
  Matrix extract(const std::vector<Sample>& batch) const {
    return extract(std::span<const Sample>(batch));
  }

  const PriorModelSpec& spec() const { return spec_; }
  std::size_t out_dim() const { return spec_.out_dim; }

 private:
  PriorModelSpec spec_;
  Matrix w_linear_;              // linear: l x m
  Matrix input_map_;             // weak-mlp rank-limited input map: r x m
  Matrix w1_;                    // mlp/weak-mlp: h x (m or r)
  std::vector<float> b1_;
  Matrix w2_;                    // mlp/weak-mlp: l x h
  std::vector<float> collapse_;  // weak-mlp collapse direction, length l
  std::unordered_map<std::uint64_t, int> label_of_;  // oracle / weak_trained
  int classes_ = 0;
};

// One spec per quality level, differing only in quality and seed offset.
std::vector<PriorModelSpec> grade_roster(const PriorModelSpec& base,
                                         std::span<const double> levels);

}  // namespace coopt
