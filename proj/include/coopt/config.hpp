#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coopt/downstream.hpp"
#include "coopt/priors.hpp"
#include "coopt/types.hpp"

namespace coopt {

enum class AlignmentStrategy { best, median, worst, none };
const char* to_string(AlignmentStrategy s);
AlignmentStrategy alignment_strategy_from_string(const std::string& s);

enum class UpgradeLadder { quality, kind };

struct SyntheticSpec {
  int classes = 5;
  std::size_t n_samples = 2000;
  std::size_t dim = 20;
  double margin = 1.5;
  std::size_t eval_samples = 1000;
};

struct DatasetSpec {
  std::string kind = "synthetic";  // "synthetic" or "cptd"
  SyntheticSpec synthetic;
  std::string path;  // cptd only
};

struct ContinuousSpec {
  std::size_t rounds = 1;
  double upgrade_fraction = 0.2;
  UpgradeLadder ladder = UpgradeLadder::quality;
  double quality_step = 0.15;
};

struct UniformitySpec {
  double sign = -1.0;  // -1 per the ranking rule; +1 is the literal formula
  bool normalize = true;
};

struct ExperimentConfig {
  std::string run_id = "run";
  std::uint64_t master_seed = 1;
  DatasetSpec dataset;
  std::uint32_t participants = 1;
  std::vector<PriorModelSpec> roster;  // one entry per participant
  double shared_fraction = 0.05;
  double tau = 2.0;
  UniformitySpec uniformity;
  std::size_t n_override = 0;     // 0: best prior's out_dim
  double ridge_lambda = -1.0;     // negative: relative default
  AlignmentStrategy alignment_strategy = AlignmentStrategy::best;
  ContinuousSpec continuous;
  DownstreamConfig downstream;
  bool loopback_transport = false;
  bool probe_each_round = true;

  void validate() const;
};

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& json);
ExperimentConfig load_config_file(const std::string& path);

}  // namespace coopt
