#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "coopt/alignment.hpp"
#include "coopt/config.hpp"
#include "coopt/downstream.hpp"
#include "coopt/priors.hpp"
#include "coopt/projection.hpp"
#include "coopt/types.hpp"
#include "coopt/uniformity.hpp"

namespace coopt {

// ---------------------------------------------------------------------------
// Messages and frames
// ---------------------------------------------------------------------------

struct MsgDistributeShard {
  Shard shard;
  std::uint32_t dim = 0;
};
struct MsgShareSet {
  SharedSet set;
  std::uint32_t dim = 0;
};
struct MsgReportUniform {
  UniformValueReport report;
};
struct MsgAnnounceBest {
  std::uint32_t participant_id = 0;
  std::uint64_t n = 0;
};
struct MsgPublishSharedTargets {
  SharedTargets targets;
};
struct MsgUploadOptimized {
  std::uint32_t shard_id = 0;
  TargetSet targets;
  double uniform_value_of_round = 0.0;
};
struct MsgMergeComplete {
  std::uint64_t dataset_digest = 0;
};

struct Message {
  std::string run_id;
  std::uint32_t round = 0;
  std::variant<MsgDistributeShard, MsgShareSet, MsgReportUniform,
               MsgAnnounceBest, MsgPublishSharedTargets, MsgUploadOptimized,
               MsgMergeComplete>
      body;
};

// Length-prefixed (u32 LE) binary frame; payload is a tag byte, round index,
// run id, then the bit-exact CPTD/CPTT/JSON payload of the message body.
std::string encode_frame(const Message& msg);
Message decode_frame(const std::string& frame);

// ---------------------------------------------------------------------------
// State machines
// ---------------------------------------------------------------------------

enum class CoordinatorPhase {
  distributing,
  collecting_reports,
  awaiting_uploads,
  merged,
};

struct ParticipantState {
  std::uint32_t participant_id = 0;
  PriorModelSpec prior;
  std::optional<ProjectionMatrix> w;
  std::optional<TransformationMatrix> t;
  std::optional<Shard> shard;
};

struct RoundMetrics {
  std::size_t round = 1;
  std::vector<std::pair<std::uint32_t, double>> uniform_values;
  std::uint32_t best_prior_id = 0;
  std::uint64_t merged_digest = 0;
  std::optional<double> probe_accuracy;
  std::map<std::string, double> phase_seconds;
};

std::string metrics_to_json(const RoundMetrics& m, const std::string& run_id);

struct RoundResult {
  OptimizedDataset data;
  RoundMetrics metrics;
  SharedSet shared;
  std::vector<TargetSet> uploads;       // index = participant id
  std::vector<double> upload_values;    // shared-set uniform value per prior
};

// One Step 1-5 round. The merged dataset and best id are a pure function of
// (config, dataset): any participant schedule and any message arrival order
// produce the same result.
RoundResult run_round(const ExperimentConfig& cfg, const Dataset& dataset,
                      std::span<const std::uint32_t> schedule = {},
                      const EvalSet* eval = nullptr);

// Step 2+3 for a single participant; requires shard, W and T to be set.
TargetSet participant_optimize(const ParticipantState& state,
                               const PriorModel& model);

struct ContinuousResult {
  std::vector<RoundMetrics> per_round;  // uniform values = retained values
  OptimizedDataset final_data;
};

// Multi-round evolution: each round after the first upgrades a seeded
// ceil(p*K) subset of priors, and per participant the coordinator retains
// whichever target set came from the prior with the lower shared-set uniform
// value. Retained values are therefore non-increasing.
ContinuousResult run_continuous(const ExperimentConfig& cfg,
                                const Dataset& dataset,
                                const EvalSet* eval = nullptr);

}  // namespace coopt
