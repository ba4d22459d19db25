#include "coopt/protocol.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coopt/core.hpp"
#include "coopt/io.hpp"
#include "coopt/rng.hpp"
#include "coopt/wire.hpp"

namespace coopt {

namespace {

constexpr std::uint32_t kShareSetSentinel = 0xFFFFFFFEu;

enum : std::uint8_t {
  kTagDistributeShard = 1,
  kTagShareSet = 2,
  kTagReportUniform = 3,
  kTagAnnounceBest = 4,
  kTagPublishSharedTargets = 5,
  kTagUploadOptimized = 6,
  kTagMergeComplete = 7,
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

// ---------------------------------------------------------------------------
// Frames
// ---------------------------------------------------------------------------

std::string encode_frame(const Message& msg) {
  std::ostringstream payload(std::ios::binary);
  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, MsgDistributeShard>) {
          wire::put_le<std::uint8_t>(payload, kTagDistributeShard);
        } else if constexpr (std::is_same_v<T, MsgShareSet>) {
          wire::put_le<std::uint8_t>(payload, kTagShareSet);
        } else if constexpr (std::is_same_v<T, MsgReportUniform>) {
          wire::put_le<std::uint8_t>(payload, kTagReportUniform);
        } else if constexpr (std::is_same_v<T, MsgAnnounceBest>) {
          wire::put_le<std::uint8_t>(payload, kTagAnnounceBest);
        } else if constexpr (std::is_same_v<T, MsgPublishSharedTargets>) {
          wire::put_le<std::uint8_t>(payload, kTagPublishSharedTargets);
        } else if constexpr (std::is_same_v<T, MsgUploadOptimized>) {
          wire::put_le<std::uint8_t>(payload, kTagUploadOptimized);
        } else {
          wire::put_le<std::uint8_t>(payload, kTagMergeComplete);
        }
      },
      msg.body);
  wire::put_le<std::uint32_t>(payload, msg.round);
  wire::put_string(payload, msg.run_id);

  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, MsgDistributeShard>) {
          write_shard(payload, body.shard, body.dim);
        } else if constexpr (std::is_same_v<T, MsgShareSet>) {
          Shard s;
          s.shard_id = kShareSetSentinel;
          s.samples = body.set.samples;
          for (const auto& sample : s.samples)
            s.sample_ids.push_back(sample.id);
          write_shard(payload, s, body.dim);
        } else if constexpr (std::is_same_v<T, MsgReportUniform>) {
          const std::string json = report_to_json(body.report);
          wire::put_le<std::uint32_t>(payload,
                                      std::uint32_t(json.size()));
          payload.write(json.data(), std::streamsize(json.size()));
        } else if constexpr (std::is_same_v<T, MsgAnnounceBest>) {
          nlohmann::json j{{"participant_id", body.participant_id},
                           {"n", body.n}};
          const std::string json = j.dump();
          wire::put_le<std::uint32_t>(payload, std::uint32_t(json.size()));
          payload.write(json.data(), std::streamsize(json.size()));
        } else if constexpr (std::is_same_v<T, MsgPublishSharedTargets>) {
          TargetSet ts;
          ts.shard_id = kSharedSetShardId;
          ts.n = body.targets.n;
          ts.targets = body.targets.values;
          ts.aligned = true;
          write_targets(payload, ts);
        } else if constexpr (std::is_same_v<T, MsgUploadOptimized>) {
          wire::put_le<std::uint32_t>(payload, body.shard_id);
          wire::put_f64(payload, body.uniform_value_of_round);
          write_targets(payload, body.targets);
        } else {
          wire::put_le<std::uint64_t>(payload, body.dataset_digest);
        }
      },
      msg.body);

  const std::string bytes = payload.str();
  std::ostringstream frame(std::ios::binary);
  wire::put_le<std::uint32_t>(frame, std::uint32_t(bytes.size()));
  frame.write(bytes.data(), std::streamsize(bytes.size()));
  return frame.str();
}

Message decode_frame(const std::string& frame) {
  std::istringstream is(frame, std::ios::binary);
  const auto length = wire::get_le<std::uint32_t>(is);
  if (frame.size() != length + 4)
    throw FormatError("frame length mismatch");
  const auto tag = wire::get_le<std::uint8_t>(is);
  Message msg;
  msg.round = wire::get_le<std::uint32_t>(is);
  msg.run_id = wire::get_string(is);

  auto read_json_blob = [&] {
    const auto len = wire::get_le<std::uint32_t>(is);
    std::string s(len, '\0');
    if (!is.read(s.data(), len)) throw FormatError("truncated frame");
    return s;
  };

  switch (tag) {
    case kTagDistributeShard: {
      MsgDistributeShard body;
      body.shard = read_shard(is);
      body.dim = body.shard.samples.empty()
                     ? 0
                     : std::uint32_t(body.shard.samples[0].x.size());
      msg.body = std::move(body);
      break;
    }
    case kTagShareSet: {
      Shard s = read_shard(is);
      MsgShareSet body;
      body.dim = s.samples.empty() ? 0 : std::uint32_t(s.samples[0].x.size());
      body.set.samples = std::move(s.samples);
      body.set.hash = digest_samples(body.set.samples);
      msg.body = std::move(body);
      break;
    }
    case kTagReportUniform: {
      MsgReportUniform body;
      body.report = report_from_json(read_json_blob());
      msg.body = std::move(body);
      break;
    }
    case kTagAnnounceBest: {
      const auto j = nlohmann::json::parse(read_json_blob());
      MsgAnnounceBest body;
      body.participant_id = j.at("participant_id").get<std::uint32_t>();
      body.n = j.at("n").get<std::uint64_t>();
      msg.body = body;
      break;
    }
    case kTagPublishSharedTargets: {
      TargetSet ts = read_targets(is);
      if (ts.shard_id != kSharedSetShardId)
        throw FormatError("shared targets frame without sentinel shard id");
      MsgPublishSharedTargets body;
      body.targets.n = ts.n;
      body.targets.values = std::move(ts.targets);
      msg.body = std::move(body);
      break;
    }
    case kTagUploadOptimized: {
      MsgUploadOptimized body;
      body.shard_id = wire::get_le<std::uint32_t>(is);
      body.uniform_value_of_round = wire::get_f64(is);
      body.targets = read_targets(is);
      msg.body = std::move(body);
      break;
    }
    case kTagMergeComplete: {
      MsgMergeComplete body;
      body.dataset_digest = wire::get_le<std::uint64_t>(is);
      msg.body = body;
      break;
    }
    default:
      throw FormatError("unknown frame tag " + std::to_string(tag));
  }
  return msg;
}

namespace {

// Loopback byte-stream: every message optionally passes through the codec so
// the transport mode exercises exactly the state the in-process mode uses.
Message loop(const ExperimentConfig& cfg, Message msg) {
  if (!cfg.loopback_transport) return msg;
  return decode_frame(encode_frame(std::move(msg)));
}

}  // namespace

// ---------------------------------------------------------------------------
// Round execution
// ---------------------------------------------------------------------------

TargetSet participant_optimize(const ParticipantState& state,
                               const PriorModel& model) {
  if (!state.shard) throw ProtocolError("participant_optimize: shard not set");
  if (!state.w) throw ProtocolError("participant_optimize: projection not set");
  if (!state.t)
    throw ProtocolError("participant_optimize: transformation pending");
  const Matrix features = model.extract(state.shard->samples);
  const Matrix projected = project(*state.w, features);
  TargetSet ts;
  ts.shard_id = state.shard->shard_id;
  ts.n = state.w->n;
  ts.targets = projected;
  ts.aligned = false;
  return apply_transformation(*state.t, std::move(ts));
}

RoundResult run_round(const ExperimentConfig& cfg, const Dataset& dataset,
                      std::span<const std::uint32_t> schedule,
                      const EvalSet* eval) {
  cfg.validate();
  const std::uint32_t k = cfg.participants;
  const std::uint32_t round = 1;

  std::vector<std::uint32_t> order(schedule.begin(), schedule.end());
  if (order.empty()) {
    order.resize(k);
    std::iota(order.begin(), order.end(), 0u);
  }
  if (order.size() != k)
    throw ProtocolError("schedule must list every participant exactly once");

  RoundResult result;
  RoundMetrics& metrics = result.metrics;
  CoordinatorPhase phase = CoordinatorPhase::distributing;

  // --- Step 1: data distributing ---
  auto t0 = Clock::now();
  const auto shards =
      partition(dataset, k, derive_seed(cfg.master_seed, SeedRole::partition));

  // Shared set: seeded subset of the dataset.
  const std::size_t shared_size = std::max<std::size_t>(
      2, std::size_t(std::ceil(cfg.shared_fraction * double(dataset.size()))));
  std::vector<std::size_t> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng srng(derive_seed(cfg.master_seed, SeedRole::shared_set));
  for (std::size_t i = 0; i + 1 < idx.size() && i < shared_size; ++i) {
    const std::size_t j = i + srng.next_below(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(shared_size);
  std::sort(idx.begin(), idx.end());
  SharedSet shared;
  for (std::size_t i : idx) shared.samples.push_back(dataset.samples[i]);
  shared.hash = digest_samples(shared.samples);

  std::vector<ParticipantState> states(k);
  std::vector<PriorModel> models;
  models.reserve(k);
  for (std::uint32_t p = 0; p < k; ++p) {
    states[p].participant_id = p;
    states[p].prior = cfg.roster[p];
    models.push_back(PriorModel::build(cfg.roster[p], &dataset));
  }
  for (std::uint32_t p : order) {
    Message msg = loop(cfg, {cfg.run_id, round,
                             MsgDistributeShard{shards[p],
                                                std::uint32_t(dataset.m)}});
    states[p].shard = std::get<MsgDistributeShard>(msg.body).shard;
    Message share = loop(
        cfg, {cfg.run_id, round, MsgShareSet{shared,
                                             std::uint32_t(dataset.m)}});
    (void)share;
  }
  metrics.phase_seconds["distribute"] = seconds_since(t0);
  phase = CoordinatorPhase::collecting_reports;

  // --- Uniform-value reporting on raw shared-set features ---
  t0 = Clock::now();
  std::vector<Matrix> shared_features(k);
  std::vector<UniformValueReport> reports(k);
  for (std::uint32_t p : order) {
    shared_features[p] = models[p].extract(shared.samples);
    UniformValueReport rep;
    rep.participant_id = p;
    rep.value = uniform_value(shared_features[p], cfg.tau,
                              cfg.uniformity.normalize, cfg.uniformity.sign);
    rep.tau = cfg.tau;
    rep.shared_set_hash = shared.hash;
    Message msg = loop(cfg, {cfg.run_id, round, MsgReportUniform{rep}});
    reports[p] = std::get<MsgReportUniform>(msg.body).report;
  }
  const std::uint32_t best = select_best_prior(reports);
  metrics.best_prior_id = best;
  for (std::uint32_t p = 0; p < k; ++p)
    metrics.uniform_values.emplace_back(p, reports[p].value);
  metrics.phase_seconds["report"] = seconds_since(t0);

  // --- Step 3: alignment ---
  t0 = Clock::now();
  const std::size_t n =
      cfg.n_override ? cfg.n_override : cfg.roster[best].out_dim;
  {
    Message msg = loop(cfg, {cfg.run_id, round,
                             MsgAnnounceBest{best, std::uint64_t(n)}});
    (void)msg;
  }
  for (std::uint32_t p = 0; p < k; ++p) {
    const std::size_t l = cfg.roster[p].out_dim;
    states[p].w = sample_projection(
        l, n, derive_seed(cfg.master_seed, SeedRole::projection, p),
        /*identity=*/l == n);
  }

  // Alignment reference per strategy: rank reports by (value, id).
  std::optional<std::uint32_t> reference;
  if (cfg.alignment_strategy != AlignmentStrategy::none) {
    std::vector<std::uint32_t> ranked(k);
    std::iota(ranked.begin(), ranked.end(), 0u);
    std::sort(ranked.begin(), ranked.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                if (reports[a].value != reports[b].value)
                  return reports[a].value < reports[b].value;
                return a < b;
              });
    switch (cfg.alignment_strategy) {
      case AlignmentStrategy::best: reference = ranked.front(); break;
      case AlignmentStrategy::worst: reference = ranked.back(); break;
      case AlignmentStrategy::median: reference = ranked[(k - 1) / 2]; break;
      case AlignmentStrategy::none: break;
    }
  }

  SharedTargets ystar;
  if (reference) {
    ystar.values = project(*states[*reference].w, shared_features[*reference]);
    ystar.n = n;
    Message msg = loop(cfg, {cfg.run_id, round,
                             MsgPublishSharedTargets{ystar}});
    ystar = std::get<MsgPublishSharedTargets>(msg.body).targets;
  }

  for (std::uint32_t p : order) {
    if (!reference || p == *reference) {
      states[p].t = alignment_for_best(n, p);
      continue;
    }
    const Matrix f = project(*states[p].w, shared_features[p]);
    if (f == ystar.values) {
      // Identical extractor pipeline; the target space already matches and a
      // numeric solve would only perturb it.
      states[p].t = alignment_for_best(n, p);
      continue;
    }
    const double lambda = cfg.ridge_lambda >= 0.0
                              ? cfg.ridge_lambda
                              : default_ridge_lambda(f);
    states[p].t = fit_transformation(f, ystar, lambda, p);
  }
  metrics.phase_seconds["align"] = seconds_since(t0);
  phase = CoordinatorPhase::awaiting_uploads;

  // --- Steps 2+4: optimize shards and upload ---
  t0 = Clock::now();
  result.uploads.resize(k);
  result.upload_values.resize(k);
  std::vector<bool> received(k, false);
  for (std::uint32_t p : order) {
    TargetSet ts = participant_optimize(states[p], models[p]);
    Message msg = loop(cfg, {cfg.run_id, round,
                             MsgUploadOptimized{ts.shard_id, std::move(ts),
                                                reports[p].value}});
    auto& upload = std::get<MsgUploadOptimized>(msg.body);
    if (upload.shard_id != shards[p].shard_id)
      throw ProtocolError("upload rejected: wrong shard id " +
                          std::to_string(upload.shard_id) +
                          " from participant " + std::to_string(p));
    if (received[p])
      throw ProtocolError("duplicate upload from participant " +
                          std::to_string(p));
    received[p] = true;
    result.uploads[p] = std::move(upload.targets);
    result.upload_values[p] = upload.uniform_value_of_round;
  }
  if (!std::all_of(received.begin(), received.end(), [](bool b) { return b; }))
    throw ProtocolError("round incomplete: missing uploads");
  metrics.phase_seconds["optimize"] = seconds_since(t0);

  // --- Step 5: merging ---
  t0 = Clock::now();
  result.data = merge(result.uploads, dataset, shards);
  metrics.merged_digest = digest_matrix(result.data.targets);
  {
    Message msg = loop(cfg, {cfg.run_id, round,
                             MsgMergeComplete{metrics.merged_digest}});
    (void)msg;
  }
  phase = CoordinatorPhase::merged;
  (void)phase;
  metrics.phase_seconds["merge"] = seconds_since(t0);

  if (eval && cfg.probe_each_round) {
    t0 = Clock::now();
    const DownstreamModel model =
        train_on_optimized(result.data, cfg.downstream, cfg.downstream.epochs,
                           derive_seed(cfg.master_seed, SeedRole::training));
    metrics.probe_accuracy =
        linear_probe(model, *eval, derive_seed(cfg.master_seed, SeedRole::probe),
                     cfg.downstream)
            .accuracy;
    metrics.phase_seconds["probe"] = seconds_since(t0);
  }
  result.shared = std::move(shared);
  return result;
}

// ---------------------------------------------------------------------------
// Continuous optimization
// ---------------------------------------------------------------------------

namespace {

PriorModelSpec upgrade_spec(const PriorModelSpec& spec,
                            const ContinuousSpec& ladder) {
  PriorModelSpec up = spec;
  if (ladder.ladder == UpgradeLadder::kind && spec.kind == PriorKind::linear) {
    up.kind = PriorKind::mlp;
    return up;
  }
  up.quality = std::min(1.0, spec.quality + ladder.quality_step);
  return up;
}

}  // namespace

ContinuousResult run_continuous(const ExperimentConfig& cfg,
                                const Dataset& dataset, const EvalSet* eval) {
  cfg.validate();
  const std::size_t rounds = cfg.continuous.rounds;
  const double p = cfg.continuous.upgrade_fraction;
  const std::uint32_t k = cfg.participants;

  ExperimentConfig current = cfg;
  ContinuousResult out;

  std::vector<TargetSet> retained;
  std::vector<double> retained_values;
  std::vector<Shard> shards =
      partition(dataset, k, derive_seed(cfg.master_seed, SeedRole::partition));

  for (std::size_t round = 1; round <= rounds; ++round) {
    if (round > 1) {
      // Seeded choice of ceil(p*K) participants to upgrade.
      const std::size_t upgrades =
          std::min<std::size_t>(k, std::size_t(std::ceil(p * double(k))));
      std::vector<std::uint32_t> ids(k);
      std::iota(ids.begin(), ids.end(), 0u);
      Rng rng(derive_seed(cfg.master_seed, SeedRole::upgrade, round));
      for (std::size_t i = 0; i + 1 < ids.size() && i < upgrades; ++i) {
        const std::size_t j = i + rng.next_below(ids.size() - i);
        std::swap(ids[i], ids[j]);
      }
      for (std::size_t i = 0; i < upgrades; ++i)
        current.roster[ids[i]] =
            upgrade_spec(current.roster[ids[i]], cfg.continuous);
    }

    RoundResult rr = run_round(current, dataset, {}, nullptr);
    if (round == 1) {
      // Retained sets persist across rounds, so the target dimension must
      // stay fixed even if a later upgrade changes which prior is best.
      if (current.n_override == 0) current.n_override = rr.data.n;
      retained = rr.uploads;
      retained_values = rr.upload_values;
    } else {
      for (std::uint32_t id = 0; id < k; ++id) {
        if (rr.upload_values[id] < retained_values[id]) {
          retained[id] = rr.uploads[id];
          retained_values[id] = rr.upload_values[id];
        }
      }
    }

    RoundMetrics metrics = rr.metrics;
    metrics.round = round;
    metrics.uniform_values.clear();
    for (std::uint32_t id = 0; id < k; ++id)
      metrics.uniform_values.emplace_back(id, retained_values[id]);
    OptimizedDataset merged = merge(retained, dataset, shards);
    metrics.merged_digest = digest_matrix(merged.targets);
    if (eval && cfg.probe_each_round) {
      const DownstreamModel model = train_on_optimized(
          merged, cfg.downstream, cfg.downstream.epochs,
          derive_seed(cfg.master_seed, SeedRole::training));
      metrics.probe_accuracy =
          linear_probe(model, *eval,
                       derive_seed(cfg.master_seed, SeedRole::probe),
                       cfg.downstream)
              .accuracy;
    }
    out.per_round.push_back(std::move(metrics));
    if (round == rounds) out.final_data = std::move(merged);
  }
  return out;
}

std::string metrics_to_json(const RoundMetrics& m, const std::string& run_id) {
  nlohmann::json values = nlohmann::json::array();
  for (const auto& [id, v] : m.uniform_values)
    values.push_back({{"participant", id}, {"value", v}});
  nlohmann::json j{{"run_id", run_id},
                   {"round", m.round},
                   {"uniform_values", values},
                   {"best_prior_id", m.best_prior_id},
                   {"merged_digest", digest_hex(m.merged_digest)},
                   {"phase_seconds", m.phase_seconds}};
  if (m.probe_accuracy) j["probe_accuracy"] = *m.probe_accuracy;
  return j.dump();
}

}  // namespace coopt
