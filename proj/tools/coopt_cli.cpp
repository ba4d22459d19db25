// coopt experiment runner.
//
// Subcommands: run, continuous, ablate-shared-size, ablate-alignment,
// correlate-uniformity, inspect. Every command is fully determined by its
// config file; rerunning with the same config reproduces artifacts byte for
// byte.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "coopt/config.hpp"
#include "coopt/core.hpp"
#include "coopt/downstream.hpp"
#include "coopt/io.hpp"
#include "coopt/protocol.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitProtocolError = 3;

struct Bench {
  coopt::Dataset dataset;
  std::optional<coopt::EvalSet> eval;
};

Bench build_dataset(const coopt::ExperimentConfig& cfg) {
  Bench b;
  if (cfg.dataset.kind == "synthetic") {
    const auto& s = cfg.dataset.synthetic;
    auto [train, eval] = coopt::make_synthetic_benchmark(
        s.classes, s.n_samples, s.dim, cfg.master_seed, s.margin,
        s.eval_samples);
    b.dataset = std::move(train);
    b.eval = std::move(eval);
  } else {
    coopt::Shard shard = coopt::read_shard_file(cfg.dataset.path);
    b.dataset.m = shard.samples.empty() ? 0 : shard.samples[0].x.size();
    b.dataset.samples = std::move(shard.samples);
  }
  return b;
}

struct MetricsWriter {
  std::ofstream os;
  std::string run_id;

  explicit MetricsWriter(const fs::path& path, std::string id)
      : os(path), run_id(std::move(id)) {}

  void line(std::size_t round, json participant, const std::string& metric,
            json value) {
    json j{{"run_id", run_id},
           {"round", round},
           {"participant", std::move(participant)},
           {"metric", metric},
           {"value", std::move(value)}};
    os << j.dump() << "\n";
  }

  void round(const coopt::RoundMetrics& m) {
    for (const auto& [id, v] : m.uniform_values)
      line(m.round, id, "uniform_value", v);
    line(m.round, m.best_prior_id, "best_prior", m.best_prior_id);
    line(m.round, nullptr, "merged_digest", coopt::digest_hex(m.merged_digest));
    if (m.probe_accuracy)
      line(m.round, nullptr, "probe_accuracy", *m.probe_accuracy);
    for (const auto& [phase, secs] : m.phase_seconds)
      line(m.round, nullptr, "seconds_" + phase, secs);
  }
};

void write_manifest(const fs::path& out, const coopt::ExperimentConfig& cfg,
                    const std::vector<fs::path>& artifacts) {
  json files = json::array();
  for (const auto& p : artifacts)
    files.push_back({{"path", p.filename().string()},
                     {"digest", coopt::digest_hex(coopt::digest_file(p))}});
  json j{{"run_id", cfg.run_id},
         {"config", json::parse(coopt::config_to_json(cfg))},
         {"artifacts", files}};
  std::ofstream os(out / "manifest.json");
  os << j.dump(2) << "\n";
}

void write_merged(const fs::path& path, const coopt::OptimizedDataset& data) {
  coopt::TargetSet ts;
  ts.shard_id = 0;
  ts.n = data.n;
  ts.targets = data.targets;
  ts.aligned = true;
  coopt::write_targets_file(path.string(), ts);
}

int cmd_run(const coopt::ExperimentConfig& cfg, const fs::path& out) {
  Bench bench = build_dataset(cfg);
  coopt::RoundResult rr = coopt::run_round(
      cfg, bench.dataset, {}, bench.eval ? &*bench.eval : nullptr);

  fs::create_directories(out);
  const fs::path merged = out / "merged.cptt";
  write_merged(merged, rr.data);
  MetricsWriter metrics(out / "metrics.jsonl", cfg.run_id);
  metrics.round(rr.metrics);
  metrics.os.close();
  write_manifest(out, cfg, {merged, out / "metrics.jsonl"});
  std::cout << "best_prior=" << rr.metrics.best_prior_id
            << " merged_digest=" << coopt::digest_hex(rr.metrics.merged_digest);
  if (rr.metrics.probe_accuracy)
    std::cout << " probe_accuracy=" << *rr.metrics.probe_accuracy;
  std::cout << "\n";
  return 0;
}

int cmd_continuous(const coopt::ExperimentConfig& cfg, const fs::path& out) {
  Bench bench = build_dataset(cfg);
  coopt::ContinuousResult cr = coopt::run_continuous(
      cfg, bench.dataset, bench.eval ? &*bench.eval : nullptr);

  fs::create_directories(out);
  const fs::path merged = out / "merged.cptt";
  write_merged(merged, cr.final_data);
  MetricsWriter metrics(out / "metrics.jsonl", cfg.run_id);
  for (const auto& m : cr.per_round) metrics.round(m);
  metrics.os.close();
  write_manifest(out, cfg, {merged, out / "metrics.jsonl"});
  for (const auto& m : cr.per_round) {
    std::cout << "round=" << m.round
              << " digest=" << coopt::digest_hex(m.merged_digest);
    if (m.probe_accuracy) std::cout << " probe_accuracy=" << *m.probe_accuracy;
    std::cout << "\n";
  }
  return 0;
}

int cmd_ablate_shared_size(const coopt::ExperimentConfig& cfg,
                           const fs::path& out,
                           std::vector<double> fractions) {
  if (fractions.empty())
    fractions = {0.01, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8};
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (fractions[i] <= 0.0 || fractions[i] >= 1.0)
      throw coopt::ConfigError("fractions must be in (0,1)");
    if (i > 0 && fractions[i] <= fractions[i - 1])
      throw coopt::ConfigError("fractions must be sorted ascending");
  }
  Bench bench = build_dataset(cfg);
  fs::create_directories(out);
  MetricsWriter metrics(out / "metrics.jsonl", cfg.run_id);
  for (const auto f : fractions) {
    coopt::ExperimentConfig c = cfg;
    c.shared_fraction = f;
    coopt::RoundResult rr = coopt::run_round(
        c, bench.dataset, {}, bench.eval ? &*bench.eval : nullptr);
    const double acc =
        rr.metrics.probe_accuracy ? *rr.metrics.probe_accuracy : 0.0;
    metrics.line(1, nullptr, "shared_fraction_accuracy",
                 json{{"fraction", f}, {"accuracy", acc}});
    std::cout << "fraction=" << f << " probe_accuracy=" << acc << "\n";
  }
  metrics.os.close();
  write_manifest(out, cfg, {out / "metrics.jsonl"});
  return 0;
}

int cmd_ablate_alignment(const coopt::ExperimentConfig& cfg,
                         const fs::path& out) {
  Bench bench = build_dataset(cfg);
  fs::create_directories(out);
  MetricsWriter metrics(out / "metrics.jsonl", cfg.run_id);
  for (const auto strategy :
       {coopt::AlignmentStrategy::best, coopt::AlignmentStrategy::median,
        coopt::AlignmentStrategy::worst, coopt::AlignmentStrategy::none}) {
    coopt::ExperimentConfig c = cfg;
    c.alignment_strategy = strategy;
    coopt::RoundResult rr = coopt::run_round(
        c, bench.dataset, {}, bench.eval ? &*bench.eval : nullptr);
    const double acc =
        rr.metrics.probe_accuracy ? *rr.metrics.probe_accuracy : 0.0;
    metrics.line(1, nullptr, "alignment_accuracy",
                 json{{"strategy", coopt::to_string(strategy)},
                      {"accuracy", acc}});
    std::cout << "strategy=" << coopt::to_string(strategy)
              << " probe_accuracy=" << acc << "\n";
  }
  metrics.os.close();
  write_manifest(out, cfg, {out / "metrics.jsonl"});
  return 0;
}

int cmd_correlate_uniformity(const coopt::ExperimentConfig& cfg,
                             const fs::path& out,
                             std::vector<double> levels) {
  if (levels.empty())
    levels = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  if (levels.size() < 5)
    throw coopt::ConfigError("correlate-uniformity needs >= 5 quality levels");
  if (cfg.roster.empty())
    throw coopt::ConfigError("config roster must contain the base prior spec");

  Bench bench = build_dataset(cfg);
  const auto roster = coopt::grade_roster(cfg.roster[0], levels);
  fs::create_directories(out);
  MetricsWriter metrics(out / "metrics.jsonl", cfg.run_id);

  std::vector<double> values, accuracies;
  for (std::size_t i = 0; i < roster.size(); ++i) {
    coopt::ExperimentConfig c = cfg;
    c.participants = 1;
    c.roster = {roster[i]};
    coopt::RoundResult rr = coopt::run_round(
        c, bench.dataset, {}, bench.eval ? &*bench.eval : nullptr);
    const double value = rr.metrics.uniform_values[0].second;
    const double acc =
        rr.metrics.probe_accuracy ? *rr.metrics.probe_accuracy : 0.0;
    values.push_back(value);
    accuracies.push_back(acc);
    metrics.line(1, nullptr, "uniformity_scatter",
                 json{{"quality", levels[i]},
                      {"uniform_value", value},
                      {"probe_accuracy", acc}});
    std::cout << "quality=" << levels[i] << " uniform_value=" << value
              << " probe_accuracy=" << acc << "\n";
  }
  const double rho = coopt::spearman(values, accuracies);
  metrics.line(1, nullptr, "spearman_rho", rho);
  metrics.os.close();
  write_manifest(out, cfg, {out / "metrics.jsonl"});
  std::cout << "spearman_rho=" << rho << "\n";
  return 0;
}

int cmd_inspect(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw coopt::FormatError("cannot open " + path);
  char magic[4];
  if (!is.read(magic, 4)) throw coopt::FormatError("file too short");
  is.seekg(0);
  if (std::string_view(magic, 4) == "CPTD") {
    const coopt::Shard shard = coopt::read_shard(is);
    std::cout << "CPTD shard_id=" << shard.shard_id
              << " count=" << shard.size() << " dim="
              << (shard.samples.empty() ? 0 : shard.samples[0].x.size())
              << "\n";
  } else if (std::string_view(magic, 4) == "CPTT") {
    const coopt::TargetSet ts = coopt::read_targets(is);
    std::cout << "CPTT shard_id=" << ts.shard_id
              << " aligned=" << (ts.aligned ? 1 : 0)
              << " count=" << ts.targets.rows << " dim=" << ts.n << "\n";
  } else {
    throw coopt::FormatError("unknown magic in " + path);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coopt: collaborative unlabeled-data optimization simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", inspect_path;
  std::int64_t seed_override = -1;
  int threads = 0;
  std::vector<double> fractions, levels;

  auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
    if (needs_config)
      cmd->add_option("--config", config_path, "config file path")->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed_override, "master seed override");
    cmd->add_option("--threads", threads, "OpenMP thread count");
  };

  auto* run = app.add_subcommand("run", "execute one optimization round");
  add_common(run);
  auto* cont = app.add_subcommand("continuous", "multi-round optimization");
  add_common(cont);
  auto* shared = app.add_subcommand("ablate-shared-size",
                                    "sweep shared-set fractions");
  add_common(shared);
  shared->add_option("--fractions", fractions, "fractions in (0,1), sorted");
  auto* align = app.add_subcommand("ablate-alignment",
                                   "sweep alignment strategies");
  add_common(align);
  auto* corr = app.add_subcommand("correlate-uniformity",
                                  "uniform value vs probe accuracy");
  add_common(corr);
  corr->add_option("--levels", levels, "quality levels in [0,1]");
  auto* inspect = app.add_subcommand("inspect", "dump CPTD/CPTT header");
  inspect->add_option("file", inspect_path, "file to inspect")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (inspect->parsed()) return cmd_inspect(inspect_path);

    coopt::ExperimentConfig cfg = coopt::load_config_file(config_path);
    if (seed_override >= 0)
      cfg.master_seed = static_cast<std::uint64_t>(seed_override);
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif
    const fs::path out(out_dir);
    if (run->parsed()) return cmd_run(cfg, out);
    if (cont->parsed()) return cmd_continuous(cfg, out);
    if (shared->parsed()) return cmd_ablate_shared_size(cfg, out, fractions);
    if (align->parsed()) return cmd_ablate_alignment(cfg, out);
    if (corr->parsed()) return cmd_correlate_uniformity(cfg, out, levels);
  } catch (const coopt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const coopt::ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << "\n";
    return kExitProtocolError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
