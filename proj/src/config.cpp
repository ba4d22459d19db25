#include "coopt/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace coopt {

using nlohmann::json;

const char* to_string(AlignmentStrategy s) {
  switch (s) {
    case AlignmentStrategy::best: return "best";
    case AlignmentStrategy::median: return "median";
    case AlignmentStrategy::worst: return "worst";
    case AlignmentStrategy::none: return "none";
  }
  return "?";
}

AlignmentStrategy alignment_strategy_from_string(const std::string& s) {
  if (s == "best") return AlignmentStrategy::best;
  if (s == "median") return AlignmentStrategy::median;
  if (s == "worst") return AlignmentStrategy::worst;
  if (s == "none") return AlignmentStrategy::none;
  throw ConfigError("unknown alignment strategy '" + s + "'");
}

void ExperimentConfig::validate() const {
  if (participants == 0) throw ConfigError("participants must be >= 1");
  if (roster.size() != participants)
    throw ConfigError("roster size " + std::to_string(roster.size()) +
                      " does not match participants " +
                      std::to_string(participants));
  if (shared_fraction <= 0.0 || shared_fraction >= 1.0)
    throw ConfigError("shared_fraction must be in (0,1)");
  if (tau <= 0.0) throw ConfigError("tau must be > 0");
  if (continuous.rounds < 1) throw ConfigError("continuous.rounds must be >= 1");
  if (continuous.upgrade_fraction < 0.0 || continuous.upgrade_fraction > 1.0)
    throw ConfigError("continuous.upgrade_fraction must be in [0,1]");
  if (dataset.kind != "synthetic" && dataset.kind != "cptd")
    throw ConfigError("dataset.kind must be 'synthetic' or 'cptd'");
  for (const auto& spec : roster) {
    if (spec.out_dim < 1) throw ConfigError("roster entry with out_dim < 1");
    if (spec.quality < 0.0 || spec.quality > 1.0)
      throw ConfigError("roster entry with quality outside [0,1]");
  }
}

namespace {

json prior_to_json(const PriorModelSpec& p) {
  return json{{"kind", to_string(p.kind)},
              {"seed", p.seed},
              {"in_dim", p.in_dim},
              {"out_dim", p.out_dim},
              {"quality", p.quality},
              {"label_noise", p.label_noise},
              {"hidden", p.hidden},
              {"identity_init", p.identity_init},
              {"weak_trained", p.weak_trained},
              {"train_steps_max", p.train_steps_max}};
}

PriorModelSpec prior_from_json(const json& j) {
  PriorModelSpec p;
  p.kind = prior_kind_from_string(j.at("kind").get<std::string>());
  p.seed = j.at("seed").get<std::uint64_t>();
  p.in_dim = j.value("in_dim", std::size_t{0});
  p.out_dim = j.at("out_dim").get<std::size_t>();
  p.quality = j.value("quality", 1.0);
  p.label_noise = j.value("label_noise", 0.0);
  p.hidden = j.value("hidden", std::size_t{64});
  p.identity_init = j.value("identity_init", false);
  p.weak_trained = j.value("weak_trained", false);
  p.train_steps_max = j.value("train_steps_max", std::size_t{200});
  return p;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg) {
  json roster = json::array();
  for (const auto& p : cfg.roster) roster.push_back(prior_to_json(p));
  json j{
      {"run_id", cfg.run_id},
      {"master_seed", cfg.master_seed},
      {"dataset",
       {{"kind", cfg.dataset.kind},
        {"classes", cfg.dataset.synthetic.classes},
        {"n_samples", cfg.dataset.synthetic.n_samples},
        {"dim", cfg.dataset.synthetic.dim},
        {"margin", cfg.dataset.synthetic.margin},
        {"eval_samples", cfg.dataset.synthetic.eval_samples},
        {"path", cfg.dataset.path}}},
      {"participants", cfg.participants},
      {"roster", roster},
      {"shared_fraction", cfg.shared_fraction},
      {"tau", cfg.tau},
      {"uniformity",
       {{"sign", cfg.uniformity.sign < 0 ? "negative" : "positive"},
        {"normalize", cfg.uniformity.normalize}}},
      {"n_override", cfg.n_override},
      {"ridge_lambda", cfg.ridge_lambda},
      {"alignment_strategy", to_string(cfg.alignment_strategy)},
      {"continuous",
       {{"rounds", cfg.continuous.rounds},
        {"upgrade_fraction", cfg.continuous.upgrade_fraction},
        {"ladder",
         cfg.continuous.ladder == UpgradeLadder::quality ? "quality" : "kind"},
        {"quality_step", cfg.continuous.quality_step}}},
      {"downstream",
       {{"hidden", cfg.downstream.hidden},
        {"epochs", cfg.downstream.epochs},
        {"batch", cfg.downstream.batch},
        {"lr", cfg.downstream.lr},
        {"loss", cfg.downstream.loss == TrainLoss::mse ? "mse" : "cosine"},
        {"probe_iters", cfg.downstream.probe_iters},
        {"probe_lr", cfg.downstream.probe_lr}}},
      {"loopback_transport", cfg.loopback_transport},
      {"probe_each_round", cfg.probe_each_round}};
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  try {
    ExperimentConfig cfg;
    cfg.run_id = j.value("run_id", std::string("run"));
    cfg.master_seed = j.value("master_seed", std::uint64_t{1});
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      cfg.dataset.kind = d.value("kind", std::string("synthetic"));
      cfg.dataset.synthetic.classes = d.value("classes", 5);
      cfg.dataset.synthetic.n_samples = d.value("n_samples", std::size_t{2000});
      cfg.dataset.synthetic.dim = d.value("dim", std::size_t{20});
      cfg.dataset.synthetic.margin = d.value("margin", 1.5);
      cfg.dataset.synthetic.eval_samples =
          d.value("eval_samples", std::size_t{1000});
      cfg.dataset.path = d.value("path", std::string());
    }
    cfg.participants = j.value("participants", std::uint32_t{1});
    if (j.contains("roster"))
      for (const auto& p : j.at("roster"))
        cfg.roster.push_back(prior_from_json(p));
    // Rosters may omit in_dim for synthetic data; fill from the dataset.
    for (auto& p : cfg.roster)
      if (p.in_dim == 0) p.in_dim = cfg.dataset.synthetic.dim;
    cfg.shared_fraction = j.value("shared_fraction", 0.05);
    cfg.tau = j.value("tau", 2.0);
    if (j.contains("uniformity")) {
      const auto& u = j.at("uniformity");
      const std::string sign = u.value("sign", std::string("negative"));
      if (sign != "negative" && sign != "positive")
        throw ConfigError("uniformity.sign must be 'negative' or 'positive'");
      cfg.uniformity.sign = sign == "negative" ? -1.0 : 1.0;
      cfg.uniformity.normalize = u.value("normalize", true);
    }
    cfg.n_override = j.value("n_override", std::size_t{0});
    cfg.ridge_lambda = j.value("ridge_lambda", -1.0);
    cfg.alignment_strategy = alignment_strategy_from_string(
        j.value("alignment_strategy", std::string("best")));
    if (j.contains("continuous")) {
      const auto& c = j.at("continuous");
      cfg.continuous.rounds = c.value("rounds", std::size_t{1});
      cfg.continuous.upgrade_fraction = c.value("upgrade_fraction", 0.2);
      const std::string ladder = c.value("ladder", std::string("quality"));
      if (ladder != "quality" && ladder != "kind")
        throw ConfigError("continuous.ladder must be 'quality' or 'kind'");
      cfg.continuous.ladder =
          ladder == "quality" ? UpgradeLadder::quality : UpgradeLadder::kind;
      cfg.continuous.quality_step = c.value("quality_step", 0.15);
    }
    if (j.contains("downstream")) {
      const auto& d = j.at("downstream");
      cfg.downstream.hidden = d.value("hidden", std::size_t{64});
      cfg.downstream.epochs = d.value("epochs", std::size_t{30});
      cfg.downstream.batch = d.value("batch", std::size_t{64});
      cfg.downstream.lr = d.value("lr", 0.1);
      const std::string loss = d.value("loss", std::string("mse"));
      if (loss != "mse" && loss != "cosine")
        throw ConfigError("downstream.loss must be 'mse' or 'cosine'");
      cfg.downstream.loss =
          loss == "mse" ? TrainLoss::mse : TrainLoss::cosine;
      cfg.downstream.probe_iters = d.value("probe_iters", std::size_t{300});
      cfg.downstream.probe_lr = d.value("probe_lr", 0.5);
    }
    cfg.loopback_transport = j.value("loopback_transport", false);
    cfg.probe_each_round = j.value("probe_each_round", true);
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return config_from_json(buf.str());
}

}  // namespace coopt
