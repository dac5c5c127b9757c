#include "gpmpc/app/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include <yaml-cpp/yaml.h>

namespace gpmpc::app {

namespace {

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void reject_unknown(const YAML::Node& node, const std::string& path,
                    const std::set<std::string>& known) {
  if (!node.IsMap()) throw ConfigError(path.empty() ? "<root>" : path, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!known.count(key)) throw ConfigError(join(path, key), "unknown key");
  }
}

template <typename T>
void read(const YAML::Node& node, const std::string& key, const std::string& path, T& out) {
  const YAML::Node v = node[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(join(path, key), "could not parse value '" + YAML::Dump(v) + "'");
  }
}

void read_plant(const YAML::Node& n, plant::PlantConfig& p) {
  const std::string path = "plant";
  reject_unknown(n, path, {"meal_gain", "i_mi_basal", "max_substep", "u_max", "noise_sd"});
  read(n, "meal_gain", path, p.meal_gain);
  read(n, "i_mi_basal", path, p.i_mi_basal);
  read(n, "max_substep", path, p.max_substep);
  read(n, "u_max", path, p.u_max);
  read(n, "noise_sd", path, p.noise_sd);
}

void read_mpc(const YAML::Node& n, mpc::MpcParams& m) {
  const std::string path = "mpc";
  reject_unknown(n, path, {"horizon", "q", "r", "u_max", "u_basal", "terminal", "soft_weight"});
  read(n, "horizon", path, m.horizon);
  read(n, "q", path, m.q);
  read(n, "r", path, m.r);
  read(n, "u_max", path, m.u_max);
  read(n, "u_basal", path, m.u_basal);
  read(n, "soft_weight", path, m.soft_weight);
  if (n["terminal"]) {
    std::string mode;
    read(n, "terminal", path, mode);
    if (mode == "hard") {
      m.terminal = mpc::TerminalMode::kHard;
    } else if (mode == "soft") {
      m.terminal = mpc::TerminalMode::kSoft;
    } else {
      throw ConfigError("mpc.terminal", "expected 'hard' or 'soft', got '" + mode + "'");
    }
  }
}

void read_learner(const YAML::Node& n, harness::SimulationConfig& s) {
  const std::string path = "learner";
  reject_unknown(n, path,
                 {"refit_every", "buffer_capacity", "filter_period", "min_points",
                  "initial_theta_sq", "initial_l_p", "l_se", "lambda"});
  read(n, "refit_every", path, s.refit_every);
  read(n, "buffer_capacity", path, s.buffer_capacity);
  read(n, "filter_period", path, s.filter.cutoff_period_samples);
  read(n, "min_points", path, s.learner.min_points);
  read(n, "initial_theta_sq", path, s.learner.initial.theta_sq);
  read(n, "initial_l_p", path, s.learner.initial.l_p);
  read(n, "l_se", path, s.learner.initial.l_se);
  read(n, "lambda", path, s.learner.initial.lambda);
}

void read_ukf(const YAML::Node& n, harness::SimulationConfig& s) {
  const std::string path = "ukf";
  reject_unknown(n, path,
                 {"alpha", "beta", "kappa", "r_meas", "q_disturbance", "q_floor", "p0",
                  "known_meal_states"});
  read(n, "alpha", path, s.ukf_alpha);
  read(n, "beta", path, s.ukf_beta);
  read(n, "kappa", path, s.ukf_kappa);
  read(n, "r_meas", path, s.ukf_r_meas);
  read(n, "q_disturbance", path, s.ukf_q_disturbance);
  read(n, "q_floor", path, s.ukf_q_floor);
  read(n, "p0", path, s.ukf_p0);
  read(n, "known_meal_states", path, s.ukf_known_meal_states);
}

void read_profile(const YAML::Node& n, harness::SimulationConfig& s) {
  if (!n.IsSequence()) throw ConfigError("is_profile", "expected a list of [minute, value] pairs");
  std::vector<model::IsProfile::Breakpoint> points;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const std::string path = "is_profile[" + std::to_string(i) + "]";
    const YAML::Node p = n[i];
    if (!p.IsSequence() || p.size() != 2) throw ConfigError(path, "expected [minute, value]");
    try {
      points.emplace_back(p[0].as<double>(), p[1].as<double>());
    } catch (const YAML::Exception&) {
      throw ConfigError(path, "could not parse numbers");
    }
  }
  try {
    s.profile = model::IsProfile(std::move(points));
  } catch (const Error& e) {
    throw ConfigError("is_profile", e.what());
  }
}

void emit_pair(YAML::Emitter& out, const char* key, double v) { out << YAML::Key << key << YAML::Value << v; }

}  // namespace

void RunConfig::validate() const {
  if (output_dir.empty()) throw ConfigError("out", "must not be empty");
  try {
    make_scenario(scenario, controller).validate();
  } catch (const ParameterError& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    throw ConfigError(colon == std::string::npos ? "scenario" : msg.substr(0, colon),
                      colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
  try {
    sim.validate();
  } catch (const ParameterError& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    throw ConfigError(colon == std::string::npos ? "config" : msg.substr(0, colon),
                      colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
}

harness::Scenario RunConfig::make_scenario(harness::ScenarioKind kind,
                                           harness::ControllerKind ctrl) const {
  harness::Scenario s = harness::make_scenario(kind, ctrl, seed, duration_days);
  s.gp_activation_days = gp_activation_days;
  return s;
}

RunConfig parse_config(const YAML::Node& node, RunConfig base) {
  RunConfig cfg = std::move(base);
  if (!node || node.IsNull()) return cfg;
  reject_unknown(node, "",
                 {"scenario", "controller", "out", "seed", "duration_days", "gp_activation_days",
                  "plant", "mpc", "learner", "ukf", "is_profile"});
  if (node["scenario"]) {
    std::string s;
    read(node, "scenario", "", s);
    try {
      cfg.scenario = harness::parse_scenario(s);
    } catch (const Error& e) {
      throw ConfigError("scenario", e.what());
    }
  }
  if (node["controller"]) {
    std::string s;
    read(node, "controller", "", s);
    try {
      cfg.controller = harness::parse_controller(s);
    } catch (const Error& e) {
      throw ConfigError("controller", e.what());
    }
  }
  read(node, "out", "", cfg.output_dir);
  read(node, "seed", "", cfg.seed);
  read(node, "duration_days", "", cfg.duration_days);
  read(node, "gp_activation_days", "", cfg.gp_activation_days);
  if (node["plant"]) read_plant(node["plant"], cfg.sim.plant);
  if (node["mpc"]) read_mpc(node["mpc"], cfg.sim.mpc);
  if (node["learner"]) read_learner(node["learner"], cfg.sim);
  if (node["ukf"]) read_ukf(node["ukf"], cfg.sim);
  if (node["is_profile"]) read_profile(node["is_profile"], cfg.sim);
  return cfg;
}

RunConfig parse_config_string(const std::string& text, RunConfig base) {
  YAML::Node node;
  try {
    node = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("<document>", e.what());
  }
  return parse_config(node, std::move(base));
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str(), std::move(base));
}

std::string to_yaml(const RunConfig& cfg) {
  const auto& s = cfg.sim;
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "scenario" << YAML::Value << harness::to_string(cfg.scenario);
  out << YAML::Key << "controller" << YAML::Value << harness::to_string(cfg.controller);
  out << YAML::Key << "out" << YAML::Value << cfg.output_dir;
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;
  emit_pair(out, "duration_days", cfg.duration_days);
  emit_pair(out, "gp_activation_days", cfg.gp_activation_days);

  out << YAML::Key << "plant" << YAML::Value << YAML::BeginMap;
  emit_pair(out, "meal_gain", s.plant.meal_gain);
  emit_pair(out, "i_mi_basal", s.plant.i_mi_basal);
  emit_pair(out, "max_substep", s.plant.max_substep);
  emit_pair(out, "u_max", s.plant.u_max);
  emit_pair(out, "noise_sd", s.plant.noise_sd);
  out << YAML::EndMap;

  out << YAML::Key << "mpc" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "horizon" << YAML::Value << s.mpc.horizon;
  emit_pair(out, "q", s.mpc.q);
  emit_pair(out, "r", s.mpc.r);
  emit_pair(out, "u_max", s.mpc.u_max);
  emit_pair(out, "u_basal", s.mpc.u_basal);
  out << YAML::Key << "terminal" << YAML::Value
      << (s.mpc.terminal == mpc::TerminalMode::kHard ? "hard" : "soft");
  emit_pair(out, "soft_weight", s.mpc.soft_weight);
  out << YAML::EndMap;

  out << YAML::Key << "learner" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "refit_every" << YAML::Value << s.refit_every;
  out << YAML::Key << "buffer_capacity" << YAML::Value << s.buffer_capacity;
  emit_pair(out, "filter_period", s.filter.cutoff_period_samples);
  out << YAML::Key << "min_points" << YAML::Value << s.learner.min_points;
  emit_pair(out, "initial_theta_sq", s.learner.initial.theta_sq);
  emit_pair(out, "initial_l_p", s.learner.initial.l_p);
  emit_pair(out, "l_se", s.learner.initial.l_se);
  emit_pair(out, "lambda", s.learner.initial.lambda);
  out << YAML::EndMap;

  out << YAML::Key << "ukf" << YAML::Value << YAML::BeginMap;
  emit_pair(out, "alpha", s.ukf_alpha);
  emit_pair(out, "beta", s.ukf_beta);
  emit_pair(out, "kappa", s.ukf_kappa);
  emit_pair(out, "r_meas", s.ukf_r_meas);
  emit_pair(out, "q_disturbance", s.ukf_q_disturbance);
  emit_pair(out, "q_floor", s.ukf_q_floor);
  emit_pair(out, "p0", s.ukf_p0);
  out << YAML::Key << "known_meal_states" << YAML::Value << s.ukf_known_meal_states;
  out << YAML::EndMap;

  out << YAML::Key << "is_profile" << YAML::Value << YAML::BeginSeq;
  for (const auto& [minute, value] : s.profile.breakpoints()) {
    out << YAML::Flow << YAML::BeginSeq << minute << value << YAML::EndSeq;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace gpmpc::app
