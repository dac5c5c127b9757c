#include "gpmpc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "gpmpc/error.hpp"

namespace gpmpc::harness {

namespace {

constexpr double kDay = 1440.0;
constexpr double kMealMinute = 420.0;  // 07:00
constexpr double kMealGrams = 50.0;
constexpr std::size_t kSkippedDay = 4;  // zero-based: the fifth day

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ParameterError(field + ": " + what);
}

void zero_meal_states(Matrix& m) {
  if (m.rows() != kStates || m.cols() != kStates) return;  // left to UkfConfig::validate
  for (int i : {kStomachGlucose, kIntestineGlucose}) {
    m.row(i).setZero();
    m.col(i).setZero();
  }
}

}  // namespace

const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kFasting:
      return "fasting";
    case ScenarioKind::kAnnounced:
      return "announced";
    case ScenarioKind::kSkipped:
      return "skipped";
  }
  return "unknown";
}

const char* to_string(ControllerKind k) {
  return k == ControllerKind::kMpc ? "mpc" : "gp-mpc";
}

ScenarioKind parse_scenario(const std::string& s) {
  if (s == "fasting") return ScenarioKind::kFasting;
  if (s == "announced") return ScenarioKind::kAnnounced;
  if (s == "skipped") return ScenarioKind::kSkipped;
  throw ParameterError("unknown scenario '" + s + "' (expected fasting|announced|skipped)");
}

ControllerKind parse_controller(const std::string& s) {
  if (s == "mpc") return ControllerKind::kMpc;
  if (s == "gp-mpc" || s == "gp_mpc" || s == "gpmpc") return ControllerKind::kGpMpc;
  throw ParameterError("unknown controller '" + s + "' (expected mpc|gp-mpc)");
}

void Scenario::validate() const {
  require(duration_days > 0.0, "scenario.duration_days", "must be positive");
  require(gp_activation_days >= 0.0 && duration_days > gp_activation_days,
          "scenario.gp_activation_days", "must lie in [0, duration_days)");
  const double end = duration_days * kDay;
  for (std::size_t i = 0; i < meals.size(); ++i) {
    const auto& m = meals[i];
    const std::string field = "scenario.meals[" + std::to_string(i) + "]";
    require(m.time >= 0.0 && m.time < end, field + ".time", "outside the simulated span");
    require(m.grams_cho >= 0.0, field + ".grams_cho", "must be non-negative");
  }
  for (std::size_t idx : skip) {
    require(idx < meals.size(), "scenario.skip", "index " + std::to_string(idx) + " out of range");
  }
}

std::vector<plant::MealEvent> Scenario::effective_meals() const {
  std::vector<plant::MealEvent> out;
  for (std::size_t i = 0; i < meals.size(); ++i) {
    if (std::find(skip.begin(), skip.end(), i) == skip.end()) out.push_back(meals[i]);
  }
  return out;
}

Scenario make_scenario(ScenarioKind kind, ControllerKind controller, std::uint64_t seed,
                       double duration_days) {
  Scenario s;
  s.duration_days = duration_days;
  s.name = std::string(to_string(kind)) + "_" + to_string(controller);
  s.controller = controller;
  s.seed = seed;
  if (kind != ScenarioKind::kFasting) {
    for (std::size_t d = 0;; ++d) {
      const double t = kMealMinute + kDay * static_cast<double>(d);
      if (t >= duration_days * kDay) break;
      s.meals.push_back({t, kMealGrams, true});
    }
  }
  if (kind == ScenarioKind::kSkipped && s.meals.size() > kSkippedDay) s.skip.push_back(kSkippedDay);
  return s;
}

void SimulationConfig::validate() const {
  require(ts > 0.0, "ts", "must be positive");
  require(plant.meal_gain >= 0.0, "plant.meal_gain", "must be non-negative");
  require(plant.max_substep > 0.0, "plant.max_substep", "must be positive");
  require(plant.u_max > 0.0, "plant.u_max", "must be positive");
  require(plant.noise_sd >= 0.0, "plant.noise_sd", "must be non-negative");
  require(std::isfinite(plant.i_mi_basal), "plant.i_mi_basal", "must be finite");
  mpc.validate();
  require(mpc.u_max <= plant.u_max, "mpc.u_max", "exceeds the actuator limit plant.u_max");
  require(buffer_capacity >= 2, "learner.buffer_capacity", "must be >= 2");
  require(learner.min_points >= 2, "learner.min_points", "must be >= 2");
  require(filter.cutoff_period_samples > 2.0, "learner.filter_period", "must exceed 2 samples");
  require(refit_every >= 1, "learner.refit_every", "must be >= 1");
  require(ukf_p0 > 0.0, "ukf.p0", "must be positive");
  require(ukf_q_disturbance >= 0.0, "ukf.q_disturbance", "must be non-negative");
  require(ukf_q_floor >= 0.0, "ukf.q_floor", "must be non-negative");
  try {
    learner.initial.validate();
  } catch (const ParameterError& e) {
    throw ParameterError(std::string("learner.initial: ") + e.what());
  }
  try {
    ukf_config(model::discretize_model(ts, mpc.u_basal)).validate();
  } catch (const ParameterError& e) {
    throw ParameterError(std::string("ukf: ") + e.what());
  }
}

estimator::UkfConfig SimulationConfig::ukf_config(const model::ModelSet& model) const {
  estimator::UkfConfig cfg;
  cfg.alpha = ukf_alpha;
  cfg.beta = ukf_beta;
  cfg.kappa = ukf_kappa;
  cfg.r_meas = ukf_r_meas;
  cfg.meal_gain = plant.meal_gain;
  cfg.q_process = ukf_q_process ? *ukf_q_process
                                : estimator::disturbance_process_noise(model, ukf_q_disturbance,
                                                                       ukf_q_floor);
  if (ukf_known_meal_states) zero_meal_states(cfg.q_process);
  return cfg;
}

Matrix SimulationConfig::ukf_initial_covariance() const {
  Matrix p0 = Matrix::Identity(kStates, kStates) * ukf_p0;
  if (ukf_known_meal_states) zero_meal_states(p0);
  return p0;
}

RunResult run_closed_loop(const Scenario& scenario, const SimulationConfig& config,
                          const StepObserver& observer) {
  scenario.validate();
  config.validate();
  const auto wall_start = std::chrono::steady_clock::now();

  const model::ModelSet model = model::discretize_model(config.ts, config.mpc.u_basal);
  const estimator::UkfConfig ukf_cfg = config.ukf_config(model);
  const std::vector<plant::MealEvent> meals = scenario.effective_meals();
  const auto steps = static_cast<std::size_t>(std::llround(scenario.duration_days * kDay / config.ts));
  const double activation = scenario.gp_activation_days * kDay;
  const bool learning_controller = scenario.controller == ControllerKind::kGpMpc;

  RunResult result;
  result.records.reserve(steps);

  estimator::UkfState ukf;
  ukf.mean = config.initial_estimate;
  ukf.cov = config.ukf_initial_covariance();
  plant::PlantState truth;
  truth.x = config.initial_state;

  learner::TrainingBuffer buffer(config.buffer_capacity, config.ts, config.filter);
  learner::GpState gp_state;
  gp_state.hp = config.learner.initial;
  std::size_t samples_since_activation = 0;

  StateVector prev_reference = StateVector::Zero();
  double prev_u_dev = 0.0;
  bool have_prev = false;

  try {
    for (std::size_t k = 0; k < steps; ++k) {
      const double t = static_cast<double>(k) * config.ts;
      truth.t = t;

      StepRecord rec;
      rec.t = t;
      rec.bg_true = truth.bg(model.bg_baseline);
      rec.k_is_true = config.profile.at(t);
      rec.u_kis_true = plant::is_disturbance(t, truth.x, config.profile, config.plant);

      auto rng = plant::measurement_engine(scenario.seed, k);
      rec.bg_meas = plant::measure(truth, config.plant.noise_sd, rng);
      ukf = estimator::ukf_update(ukf, rec.bg_meas, ukf_cfg, model);

      rec.u_kis_raw = std::numeric_limits<double>::quiet_NaN();
      rec.u_kis_filtered = std::numeric_limits<double>::quiet_NaN();
      if (have_prev) {
        const double raw = learner::compute_residual(ukf.mean, prev_reference, prev_u_dev, model);
        buffer.push(t - config.ts, raw);
        rec.u_kis_raw = raw;
        rec.u_kis_filtered = buffer.back().filtered;
      }

      gp::GpModel gp_model;
      if (learning_controller && t >= activation - 1e-9) {
        const bool refit_due =
            samples_since_activation % static_cast<std::size_t>(config.refit_every) == 0;
        const std::size_t fits_before = gp_state.fits;
        gp_model = learner::train_gp(buffer, gp_state, refit_due, config.learner);
        if (gp_state.fits > fits_before && gp_state.last_fit && gp_state.last_fit->warning) {
          ++result.fit_warnings;
        }
        ++samples_since_activation;
      }
      rec.gp_active = gp_model.active();

      const mpc::MpcResult ctrl = mpc::mpc_step(ukf.mean, gp_model, t, config.mpc, model);
      rec.u_applied = ctrl.u_applied;
      rec.u_kis_predicted = ctrl.preview.front();
      rec.prediction_variance = ctrl.preview_variance.front();
      rec.qp_status = ctrl.solution.status;
      rec.kkt_residual = ctrl.solution.kkt_residual;
      rec.active_set = ctrl.solution.active_bounds;
      for (int i = 0; i < kStates; ++i) rec.x_hat[static_cast<std::size_t>(i)] = ukf.mean(i);

      result.records.push_back(rec);
      if (observer) observer(rec);

      double announced = 0.0;
      bool any_announced = false;
      for (const auto& m : meals) {
        if (m.announced && m.time >= t && m.time < t + config.ts) {
          announced += m.grams_cho;
          any_announced = true;
        }
      }
      prev_u_dev = ctrl.u_applied - model.u_basal;
      prev_reference = ukf.mean;
      prev_reference(kIntestineGlucose) += ukf_cfg.meal_gain * announced;
      have_prev = true;

      ukf = estimator::ukf_predict(ukf, prev_u_dev,
                                   any_announced ? std::optional<double>(announced) : std::nullopt,
                                   ukf_cfg, model);
      truth = plant::plant_step(truth, prev_u_dev, meals, config.profile, model, config.plant, k);
    }
  } catch (const Error& e) {
    result.ok = false;
    result.error = e.what();
  }

  result.hyperparameter_fits = gp_state.fits;
  if (gp_state.fits > 0) result.final_hyperparams = gp_state.hp;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return result;
}

ZoneStatistics compute_statistics(std::span<const double> times, std::span<const double> bg,
                                  double from_time) {
  if (times.size() != bg.size()) throw DimensionError("compute_statistics: size mismatch");
  std::vector<double> window;
  double at_0700_sum = 0.0;
  std::size_t at_0700_count = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < from_time - 1e-9) continue;
    window.push_back(bg[i]);
    if (std::abs(std::fmod(times[i], kDay) - kMealMinute) < 1e-9) {
      at_0700_sum += bg[i];
      ++at_0700_count;
    }
  }
  if (window.empty()) throw ParameterError("compute_statistics: no samples at or after from_time");

  ZoneStatistics s;
  s.samples = window.size();
  const double n = static_cast<double>(window.size());
  s.mean_bg = std::accumulate(window.begin(), window.end(), 0.0) / n;
  double ss = 0.0;
  std::size_t below = 0, safe = 0, tight = 0, above = 0;
  for (double v : window) {
    ss += (v - s.mean_bg) * (v - s.mean_bg);
    if (v < 70.0) ++below;
    if (v >= 70.0 && v <= 180.0) ++safe;
    if (v >= 80.0 && v <= 140.0) ++tight;
    if (v > 180.0) ++above;
  }
  s.sd_bg = window.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  s.pct_below_70 = 100.0 * static_cast<double>(below) / n;
  s.pct_safe_70_180 = 100.0 * static_cast<double>(safe) / n;
  s.pct_tight_80_140 = 100.0 * static_cast<double>(tight) / n;
  s.pct_above_180 = 100.0 * static_cast<double>(above) / n;
  s.bg_at_0700 = at_0700_count > 0 ? at_0700_sum / static_cast<double>(at_0700_count)
                                   : std::numeric_limits<double>::quiet_NaN();
  return s;
}

ZoneStatistics compute_statistics(std::span<const StepRecord> records, double from_time) {
  std::vector<double> times;
  std::vector<double> bg;
  times.reserve(records.size());
  bg.reserve(records.size());
  for (const auto& r : records) {
    times.push_back(r.t);
    bg.push_back(r.bg_true);
  }
  return compute_statistics(times, bg, from_time);
}

}  // namespace gpmpc::harness
