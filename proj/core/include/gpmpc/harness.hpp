#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gpmpc/estimator.hpp"
#include "gpmpc/learner.hpp"
#include "gpmpc/model.hpp"
#include "gpmpc/mpc.hpp"
#include "gpmpc/plant.hpp"

namespace gpmpc::harness {

enum class ScenarioKind { kFasting, kAnnounced, kSkipped };
enum class ControllerKind { kMpc, kGpMpc };

const char* to_string(ScenarioKind k);
const char* to_string(ControllerKind k);
/// Accepts "fasting" | "announced" | "skipped"; throws ParameterError otherwise.
ScenarioKind parse_scenario(const std::string& s);
/// Accepts "mpc" | "gp-mpc" (or "gp_mpc"); throws ParameterError otherwise.
ControllerKind parse_controller(const std::string& s);

struct Scenario {
  std::string name;
  double duration_days = 7.0;
  double gp_activation_days = 2.5;
  std::vector<plant::MealEvent> meals;
  std::vector<std::size_t> skip;  // indices into `meals` removed from plant and estimator
  ControllerKind controller = ControllerKind::kGpMpc;
  std::uint64_t seed = 0;

  void validate() const;
  /// Meals minus the skipped ones.
  std::vector<plant::MealEvent> effective_meals() const;
};

/// fasting: no meals; announced: 50 g at 07:00 on each day; skipped: announced
/// with the day-5 meal removed.
Scenario make_scenario(ScenarioKind kind, ControllerKind controller, std::uint64_t seed = 0,
                       double duration_days = 7.0);

struct SimulationConfig {
  model::IsProfile profile = model::IsProfile::circadian_default();
  plant::PlantConfig plant;
  mpc::MpcParams mpc;
  learner::LearnerConfig learner;
  learner::LowPassSpec filter;
  std::size_t buffer_capacity = 720;
  double ts = model::kDefaultSampleTime;
  /// Hyperparameter refit period in samples, counted from GP activation.
  int refit_every = 72;

  // Estimator tuning; the meal gain is always taken from `plant`.
  double ukf_alpha = 1e-3;
  double ukf_beta = 2.0;
  double ukf_kappa = 0.0;
  double ukf_r_meas = 1.0;
  double ukf_q_disturbance = 1e4;
  double ukf_q_floor = 1e-6;
  double ukf_p0 = 1.0;  // initial covariance = p0·I
  /// Meals reach the plant only when announced, so the two GI states are
  /// known exactly: their rows and columns of P0 and Q are zeroed.
  bool ukf_known_meal_states = true;
  /// Overrides the tuned process noise when set (12×12).
  std::optional<Matrix> ukf_q_process;

  StateVector initial_state = StateVector::Zero();     // plant, deviation coordinates
  StateVector initial_estimate = StateVector::Zero();  // UKF mean

  /// Throws ParameterError naming the offending field.
  void validate() const;
  estimator::UkfConfig ukf_config(const model::ModelSet& model) const;
  Matrix ukf_initial_covariance() const;
};

struct StepRecord {
  double t = 0.0;
  double bg_true = 0.0;
  double bg_meas = 0.0;
  double u_applied = 0.0;
  double k_is_true = 1.0;
  double u_kis_true = 0.0;       // plant-side disturbance (k_IS − 1)(x₅ + I_MI,basal)
  double u_kis_raw = 0.0;        // residual of the previous interval (NaN at t = 0)
  double u_kis_filtered = 0.0;   // filtered value of the same interval
  double u_kis_predicted = 0.0;  // preview applied at t
  double prediction_variance = 0.0;
  std::array<double, kStates> x_hat{};
  qp::QpStatus qp_status = qp::QpStatus::kOptimal;
  double kkt_residual = 0.0;
  int active_set = 0;
  bool gp_active = false;
};

struct RunResult {
  std::vector<StepRecord> records;
  bool ok = true;
  std::string error;  // set when the run aborted early
  std::size_t hyperparameter_fits = 0;
  std::size_t fit_warnings = 0;
  std::optional<gp::Hyperparams> final_hyperparams;
  double wall_seconds = 0.0;
};

/// Per-step hook, e.g. for progress reporting. Called after each record.
using StepObserver = std::function<void(const StepRecord&)>;

/// Closed loop per sample: measure → UKF update → residual/learner → GP
/// preview → MPC → UKF predict → plant step. Module errors stop the run and
/// are reported through RunResult::ok/error with the records so far.
RunResult run_closed_loop(const Scenario& scenario, const SimulationConfig& config = {},
                          const StepObserver& observer = {});

struct ZoneStatistics {
  double mean_bg = 0.0;
  double sd_bg = 0.0;
  double pct_below_70 = 0.0;
  double pct_safe_70_180 = 0.0;
  double pct_tight_80_140 = 0.0;
  double pct_above_180 = 0.0;
  double bg_at_0700 = 0.0;  // NaN when no 07:00 sample lies in the window
  std::size_t samples = 0;
};

inline constexpr double kDefaultStatisticsStart = 2.5 * 1440.0;

/// Statistics of bg_true over records with t ≥ from_time. Throws
/// ParameterError when no record qualifies.
ZoneStatistics compute_statistics(std::span<const StepRecord> records,
                                  double from_time = kDefaultStatisticsStart);

/// Same, from parallel time/BG arrays.
ZoneStatistics compute_statistics(std::span<const double> times, std::span<const double> bg,
                                  double from_time = kDefaultStatisticsStart);

}  // namespace gpmpc::harness
