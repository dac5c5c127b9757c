#include "gpmpc/plant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gpmpc/error.hpp"

namespace gpmpc::plant {

namespace {

constexpr double kInputTolerance = 1e-12;
constexpr double kBgLower = 0.0;
constexpr double kBgUpper = 1000.0;

struct Dynamics {
  const model::ModelSet& model;
  const model::IsProfile& profile;
  const PlantConfig& cfg;
  double u_dev;

  StateVector operator()(double t, const StateVector& x) const {
    StateVector dx = model.a_hat * x;
    dx += model.b.col(0) * u_dev;
    dx += model.b_kis.col(0) * is_disturbance(t, x, profile, cfg);
    return dx;
  }
};

void integrate(StateVector& x, double t0, double t1, const Dynamics& f, double max_substep) {
  const double span = t1 - t0;
  if (span <= 0.0) return;
  const int n = std::max(1, static_cast<int>(std::ceil(span / max_substep - 1e-12)));
  const double h = span / n;
  for (int i = 0; i < n; ++i) {
    const double t = t0 + i * h;
    const StateVector k1 = f(t, x);
    const StateVector k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
    const StateVector k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
    const StateVector k4 = f(t + h, x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
}

}  // namespace

double is_disturbance(double t, const StateVector& x, const model::IsProfile& profile,
                      const PlantConfig& cfg) {
  return (profile.at(t) - model::kNominalSensitivity) *
         (x(kInterstitialInsulin) + cfg.i_mi_basal);
}

PlantState plant_step(const PlantState& state, double u_dev, std::span<const MealEvent> meals,
                      const model::IsProfile& profile, const model::ModelSet& model,
                      const PlantConfig& cfg, std::size_t step_index) {
  const double ts = model.ts;
  const double u_abs = u_dev + model.u_basal;
  if (u_abs < -kInputTolerance || u_abs > cfg.u_max + kInputTolerance) {
    throw ParameterError("plant_step: absolute insulin " + std::to_string(u_abs) +
                         " outside [0, " + std::to_string(cfg.u_max) + "]");
  }

  std::vector<MealEvent> due;
  for (const auto& m : meals) {
    if (m.time >= state.t && m.time < state.t + ts) due.push_back(m);
  }
  std::stable_sort(due.begin(), due.end(),
                   [](const MealEvent& a, const MealEvent& b) { return a.time < b.time; });

  const Dynamics f{model, profile, cfg, u_dev};
  PlantState next = state;
  double t = state.t;
  for (const auto& m : due) {
    integrate(next.x, t, m.time, f, cfg.max_substep);
    next.x(kIntestineGlucose) += cfg.meal_gain * m.grams_cho;
    t = m.time;
  }
  integrate(next.x, t, state.t + ts, f, cfg.max_substep);
  next.t = state.t + ts;

  const double bg = next.bg(model.bg_baseline);
  if (!next.x.allFinite() || !(bg > kBgLower && bg < kBgUpper)) {
    throw SimulationDiverged(step_index, "plant diverged at step " + std::to_string(step_index) +
                                             " (BG=" + std::to_string(bg) + " mg/dL)");
  }
  return next;
}

std::mt19937_64 measurement_engine(std::uint64_t seed, std::uint64_t step) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32)};
  return std::mt19937_64(seq);
}

double measure(const PlantState& state, double noise_sd, std::mt19937_64& rng) {
  if (noise_sd < 0.0) throw ParameterError("measure: noise_sd must be non-negative");
  double y = state.bg();
  if (noise_sd > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sd);
    y += noise(rng);
  }
  return y;
}

}  // namespace gpmpc::plant
