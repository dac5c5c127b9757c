#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "gpmpc/model.hpp"

namespace gpmpc::plant {

/// State-12 impulse per gram of CHO, calibrated so that a 50 g meal under basal
/// insulin peaks at 180 mg/dL (see `gpmpc calibrate`).
inline constexpr double kDefaultMealGain = 26.7604;

struct PlantConfig {
  double meal_gain = kDefaultMealGain;
  /// Absolute basal interstitial insulin that the circadian k_IS multiplies.
  double i_mi_basal = model::basal_interstitial_insulin();
  double max_substep = 0.5;  // min
  double u_max = 0.5;        // U per sample, actuator limit
  double noise_sd = 0.0;     // mg/dL
};

struct MealEvent {
  double time = 0.0;  // min since simulation start
  double grams_cho = 0.0;
  bool announced = true;
};

struct PlantState {
  StateVector x = StateVector::Zero();
  double t = 0.0;

  double bg(double baseline = model::kBgBaseline) const { return baseline + x(kPlasmaGlucose); }
};

/// Equivalent IS-induced input of the plant at time t: (k_IS(t) − 1)·(x₅ + I_MI,basal).
double is_disturbance(double t, const StateVector& x, const model::IsProfile& profile,
                      const PlantConfig& cfg);

/// Advances the truth plant by one sample with RK4 sub-steps and a held insulin
/// input. Meals scheduled in [t, t + ts) are injected into the intestine state at
/// their own instant. `step_index` only labels divergence errors.
PlantState plant_step(const PlantState& state, double u_dev, std::span<const MealEvent> meals,
                      const model::IsProfile& profile, const model::ModelSet& model,
                      const PlantConfig& cfg, std::size_t step_index = 0);

/// Noise stream for one sample, keyed only by (seed, step).
std::mt19937_64 measurement_engine(std::uint64_t seed, std::uint64_t step);

/// Blood glucose reading 110 + C·x + N(0, noise_sd²).
double measure(const PlantState& state, double noise_sd, std::mt19937_64& rng);

}  // namespace gpmpc::plant
