#include "gpmpc/app/calibrate.hpp"

#include <cmath>
#include <cstdio>

#include <yaml-cpp/yaml.h>

#include "gpmpc/plant.hpp"

namespace gpmpc::app {

MealPeak meal_peak(double meal_gain, double grams, double u_basal, double horizon) {
  const model::ModelSet model = model::discretize_model(model::kDefaultSampleTime, u_basal);
  const model::IsProfile profile = model::IsProfile::constant(model::kNominalSensitivity);
  plant::PlantConfig cfg;
  cfg.meal_gain = meal_gain;
  cfg.i_mi_basal = model::basal_interstitial_insulin(u_basal);
  const plant::MealEvent meal{0.0, grams, true};

  plant::PlantState s;
  MealPeak best{s.bg(), 0.0};
  const auto steps = static_cast<std::size_t>(std::llround(horizon / model.ts));
  for (std::size_t k = 0; k < steps; ++k) {
    s = plant::plant_step(s, 0.0, std::span<const plant::MealEvent>(&meal, 1), profile, model, cfg,
                          k);
    if (s.bg() > best.peak_bg) best = {s.bg(), s.t};
  }
  return best;
}

MealGainCalibration calibrate_meal_gain(double target_peak, double grams, double u_basal,
                                        double start, int max_doublings) {
  MealGainCalibration cal;
  auto eval = [&](double gain) {
    const double peak = meal_peak(gain, grams, u_basal).peak_bg;
    cal.sweep.push_back({gain, peak});
    return peak;
  };

  double lo = 0.0;
  double hi = start;
  bool bracketed = false;
  for (int i = 0; i <= max_doublings; ++i) {
    if (eval(hi) >= target_peak) {
      bracketed = true;
      break;
    }
    lo = hi;
    hi *= 2.0;
  }
  if (!bracketed) {
    std::string log;
    char line[96];
    for (const auto& p : cal.sweep) {
      std::snprintf(line, sizeof line, "  meal_gain %.6g -> peak %.6g mg/dL\n", p.meal_gain,
                    p.peak_bg);
      log += line;
    }
    throw CalibrationError("meal_gain sweep did not bracket the target peak", log);
  }

  for (int i = 0; i < 60 && hi - lo > 1e-9 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (eval(mid) >= target_peak ? hi : lo) = mid;
  }
  cal.meal_gain = 0.5 * (lo + hi);
  cal.peak_bg = eval(cal.meal_gain);
  return cal;
}

std::string calibration_fragment(double meal_gain, double i_mi_basal) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap << YAML::Key << "plant" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "meal_gain" << YAML::Value << meal_gain;
  out << YAML::Key << "i_mi_basal" << YAML::Value << i_mi_basal;
  out << YAML::EndMap << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace gpmpc::app
