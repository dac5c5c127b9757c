#pragma once

#include <string>
#include <vector>

#include "gpmpc/error.hpp"
#include "gpmpc/model.hpp"

namespace gpmpc::app {

class CalibrationError : public Error {
 public:
  CalibrationError(const std::string& what, std::string log)
      : Error(what), log_(std::move(log)) {}
  const std::string& log() const noexcept { return log_; }

 private:
  std::string log_;
};

struct MealPeak {
  double peak_bg = 0.0;    // mg/dL, over the 5-min samples
  double peak_time = 0.0;  // min after the meal
};

/// Open-loop response to a single meal at t = 0 under basal insulin and
/// nominal sensitivity, sampled every ts for `horizon` minutes.
MealPeak meal_peak(double meal_gain, double grams = 50.0, double u_basal = model::kBasalInsulin,
                   double horizon = 1440.0);

struct SweepPoint {
  double meal_gain;
  double peak_bg;
};

struct MealGainCalibration {
  double meal_gain = 0.0;
  double peak_bg = 0.0;
  std::vector<SweepPoint> sweep;  // every evaluation, in order
};

/// Finds the meal gain whose 50 g peak equals `target_peak`: a doubling sweep
/// from `start` brackets the target, then bisection narrows it. Throws
/// CalibrationError with the sweep log when no bracket is found.
MealGainCalibration calibrate_meal_gain(double target_peak = 180.0, double grams = 50.0,
                                        double u_basal = model::kBasalInsulin, double start = 1.0,
                                        int max_doublings = 12);

/// YAML fragment with the calibrated plant parameters.
std::string calibration_fragment(double meal_gain, double i_mi_basal);

}  // namespace gpmpc::app
