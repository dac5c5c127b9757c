#pragma once

#include <utility>
#include <vector>

#include "gpmpc/numerics.hpp"

namespace gpmpc {

inline constexpr int kStates = 12;
using StateVector = Eigen::Matrix<double, kStates, 1>;

/// Zero-based positions of the physiological states of the linear minipig
/// model (deviation coordinates around BG = 110 mg/dL).
enum StateIndex : int {
  kPlasmaGlucose = 0,            // mg/dL
  kLiverGlucose = 1,             // mg/dL
  kMuscleVascularGlucose = 2,    // mg/dL
  kMuscleIntracellularGlucose = 3,  // mg/dL, the only k_IS-dependent row
  kInterstitialInsulin = 4,      // I_MI, mU/L
  kLiverGlucagon = 5,            // normalized
  kGlucagonReduction = 6,        // normalized
  kLiverInsulin = 7,             // normalized
  kInactiveSubcutaneousInsulin = 8,  // mU/min
  kActiveSubcutaneousInsulin = 9,    // mU/min
  kStomachGlucose = 10,          // mg/min
  kIntestineGlucose = 11,        // mg/min, receives the oral glucose impulse
};

namespace model {

inline constexpr double kBgBaseline = 110.0;   // mg/dL
inline constexpr double kBasalInsulin = 0.169;  // U per 5-min sample
inline constexpr double kDefaultSampleTime = 5.0;  // min
inline constexpr double kNominalSensitivity = 1.0;  // mg/(min·mU)
inline constexpr double kSensitivityCoefficient = -0.1;

/// Row of the k_IS-dependent entry; the disturbance residual is read here.
inline constexpr int kDisturbanceRow = kMuscleIntracellularGlucose;

/// A(k_IS) of the 12-state linear model. Only entry (row 4, col 5) depends on
/// k_is. Throws ParameterError outside [0.1, 3].
Matrix build_continuous_system(double k_is);
/// B: subcutaneous insulin input, U per sample.
Matrix input_matrix();
/// C: plasma glucose selector.
Matrix output_matrix();

struct SplitSystem {
  Matrix a_hat;  // A at nominal k_IS = 1
  Matrix b_kis;  // 12x1, −0.1 at the intracellular-glucose row
};

/// A(k)x = Â x + b_kis·(k − 1)·x₅.
SplitSystem split_system();

struct ModelSet {
  Matrix a_hat;
  Matrix b;
  Matrix b_kis;
  Matrix c;
  Matrix a_hat_d;
  Matrix b_d;
  Matrix b_kis_d;
  double ts = kDefaultSampleTime;
  double bg_baseline = kBgBaseline;
  double u_basal = kBasalInsulin;

  /// One nominal discrete step x⁺ = Â_d x + B_d u + B^kIS_d d.
  StateVector step(const StateVector& x, double u_dev, double u_kis = 0.0) const;
};

/// Continuous matrices plus their joint ZOH discretization at `ts`.
ModelSet discretize_model(double ts = kDefaultSampleTime, double u_basal = kBasalInsulin);

/// Absolute interstitial insulin I_MI at the steady state of the insulin chain
/// (inactive → active subcutaneous → interstitial) under constant `u_basal`.
double basal_interstitial_insulin(double u_basal = kBasalInsulin);

/// 1440-minute periodic, piecewise-linear insulin-sensitivity profile.
class IsProfile {
 public:
  using Breakpoint = std::pair<double, double>;  // (minute of day, k_IS)

  static constexpr double kPeriod = 1440.0;
  static constexpr double kMinValue = 0.55;
  static constexpr double kMaxValue = 1.4;

  /// Breakpoints must have strictly increasing minutes in [0, 1440) and values
  /// in [0.55, 1.4]. The last point connects to the first one a period later.
  explicit IsProfile(std::vector<Breakpoint> breakpoints);

  static IsProfile circadian_default();
  static IsProfile constant(double k_is);

  double at(double t_minutes) const;
  const std::vector<Breakpoint>& breakpoints() const { return breakpoints_; }
  bool has_nominal_crossing() const;

 private:
  std::vector<Breakpoint> breakpoints_;
};

/// Free-function form of IsProfile::at.
inline double is_at(const IsProfile& profile, double t) { return profile.at(t); }

}  // namespace model
}  // namespace gpmpc
