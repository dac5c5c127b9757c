#include "gpmpc/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gpmpc/error.hpp"

namespace gpmpc::model {

namespace {

// Zero-based (row, col, value) of the constant appendix entries.
struct Entry {
  int row;
  int col;
  double value;
};

constexpr Entry kAppendixEntries[] = {
    {0, 0, -1.14},    {0, 1, 0.494},    {0, 2, 0.647},     {0, 10, 0.0178},
    {1, 0, 3.68},     {1, 1, -4.56},    {1, 4, -0.018},    {1, 5, 86.5},
    {1, 6, -96.8},    {1, 7, 59.3},     {1, 9, -0.073},
    {2, 0, 2.01},     {2, 2, -3.3},     {2, 3, 1.3},
    {3, 2, 0.2},      {3, 3, -0.2},
    {4, 4, -0.0697},  {4, 9, 0.0973},
    {5, 0, -0.0018},  {5, 4, -6.7e-4},  {5, 5, -0.371},    {5, 9, -0.00272},
    {6, 5, 0.00687},  {6, 6, -0.0154},
    {7, 4, -2.08e-4}, {7, 7, -0.04},    {7, 9, -8.42e-4},
    {8, 8, -0.0166},
    {9, 8, 0.015},    {9, 9, -0.015},
    {10, 10, -0.027}, {10, 11, 0.027},
    {11, 11, -0.017},
};

}  // namespace

Matrix build_continuous_system(double k_is) {
  if (!(k_is >= 0.1 && k_is <= 3.0)) {
    throw ParameterError("build_continuous_system: k_is=" + std::to_string(k_is) +
                         " outside [0.1, 3]");
  }
  Matrix a = Matrix::Zero(kStates, kStates);
  for (const auto& e : kAppendixEntries) a(e.row, e.col) = e.value;
  a(kMuscleIntracellularGlucose, kInterstitialInsulin) = kSensitivityCoefficient * k_is;
  return a;
}

Matrix input_matrix() {
  Matrix b = Matrix::Zero(kStates, 1);
  b(kInactiveSubcutaneousInsulin, 0) = 2.23;
  b(kActiveSubcutaneousInsulin, 0) = 0.99;
  return b;
}

Matrix output_matrix() {
  Matrix c = Matrix::Zero(1, kStates);
  c(0, kPlasmaGlucose) = 1.0;
  return c;
}

SplitSystem split_system() {
  SplitSystem s;
  s.a_hat = build_continuous_system(kNominalSensitivity);
  s.b_kis = Matrix::Zero(kStates, 1);
  s.b_kis(kDisturbanceRow, 0) = kSensitivityCoefficient;
  return s;
}

StateVector ModelSet::step(const StateVector& x, double u_dev, double u_kis) const {
  return a_hat_d * x + b_d.col(0) * u_dev + b_kis_d.col(0) * u_kis;
}

ModelSet discretize_model(double ts, double u_basal) {
  if (!(ts > 0.0)) throw ParameterError("discretize_model: ts must be positive");
  ModelSet m;
  const SplitSystem split = split_system();
  m.a_hat = split.a_hat;
  m.b = input_matrix();
  m.b_kis = split.b_kis;
  m.c = output_matrix();
  m.ts = ts;
  m.u_basal = u_basal;

  Matrix inputs(kStates, 2);
  inputs << m.b, m.b_kis;
  const numerics::Discretized d = numerics::zoh_discretize(m.a_hat, inputs, ts);
  m.a_hat_d = d.a_d;
  m.b_d = d.inputs_d.col(0);
  m.b_kis_d = d.inputs_d.col(1);
  return m;
}

double basal_interstitial_insulin(double u_basal) {
  // Rows 9, 10 and 5 of the nominal system form a closed chain driven by u.
  constexpr int chain[] = {kInactiveSubcutaneousInsulin, kActiveSubcutaneousInsulin,
                           kInterstitialInsulin};
  const Matrix a = build_continuous_system(kNominalSensitivity);
  const Matrix b = input_matrix();
  Matrix sub(3, 3);
  Matrix rhs(3, 1);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) sub(i, j) = a(chain[i], chain[j]);
    rhs(i, 0) = -b(chain[i], 0) * u_basal;
  }
  const Matrix x = numerics::solve_linear(sub, rhs);
  return x(2, 0);
}

IsProfile::IsProfile(std::vector<Breakpoint> breakpoints) : breakpoints_(std::move(breakpoints)) {
  if (breakpoints_.empty()) throw ParameterError("IsProfile: at least one breakpoint required");
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    const auto [minute, value] = breakpoints_[i];
    if (!(minute >= 0.0 && minute < kPeriod)) {
      throw ParameterError("IsProfile: breakpoint minute " + std::to_string(minute) +
                           " outside [0, 1440)");
    }
    if (!(value >= kMinValue - 1e-12 && value <= kMaxValue + 1e-12)) {
      throw ParameterError("IsProfile: value " + std::to_string(value) +
                           " outside [0.55, 1.4]");
    }
    if (i > 0 && !(minute > breakpoints_[i - 1].first)) {
      throw ParameterError("IsProfile: breakpoint minutes must be strictly increasing");
    }
  }
}

IsProfile IsProfile::circadian_default() {
  return IsProfile({{0.0, 1.00},
                    {240.0, 0.60},
                    {420.0, 0.55},
                    {600.0, 0.55},
                    {780.0, 0.70},
                    {960.0, 0.85},
                    {1140.0, 1.00},
                    {1320.0, 1.40}});
}

IsProfile IsProfile::constant(double k_is) { return IsProfile({{0.0, k_is}}); }

double IsProfile::at(double t) const {
  if (breakpoints_.size() == 1) return breakpoints_.front().second;
  double tau = std::fmod(t, kPeriod);
  if (tau < 0.0) tau += kPeriod;

  const auto upper = std::upper_bound(
      breakpoints_.begin(), breakpoints_.end(), tau,
      [](double v, const Breakpoint& bp) { return v < bp.first; });

  Breakpoint lo;
  Breakpoint hi;
  if (upper == breakpoints_.begin()) {
    lo = {breakpoints_.back().first - kPeriod, breakpoints_.back().second};
    hi = breakpoints_.front();
  } else if (upper == breakpoints_.end()) {
    lo = breakpoints_.back();
    hi = {breakpoints_.front().first + kPeriod, breakpoints_.front().second};
  } else {
    lo = *(upper - 1);
    hi = *upper;
  }
  const double w = (tau - lo.first) / (hi.first - lo.first);
  return lo.second + w * (hi.second - lo.second);
}

bool IsProfile::has_nominal_crossing() const {
  const auto n = breakpoints_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = breakpoints_[i].second - kNominalSensitivity;
    const double b = breakpoints_[(i + 1) % n].second - kNominalSensitivity;
    if (a == 0.0 || a * b < 0.0) return true;
  }
  return false;
}

}  // namespace gpmpc::model
