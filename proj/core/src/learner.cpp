#include "gpmpc/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gpmpc/error.hpp"

namespace gpmpc::learner {

namespace {

struct Biquad {
  double b0, b1, b2, a1, a2;
};

Biquad butterworth_lowpass(double cutoff_period_samples) {
  // Bilinear transform with frequency prewarping; Wn relative to Nyquist.
  const double wn = 2.0 / cutoff_period_samples;
  const double k = std::tan(std::numbers::pi * wn / 2.0);
  const double k2 = k * k;
  const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k2);
  Biquad f;
  f.b0 = k2 * norm;
  f.b1 = 2.0 * f.b0;
  f.b2 = f.b0;
  f.a1 = 2.0 * (k2 - 1.0) * norm;
  f.a2 = (1.0 - std::numbers::sqrt2 * k + k2) * norm;
  return f;
}

// Transposed direct form II, starting from the steady state for a constant
// input equal to the first sample.
void run(const Biquad& f, std::vector<double>& x) {
  if (x.empty()) return;
  double z1 = (1.0 - f.b0) * x.front();
  double z2 = (f.b2 - f.a2) * x.front();
  for (double& v : x) {
    const double in = v;
    const double out = f.b0 * in + z1;
    z1 = f.b1 * in - f.a1 * out + z2;
    z2 = f.b2 * in - f.a2 * out;
    v = out;
  }
}

}  // namespace

double compute_residual(const StateVector& x_now, const StateVector& x_prev, double u_prev,
                        const model::ModelSet& model) {
  constexpr int row = model::kDisturbanceRow;
  const double divisor = model.b_kis_d(row, 0);
  if (divisor == 0.0 || !std::isfinite(divisor)) {
    throw ConfigurationError("compute_residual: B^kIS_d has no entry at the disturbance row");
  }
  const double predicted = model.a_hat_d.row(row).dot(x_prev) + model.b_d(row, 0) * u_prev;
  return (x_now(row) - predicted) / divisor;
}

std::size_t LowPassSpec::min_length() const {
  return static_cast<std::size_t>(std::ceil(3.0 * cutoff_period_samples));
}

FilterResult zero_phase_filter(std::span<const double> series, const LowPassSpec& spec) {
  FilterResult result;
  result.values.assign(series.begin(), series.end());
  if (series.size() < spec.min_length()) {
    result.filtered = false;
    return result;
  }

  const Biquad f = butterworth_lowpass(spec.cutoff_period_samples);
  const std::size_t n = series.size();
  const std::size_t pad = std::min(spec.min_length(), n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t k = pad; k >= 1; --k) ext.push_back(2.0 * series[0] - series[k]);
  ext.insert(ext.end(), series.begin(), series.end());
  for (std::size_t k = 1; k <= pad; ++k) ext.push_back(2.0 * series[n - 1] - series[n - 1 - k]);

  run(f, ext);
  std::reverse(ext.begin(), ext.end());
  run(f, ext);
  std::reverse(ext.begin(), ext.end());

  std::copy(ext.begin() + static_cast<std::ptrdiff_t>(pad),
            ext.begin() + static_cast<std::ptrdiff_t>(pad + n), result.values.begin());
  return result;
}

TrainingBuffer::TrainingBuffer(std::size_t capacity, double ts, LowPassSpec filter)
    : capacity_(capacity), ts_(ts), filter_(filter) {
  if (capacity_ < 2) throw ParameterError("TrainingBuffer: capacity must be >= 2");
  if (!(ts_ > 0.0)) throw ParameterError("TrainingBuffer: ts must be positive");
}

void TrainingBuffer::push(double t, double raw) {
  if (!entries_.empty()) {
    const double expected = entries_.back().time + ts_;
    if (std::abs(t - expected) > 1e-9 * std::max(1.0, std::abs(expected))) {
      throw ParameterError("TrainingBuffer: time " + std::to_string(t) + " does not follow " +
                           std::to_string(entries_.back().time) + " by one sample");
    }
  }
  if (entries_.size() == capacity_) entries_.pop_front();
  entries_.push_back({t, raw, raw});

  const std::vector<double> raws = raw_values();
  const FilterResult fr = zero_phase_filter(raws, filter_);
  last_filter_applied_ = fr.filtered;
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i].filtered = fr.values[i];
}

std::vector<double> TrainingBuffer::times() const {
  std::vector<double> v;
  v.reserve(entries_.size());
  for (const auto& e : entries_) v.push_back(e.time);
  return v;
}

std::vector<double> TrainingBuffer::raw_values() const {
  std::vector<double> v;
  v.reserve(entries_.size());
  for (const auto& e : entries_) v.push_back(e.raw);
  return v;
}

std::vector<double> TrainingBuffer::filtered_values() const {
  std::vector<double> v;
  v.reserve(entries_.size());
  for (const auto& e : entries_) v.push_back(e.filtered);
  return v;
}

gp::GpModel train_gp(const TrainingBuffer& buffer, GpState& state, bool refit_due,
                     const LearnerConfig& cfg) {
  if (buffer.size() < std::max<std::size_t>(cfg.min_points, 2)) return {};

  std::vector<double> times = buffer.times();
  std::vector<double> values = buffer.filtered_values();
  bool hp_changed = false;
  if (refit_due && buffer.size() >= 10) {
    gp::FitResult fit = gp::fit_hyperparams(times, values, cfg.initial, cfg.fit);
    hp_changed = fit.hp.theta_sq != state.hp.theta_sq || fit.hp.l_p != state.hp.l_p ||
                 fit.hp.l_se != state.hp.l_se || fit.hp.lambda != state.hp.lambda;
    state.hp = fit.hp;
    state.last_fit = std::move(fit);
    ++state.fits;
  }
  if (state.posterior.active() && !hp_changed) {
    state.posterior = state.posterior.with_data(std::move(times), std::move(values));
  } else {
    state.posterior =
        gp::GpModel::train(std::move(times), std::move(values), state.hp, cfg.fit.jitter);
  }
  return state.posterior;
}

gp::GpModel push_and_train(TrainingBuffer& buffer, double t, double raw_residual, GpState& state,
                           bool refit_due, const LearnerConfig& cfg) {
  buffer.push(t, raw_residual);
  return train_gp(buffer, state, refit_due, cfg);
}

}  // namespace gpmpc::learner
