#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "gpmpc/gp.hpp"
#include "gpmpc/model.hpp"

namespace gpmpc::learner {

/// IS-induced disturbance over the previous sample, recovered from two
/// consecutive state estimates at the intracellular-glucose row:
///   u_kis[k−1] = ([x_k]_i − [Â_d x_{k−1}]_i − [B_d u_{k−1}]_i) / [B^kIS_d]_i.
/// Throws ConfigurationError if [B^kIS_d]_i is zero.
double compute_residual(const StateVector& x_now, const StateVector& x_prev, double u_prev,
                        const model::ModelSet& model);

/// Second-order Butterworth low-pass run forward and backward.
struct LowPassSpec {
  double cutoff_period_samples = 20.0;  // 100 min at ts = 5 min

  /// Minimum length for which the series is filtered at all.
  std::size_t min_length() const;
};

struct FilterResult {
  std::vector<double> values;
  bool filtered = true;  // false: the series was too short and is returned as-is
};

/// Zero-phase low-pass with odd-reflection edge padding and steady-state
/// initial conditions. Output length equals input length.
FilterResult zero_phase_filter(std::span<const double> series, const LowPassSpec& spec = {});

struct TrainingEntry {
  double time = 0.0;
  double raw = 0.0;
  double filtered = 0.0;
};

/// Rolling window of residual samples (default 2.5 days at 5 min).
class TrainingBuffer {
 public:
  explicit TrainingBuffer(std::size_t capacity = 720, double ts = model::kDefaultSampleTime,
                          LowPassSpec filter = {});

  /// Appends a raw sample (evicting the oldest when full) and re-filters the
  /// whole window. Times must advance by exactly ts.
  void push(double t, double raw);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  const TrainingEntry& back() const { return entries_.back(); }
  const std::deque<TrainingEntry>& entries() const { return entries_; }
  bool last_filter_applied() const { return last_filter_applied_; }

  std::vector<double> times() const;
  std::vector<double> raw_values() const;
  std::vector<double> filtered_values() const;

 private:
  std::size_t capacity_;
  double ts_;
  LowPassSpec filter_;
  std::deque<TrainingEntry> entries_;
  bool last_filter_applied_ = false;
};

struct LearnerConfig {
  std::size_t min_points = 10;
  gp::Hyperparams initial;  // θ² = 1, l_p = 1, λ = 1440, l_SE = 1e9
  gp::FitOptions fit;
};

/// Hyperparameters carried between samples plus the last fit diagnostics.
struct GpState {
  gp::Hyperparams hp;
  std::optional<gp::FitResult> last_fit;
  std::size_t fits = 0;
  /// Last posterior; its factorization is reused while the Gram matrix is
  /// unchanged (same hyperparameters, same uniform grid size).
  gp::GpModel posterior;
};

/// Rebuilds the GP posterior on the filtered buffer; refits hyperparameters
/// first when `refit_due`. Returns an inactive model below min_points.
gp::GpModel train_gp(const TrainingBuffer& buffer, GpState& state, bool refit_due,
                     const LearnerConfig& cfg = {});

/// push() followed by train_gp().
gp::GpModel push_and_train(TrainingBuffer& buffer, double t, double raw_residual, GpState& state,
                           bool refit_due, const LearnerConfig& cfg = {});

}  // namespace gpmpc::learner
