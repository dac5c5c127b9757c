#pragma once

#include <memory>
#include <span>
#include <vector>

#include "gpmpc/numerics.hpp"

namespace gpmpc::gp {

/// Kernel hyperparameters. During fitting only theta_sq and l_p move; the
/// decay length l_se and the period lambda stay fixed.
struct Hyperparams {
  double theta_sq = 1.0;  // variance, (disturbance unit)²
  double l_se = 1e9;      // min
  double l_p = 1.0;       // dimensionless
  double lambda = 1440.0;  // min

  void validate() const;
};

/// Diagonal jitter schedule, relative to theta_sq: start, grow ×10 until max.
struct JitterPolicy {
  double initial = 1e-6;
  double growth = 10.0;
  double max = 1e-2;
};

double kernel_se(double t, double t2, double l_se);
double kernel_periodic(double t, double t2, double l_p, double lambda);
double kernel_combined(double t, double t2, const Hyperparams& hp);

/// K(times, times) without jitter. Uniformly spaced inputs are filled from a
/// single column since the kernel is stationary.
Matrix gram_matrix(std::span<const double> times, const Hyperparams& hp);

/// True when consecutive differences are equal to within 1e-9 relative.
bool uniformly_spaced(std::span<const double> times);

/// Gaussian log marginal likelihood with K + jitter·I, evaluated through a
/// dense Cholesky factorization. `jitter < 0` selects the default
/// (policy.initial·θ²). On a failed factorization the jitter grows by
/// policy.growth up to policy.max·θ², then GpFailure is thrown.
double log_marginal_likelihood(std::span<const double> times, std::span<const double> values,
                               const Hyperparams& hp, double jitter = -1.0,
                               const JitterPolicy& policy = {});

/// Same quantity for uniformly spaced inputs through the Levinson–Durbin
/// recursion on the Toeplitz Gram matrix, O(n²).
double log_marginal_likelihood_toeplitz(double spacing, std::span<const double> values,
                                        const Hyperparams& hp, double jitter = -1.0,
                                        const JitterPolicy& policy = {});

struct FitOptions {
  double theta_sq_min = 1e-6;
  double theta_sq_max = 1e6;
  double l_p_min = 1e-2;
  double l_p_max = 1e2;
  int max_evaluations_per_restart = 200;
  JitterPolicy jitter;
};

struct FitResult {
  Hyperparams hp;
  double log_likelihood = 0.0;
  double initial_log_likelihood = 0.0;
  int evaluations = 0;
  /// Set when no restart improved on the initial hyperparameters; `hp` is
  /// then the initial value.
  bool warning = false;
};

/// Maximizes the log marginal likelihood over (θ², l_p) in log space with a
/// Nelder–Mead simplex restarted from init, init×10 and init×0.1.
/// Requires at least 10 points.
FitResult fit_hyperparams(std::span<const double> times, std::span<const double> values,
                          const Hyperparams& init, const FitOptions& opts = {});

struct Prediction {
  std::vector<double> means;
  std::vector<double> variances;
};

/// GP posterior over a fixed training set. Immutable once built.
class GpModel {
 public:
  /// An inactive model predicts zero mean and prior variance.
  GpModel() = default;

  static GpModel train(std::vector<double> times, std::vector<double> values,
                       const Hyperparams& hp, const JitterPolicy& policy = {});

  /// Same hyperparameters, new data. When both input grids are uniform with
  /// equal spacing and size, the Gram matrix is unchanged and the existing
  /// factorization is reused.
  GpModel with_data(std::vector<double> times, std::vector<double> values) const;

  bool active() const { return active_; }
  const Hyperparams& hyperparams() const { return hp_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& values() const { return values_; }
  const numerics::CholeskyFactor& factor() const { return *chol_; }
  const Vector& alpha() const { return alpha_; }
  double jitter() const { return jitter_; }

  Prediction predict(std::span<const double> query_times) const;

 private:
  bool active_ = false;
  Hyperparams hp_;
  std::vector<double> times_;
  std::vector<double> values_;
  std::shared_ptr<const numerics::CholeskyFactor> chol_ =
      std::make_shared<const numerics::CholeskyFactor>();
  Vector alpha_;
  double jitter_ = 0.0;
  JitterPolicy policy_;
};

}  // namespace gpmpc::gp
