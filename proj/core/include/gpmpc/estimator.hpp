#pragma once

#include <optional>

#include "gpmpc/model.hpp"

namespace gpmpc::estimator {

inline constexpr int kSigmaCount = 2 * kStates + 1;

struct UkfConfig {
  double alpha = 1e-3;
  double beta = 2.0;
  double kappa = 0.0;
  /// Generic isotropic default; default_ukf_config() builds the tuned one.
  Matrix q_process = Matrix::Identity(kStates, kStates) * 1e-2;
  double r_meas = 1.0;  // (mg/dL)²
  /// State-12 impulse per announced gram of CHO; must match the plant.
  double meal_gain = 0.0;

  /// Throws ParameterError when an invariant is violated.
  void validate() const;
};

/// Process noise that models the IS disturbance as white noise entering
/// through B^kIS_d, plus a small isotropic floor:
///   Q = q_disturbance · b_kis_d b_kis_dᵀ + q_floor · I.
Matrix disturbance_process_noise(const model::ModelSet& model, double q_disturbance = 1e4,
                                 double q_floor = 1e-6);

UkfConfig default_ukf_config(const model::ModelSet& model, double meal_gain);

struct UkfState {
  StateVector mean = StateVector::Zero();
  Matrix cov = Matrix::Identity(kStates, kStates);
};

struct SigmaPoints {
  Eigen::Matrix<double, kStates, kSigmaCount> points;
  Eigen::Matrix<double, kSigmaCount, 1> w_mean;
  Eigen::Matrix<double, kSigmaCount, 1> w_cov;
};

/// Scaled 2n+1 sigma points. A Cholesky failure is retried with growing
/// diagonal jitter before giving up with EstimatorFailure.
SigmaPoints sigma_points(const UkfState& s, const UkfConfig& cfg);

/// Propagates the sigma points through one nominal discrete step with the
/// applied insulin deviation; an announced meal is injected into the intestine
/// state before propagation.
UkfState ukf_predict(const UkfState& s, double u_dev, std::optional<double> announced_meal_grams,
                     const UkfConfig& cfg, const model::ModelSet& model);

/// Unscented measurement update against h(x) = 110 + C·x.
UkfState ukf_update(const UkfState& s, double y, const UkfConfig& cfg,
                    const model::ModelSet& model);

}  // namespace gpmpc::estimator
