#include "gpmpc/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "gpmpc/error.hpp"

namespace gpmpc::estimator {

namespace {

constexpr int kMaxJitterSteps = 10;

double spread_factor(const UkfConfig& cfg) {
  return cfg.alpha * cfg.alpha * (kStates + cfg.kappa);
}

void symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

// Weighted mean taken relative to the central point. For the tiny default
// alpha the central weight is ~−1e6, and the direct sum loses digits.
template <typename Points>
Eigen::VectorXd centered_mean(const Points& pts, const Eigen::Matrix<double, kSigmaCount, 1>& w) {
  Eigen::VectorXd mean = pts.col(0);
  for (int i = 1; i < kSigmaCount; ++i) mean += w(i) * (pts.col(i) - pts.col(0));
  return mean;
}

}  // namespace

void UkfConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("ukf.alpha must be in (0, 1]");
  if (!(beta >= 0.0)) throw ParameterError("ukf.beta must be >= 0");
  if (!(spread_factor(*this) > 0.0)) throw ParameterError("ukf: alpha^2 (n + kappa) must be > 0");
  if (!(r_meas > 0.0)) throw ParameterError("ukf.r_meas must be > 0");
  if (q_process.rows() != kStates || q_process.cols() != kStates) {
    throw ParameterError("ukf.q_process must be 12x12");
  }
  const double q_scale = std::max(1.0, q_process.cwiseAbs().maxCoeff());
  if ((q_process - q_process.transpose()).cwiseAbs().maxCoeff() > 1e-12 * q_scale) {
    throw ParameterError("ukf.q_process must be symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(q_process, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12 * q_scale) {
    throw ParameterError("ukf.q_process must be positive semi-definite");
  }
  if (!(meal_gain >= 0.0)) throw ParameterError("ukf.meal_gain must be >= 0");
}

Matrix disturbance_process_noise(const model::ModelSet& model, double q_disturbance,
                                 double q_floor) {
  const Eigen::VectorXd g = model.b_kis_d.col(0);
  return q_disturbance * g * g.transpose() + q_floor * Matrix::Identity(kStates, kStates);
}

UkfConfig default_ukf_config(const model::ModelSet& model, double meal_gain) {
  UkfConfig cfg;
  cfg.q_process = disturbance_process_noise(model);
  cfg.meal_gain = meal_gain;
  return cfg;
}

SigmaPoints sigma_points(const UkfState& s, const UkfConfig& cfg) {
  const double c = spread_factor(cfg);
  const double lambda = c - kStates;

  SigmaPoints sp;
  sp.w_mean.setConstant(0.5 / c);
  sp.w_cov.setConstant(0.5 / c);
  sp.w_mean(0) = lambda / c;
  sp.w_cov(0) = lambda / c + (1.0 - cfg.alpha * cfg.alpha + cfg.beta);

  Matrix scaled = c * s.cov;
  symmetrize(scaled);
  const double base = std::max(scaled.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  double jitter = 0.0;
  for (int attempt = 0; attempt <= kMaxJitterSteps; ++attempt) {
    Eigen::LLT<Matrix> llt(scaled + jitter * Matrix::Identity(kStates, kStates));
    if (llt.info() == Eigen::Success) {
      const Matrix l = llt.matrixL();
      sp.points.col(0) = s.mean;
      for (int i = 0; i < kStates; ++i) {
        sp.points.col(1 + i) = s.mean + l.col(i);
        sp.points.col(1 + kStates + i) = s.mean - l.col(i);
      }
      return sp;
    }
    jitter = (jitter == 0.0) ? base * 1e-12 : jitter * 10.0;
  }
  throw EstimatorFailure("sigma_points: covariance is not positive semi-definite");
}

UkfState ukf_predict(const UkfState& s, double u_dev, std::optional<double> announced_meal_grams,
                     const UkfConfig& cfg, const model::ModelSet& model) {
  SigmaPoints sp = sigma_points(s, cfg);
  if (announced_meal_grams) {
    sp.points.row(kIntestineGlucose).array() += cfg.meal_gain * *announced_meal_grams;
  }

  Eigen::Matrix<double, kStates, kSigmaCount> propagated = model.a_hat_d * sp.points;
  propagated.colwise() += model.b_d.col(0) * u_dev;

  UkfState out;
  out.mean = centered_mean(propagated, sp.w_mean);
  out.cov = cfg.q_process;
  for (int i = 0; i < kSigmaCount; ++i) {
    const StateVector d = propagated.col(i) - out.mean;
    out.cov += sp.w_cov(i) * d * d.transpose();
  }
  symmetrize(out.cov);
  return out;
}

UkfState ukf_update(const UkfState& s, double y, const UkfConfig& cfg,
                    const model::ModelSet& model) {
  const SigmaPoints sp = sigma_points(s, cfg);

  const Eigen::Matrix<double, 1, kSigmaCount> z =
      (model.c * sp.points).array() + model.bg_baseline;
  const StateVector x_bar = centered_mean(sp.points, sp.w_mean);
  double y_hat = z(0);
  for (int i = 1; i < kSigmaCount; ++i) y_hat += sp.w_mean(i) * (z(i) - z(0));

  double p_yy = cfg.r_meas;
  StateVector p_xy = StateVector::Zero();
  for (int i = 0; i < kSigmaCount; ++i) {
    const double dz = z(i) - y_hat;
    p_yy += sp.w_cov(i) * dz * dz;
    p_xy += sp.w_cov(i) * (sp.points.col(i) - x_bar) * dz;
  }
  if (!(p_yy > 0.0) || !std::isfinite(p_yy)) {
    throw EstimatorFailure("ukf_update: innovation variance " + std::to_string(p_yy) +
                           " is not positive");
  }

  const StateVector gain = p_xy / p_yy;
  UkfState out;
  out.mean = x_bar + gain * (y - y_hat);
  out.cov = s.cov - gain * p_yy * gain.transpose();
  symmetrize(out.cov);
  return out;
}

}  // namespace gpmpc::estimator
