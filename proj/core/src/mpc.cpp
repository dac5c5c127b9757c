#include "gpmpc/mpc.hpp"

#include <algorithm>
#include <cmath>

#include "gpmpc/error.hpp"

namespace gpmpc::mpc {

void MpcParams::validate() const {
  if (horizon < 1) throw ParameterError("mpc.horizon: must be >= 1");
  if (!(q > 0.0)) throw ParameterError("mpc.q: must be positive");
  if (!(r > 0.0)) throw ParameterError("mpc.r: must be positive");
  if (!(u_basal > 0.0)) throw ParameterError("mpc.u_basal: must be positive");
  if (!(u_max > u_basal)) throw ParameterError("mpc.u_max: must exceed mpc.u_basal");
  if (!(soft_weight > 0.0)) throw ParameterError("mpc.soft_weight: must be positive");
}

SteadyState steady_state_target(double u_kis, const model::ModelSet& model) {
  Matrix block = Matrix::Zero(kStates + 1, kStates + 1);
  block.topLeftCorner(kStates, kStates) =
      model.a_hat_d - Matrix::Identity(kStates, kStates);
  block.block(0, kStates, kStates, 1) = model.b_d;
  block.block(kStates, 0, 1, kStates) = model.c;
  Vector rhs = Vector::Zero(kStates + 1);
  rhs.head(kStates) = -model.b_kis_d * u_kis;

  Vector sol;
  try {
    sol = numerics::solve_linear(block, rhs);
  } catch (const SingularityError& e) {
    throw ConfigurationError(std::string("steady_state_target: singular block system: ") +
                             e.what());
  }
  SteadyState ss;
  ss.x = sol.head(kStates);
  ss.u = sol(kStates);
  return ss;
}

PredictionMatrices prediction_matrices(const model::ModelSet& model, int horizon) {
  const int n = horizon;
  PredictionMatrices pm;
  pm.free.resize(n + 1, kStates);
  pm.inputs = Matrix::Zero(n + 1, n);
  pm.disturbance = Matrix::Zero(n + 1, n);

  // Markov parameters C·A^k·B and C·A^k·B^kIS for k = 0..N−1.
  Vector markov_u(n);
  Vector markov_d(n);
  Matrix c_pow = model.c;  // C·A^k
  for (int k = 0; k <= n; ++k) {
    pm.free.row(k) = c_pow;
    if (k < n) {
      markov_u(k) = (c_pow * model.b_d)(0, 0);
      markov_d(k) = (c_pow * model.b_kis_d)(0, 0);
    }
    c_pow = c_pow * model.a_hat_d;
  }
  for (int k = 1; k <= n; ++k) {
    for (int j = 0; j < k; ++j) {
      pm.inputs(k, j) = markov_u(k - 1 - j);
      pm.disturbance(k, j) = markov_d(k - 1 - j);
    }
  }
  return pm;
}

qp::QpProblem build_qp(const StateVector& x0, std::span<const double> u_kis_preview,
                       const MpcParams& params, const model::ModelSet& model) {
  params.validate();
  const int n = params.horizon;
  if (static_cast<int>(u_kis_preview.size()) != n) {
    throw DimensionError("build_qp: preview length must equal the horizon");
  }
  const Eigen::Map<const Vector> preview(u_kis_preview.data(), n);
  const PredictionMatrices pm = prediction_matrices(model, n);
  const double ss_gain = steady_state_target(1.0, model).u;
  const Vector u_ss = ss_gain * preview;

  // Stacked outputs y_0..y_{N−1} = offset + G·U.
  const Matrix g = pm.inputs.topRows(n);
  const Vector offset = pm.free.topRows(n) * x0 + pm.disturbance.topRows(n) * preview;

  qp::QpProblem qp;
  qp.hessian = 2.0 * (params.q * g.transpose() * g + params.r * Matrix::Identity(n, n));
  qp.gradient = 2.0 * (params.q * g.transpose() * offset - params.r * u_ss);
  qp.constant = params.q * offset.squaredNorm() + params.r * u_ss.squaredNorm();
  qp.lower = Vector::Constant(n, -params.u_basal);
  qp.upper = Vector::Constant(n, params.u_max - params.u_basal);

  qp::LinearEquality terminal;
  terminal.a = pm.inputs.row(n).transpose();
  terminal.b = -(pm.free.row(n).dot(x0) + pm.disturbance.row(n).dot(preview));
  qp.equality = terminal;
  if (params.terminal == TerminalMode::kSoft) qp = qp::soften_equality(qp, params.soft_weight);
  return qp;
}

MpcResult mpc_step_with_preview(const StateVector& x_hat, std::span<const double> preview,
                                const MpcParams& params, const model::ModelSet& model,
                                const qp::SolverOptions& solver) {
  if (!numerics::all_finite(x_hat)) throw ParameterError("mpc_step: non-finite state estimate");
  const qp::QpProblem qp = build_qp(x_hat, preview, params, model);
  qp::SolverOptions opts = solver;
  opts.soft_weight = params.soft_weight;

  MpcResult res;
  res.solution = qp::solve_qp(qp, opts);
  res.preview.assign(preview.begin(), preview.end());
  res.u_applied = std::clamp(res.solution.u(0) + params.u_basal, 0.0, params.u_max);
  return res;
}

MpcResult mpc_step(const StateVector& x_hat, const gp::GpModel& gp, double t,
                   const MpcParams& params, const model::ModelSet& model,
                   const qp::SolverOptions& solver) {
  std::vector<double> query(static_cast<std::size_t>(params.horizon));
  for (std::size_t k = 0; k < query.size(); ++k) query[k] = t + model.ts * static_cast<double>(k);

  std::vector<double> preview(query.size(), 0.0);
  std::vector<double> variance(query.size(), 0.0);
  if (gp.active()) {
    gp::Prediction pred = gp.predict(query);
    preview = std::move(pred.means);
    variance = std::move(pred.variances);
  }
  MpcResult res = mpc_step_with_preview(x_hat, preview, params, model, solver);
  res.preview_variance = std::move(variance);
  return res;
}

}  // namespace gpmpc::mpc
