#pragma once

#include <span>
#include <vector>

#include "gpmpc/gp.hpp"
#include "gpmpc/model.hpp"
#include "gpmpc/qp.hpp"

namespace gpmpc::mpc {

enum class TerminalMode { kHard, kSoft };

struct MpcParams {
  int horizon = 30;
  double q = 1.0;       // output weight
  double r = 40000.0;   // input weight
  double u_max = 0.5;   // U per sample
  double u_basal = model::kBasalInsulin;
  TerminalMode terminal = TerminalMode::kHard;
  double soft_weight = 1e6;  // soft terminal mode and infeasibility fallback

  void validate() const;
};

struct SteadyState {
  StateVector x = StateVector::Zero();
  double u = 0.0;
};

/// State/input pair that holds the output at baseline under a constant
/// disturbance u_kis:
///   [Â_d − I, B_d; C, 0]·[x; u] = [−B^kIS_d·u_kis; 0].
/// Throws ConfigurationError when the block system is singular.
SteadyState steady_state_target(double u_kis, const model::ModelSet& model);

/// Output predictions over the horizon, stacked for k = 0..N:
///   y_k = free.row(k)·x0 + inputs.row(k)·U + disturbance.row(k)·D.
struct PredictionMatrices {
  Matrix free;         // (N+1)×12
  Matrix inputs;       // (N+1)×N
  Matrix disturbance;  // (N+1)×N
};

PredictionMatrices prediction_matrices(const model::ModelSet& model, int horizon);

/// Condensed QP over the input deviations U = (u_0..u_{N−1}):
///   Σ_{k<N} q·y_k² + r·(u_k − u_ss,k)²,  −u_basal ≤ u_k ≤ u_max − u_basal,
/// with y_N = 0 as an equality (hard) or a penalty (soft).
qp::QpProblem build_qp(const StateVector& x0, std::span<const double> u_kis_preview,
                       const MpcParams& params, const model::ModelSet& model);

struct MpcResult {
  double u_applied = 0.0;  // absolute, U per sample
  qp::QpSolution solution;
  std::vector<double> preview;
  std::vector<double> preview_variance;
};

/// Solves the MPC problem for a given disturbance preview and returns the
/// first input, shifted back to absolute units and clamped to [0, u_max].
MpcResult mpc_step_with_preview(const StateVector& x_hat, std::span<const double> preview,
                                const MpcParams& params, const model::ModelSet& model,
                                const qp::SolverOptions& solver = {});

/// Queries the GP posterior mean at t, t + ts, …, t + (N−1)·ts as the
/// disturbance preview. An inactive GP yields a zero preview (plain MPC).
MpcResult mpc_step(const StateVector& x_hat, const gp::GpModel& gp, double t,
                   const MpcParams& params, const model::ModelSet& model,
                   const qp::SolverOptions& solver = {});

}  // namespace gpmpc::mpc
