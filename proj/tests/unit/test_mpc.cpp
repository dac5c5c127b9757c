#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "gpmpc/error.hpp"
#include "gpmpc/mpc.hpp"

using namespace gpmpc;

namespace {

const model::ModelSet& nominal() {
  static const model::ModelSet m = model::discretize_model();
  return m;
}

// Direct rollout of the stage cost Σ_{k<N} q·y_k² + r·(u_k − u_ss,k)² and y_N.
std::pair<double, double> rollout_cost(const StateVector& x0, const Vector& u,
                                       const std::vector<double>& d, const mpc::MpcParams& p,
                                       double ss_gain) {
  const auto& m = nominal();
  StateVector x = x0;
  double cost = 0.0;
  for (int k = 0; k < p.horizon; ++k) {
    const double y = (m.c * x)(0, 0);
    cost += p.q * y * y + p.r * std::pow(u(k) - ss_gain * d[static_cast<std::size_t>(k)], 2);
    x = m.step(x, u(k), d[static_cast<std::size_t>(k)]);
  }
  return {cost, (m.c * x)(0, 0)};
}

}  // namespace

TEST(SteadyState, ZeroDisturbanceIsOrigin) {
  const auto ss = mpc::steady_state_target(0.0, nominal());
  EXPECT_LT(ss.x.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(ss.u, 0.0, 1e-12);
}

TEST(SteadyState, UnitDisturbanceSolvesBlockSystem) {
  const auto& m = nominal();
  const auto ss = mpc::steady_state_target(1.0, m);
  const StateVector next = m.step(ss.x, ss.u, 1.0);
  EXPECT_LT((next - ss.x).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR((m.c * ss.x)(0, 0), 0.0, 1e-9);
  // More effective insulin calls for less of it.
  EXPECT_LT(ss.u, 0.0);
}

TEST(SteadyState, LinearInDisturbance) {
  const auto a = mpc::steady_state_target(1.0, nominal());
  const auto b = mpc::steady_state_target(-2.5, nominal());
  EXPECT_NEAR(b.u, -2.5 * a.u, 1e-12);
  EXPECT_LT((b.x + 2.5 * a.x).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Prediction, MatchesSimulation) {
  const auto& m = nominal();
  const int n = 8;
  const auto pm = mpc::prediction_matrices(m, n);
  std::mt19937_64 rng(41);
  std::normal_distribution<double> nd;
  StateVector x0;
  for (int i = 0; i < kStates; ++i) x0(i) = nd(rng);
  Vector u(n), d(n);
  for (int i = 0; i < n; ++i) {
    u(i) = 0.05 * nd(rng);
    d(i) = nd(rng);
  }
  StateVector x = x0;
  for (int k = 0; k <= n; ++k) {
    const double y = pm.free.row(k).dot(x0) + pm.inputs.row(k).dot(u) + pm.disturbance.row(k).dot(d);
    EXPECT_NEAR(y, (m.c * x)(0, 0), 1e-9) << "k=" << k;
    if (k < n) x = m.step(x, u(k), d(k));
  }
}

TEST(BuildQp, ObjectiveEqualsRolloutCost) {
  mpc::MpcParams p;
  p.horizon = 3;
  std::mt19937_64 rng(42);
  std::normal_distribution<double> nd;
  const double ss_gain = mpc::steady_state_target(1.0, nominal()).u;
  for (int trial = 0; trial < 10; ++trial) {
    StateVector x0;
    for (int i = 0; i < kStates; ++i) x0(i) = 5.0 * nd(rng);
    std::vector<double> d{nd(rng), nd(rng), nd(rng)};
    Vector u(3);
    u << 0.1 * nd(rng), 0.1 * nd(rng), 0.1 * nd(rng);
    const auto qp = mpc::build_qp(x0, d, p, nominal());
    const auto [cost, y_n] = rollout_cost(x0, u, d, p, ss_gain);
    EXPECT_NEAR(qp.objective(u), cost, 1e-8 * std::max(1.0, cost));
    ASSERT_TRUE(qp.equality.has_value());
    EXPECT_NEAR(qp.equality->a.dot(u) - qp.equality->b, y_n, 1e-9);
  }
}

TEST(BuildQp, BoundsAndSoftMode) {
  mpc::MpcParams p;
  const std::vector<double> d(30, 0.0);
  const auto hard = mpc::build_qp(StateVector::Zero(), d, p, nominal());
  EXPECT_DOUBLE_EQ(hard.lower.minCoeff(), -0.169);
  EXPECT_DOUBLE_EQ(hard.upper.maxCoeff(), 0.5 - 0.169);
  EXPECT_TRUE(hard.equality.has_value());
  p.terminal = mpc::TerminalMode::kSoft;
  const auto soft = mpc::build_qp(StateVector::Zero(), d, p, nominal());
  EXPECT_FALSE(soft.equality.has_value());
  EXPECT_THROW(mpc::build_qp(StateVector::Zero(), std::vector<double>(29, 0.0), p, nominal()),
               DimensionError);
}

TEST(MpcParams, Validation) {
  mpc::MpcParams p;
  EXPECT_NO_THROW(p.validate());
  p.horizon = 0;
  EXPECT_THROW(p.validate(), ParameterError);
  p = {};
  p.u_max = 0.1;  // below basal
  EXPECT_THROW(p.validate(), ParameterError);
  p = {};
  p.r = 0.0;
  EXPECT_THROW(p.validate(), ParameterError);
}

TEST(MpcStep, EquilibriumKeepsBasal) {
  const auto res = mpc::mpc_step(StateVector::Zero(), gp::GpModel{}, 0.0, mpc::MpcParams{}, nominal());
  EXPECT_NEAR(res.u_applied, 0.169, 1e-9);
  EXPECT_EQ(res.solution.status, qp::QpStatus::kOptimal);
  EXPECT_LT(res.solution.kkt_residual, 1e-8);
  EXPECT_EQ(res.preview, std::vector<double>(30, 0.0));
}

TEST(MpcStep, HyperglycemiaIncreasesInsulin) {
  StateVector x = StateVector::Zero();
  x(kPlasmaGlucose) = 60.0;
  const auto res = mpc::mpc_step(x, gp::GpModel{}, 0.0, mpc::MpcParams{}, nominal());
  EXPECT_GT(res.u_applied, 0.169);
  EXPECT_LE(res.u_applied, 0.5);
}

TEST(MpcStep, HypoglycemiaCutsInsulin) {
  StateVector x = StateVector::Zero();
  x(kPlasmaGlucose) = -40.0;
  const auto res = mpc::mpc_step(x, gp::GpModel{}, 0.0, mpc::MpcParams{}, nominal());
  EXPECT_LT(res.u_applied, 0.169);
  EXPECT_GE(res.u_applied, 0.0);
}

TEST(MpcStep, AnticipatesSensitivityRise) {
  std::vector<double> preview(30, 0.0);
  for (std::size_t k = 10; k < preview.size(); ++k) preview[k] = 10.0;
  const auto res = mpc::mpc_step_with_preview(StateVector::Zero(), preview, mpc::MpcParams{}, nominal());
  EXPECT_LT(res.u_applied, 0.169);
}

TEST(MpcStep, AppliedInputAlwaysWithinActuatorRange) {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> nd(0.0, 40.0);
  std::normal_distribution<double> dd(0.0, 20.0);
  for (int trial = 0; trial < 50; ++trial) {
    StateVector x = StateVector::Zero();
    x(kPlasmaGlucose) = nd(rng);
    x(kInterstitialInsulin) = 0.1 * nd(rng);
    std::vector<double> preview(30);
    for (double& v : preview) v = dd(rng);
    const auto res = mpc::mpc_step_with_preview(x, preview, mpc::MpcParams{}, nominal());
    EXPECT_GE(res.u_applied, 0.0);
    EXPECT_LE(res.u_applied, 0.5);
    EXPECT_LT(res.solution.kkt_residual, 1e-6);
  }
}

TEST(MpcStep, NominalClosedLoopHoldsBaseline) {
  // Exact model, no disturbance: the loop stays at 110 mg/dL with basal input.
  const auto& m = nominal();
  StateVector x = StateVector::Zero();
  for (int k = 0; k < 288; ++k) {
    const auto res = mpc::mpc_step(x, gp::GpModel{}, 5.0 * k, mpc::MpcParams{}, m);
    x = m.step(x, res.u_applied - 0.169);
    EXPECT_NEAR(110.0 + (m.c * x)(0, 0), 110.0, 1e-6);
  }
}

TEST(MpcStep, RejectsNonFiniteEstimate) {
  StateVector x = StateVector::Zero();
  x(0) = std::nan("");
  EXPECT_THROW(mpc::mpc_step(x, gp::GpModel{}, 0.0, mpc::MpcParams{}, nominal()), ParameterError);
}
