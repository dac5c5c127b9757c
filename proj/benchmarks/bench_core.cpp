#include <cmath>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "gpmpc/estimator.hpp"
#include "gpmpc/gp.hpp"
#include "gpmpc/harness.hpp"
#include "gpmpc/learner.hpp"
#include "gpmpc/mpc.hpp"
#include "gpmpc/numerics.hpp"

using namespace gpmpc;

namespace {

struct Window {
  std::vector<double> t;
  std::vector<double> y;
};

// 2.5 days of a noisy daily disturbance at 5-min spacing.
Window training_window(std::size_t n = 720) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0.0, 0.5);
  Window w;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 5.0 * static_cast<double>(i);
    w.t.push_back(t);
    w.y.push_back(10.0 * std::sin(2.0 * 3.141592653589793 * t / 1440.0) + nd(rng));
  }
  w.y = learner::zero_phase_filter(w.y).values;
  return w;
}

void BM_Cholesky(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto w = training_window(n);
  Matrix k = gp::gram_matrix(w.t, gp::Hyperparams{});
  k.diagonal().array() += 1e-6;
  for (auto _ : state) benchmark::DoNotOptimize(numerics::cholesky(k).log_det);
}
BENCHMARK(BM_Cholesky)->Arg(144)->Arg(720)->Unit(benchmark::kMillisecond);

void BM_LogLikelihoodDense(benchmark::State& state) {
  const auto w = training_window();
  for (auto _ : state) {
    benchmark::DoNotOptimize(gp::log_marginal_likelihood(w.t, w.y, gp::Hyperparams{}));
  }
}
BENCHMARK(BM_LogLikelihoodDense)->Unit(benchmark::kMillisecond);

void BM_LogLikelihoodToeplitz(benchmark::State& state) {
  const auto w = training_window();
  for (auto _ : state) {
    benchmark::DoNotOptimize(gp::log_marginal_likelihood_toeplitz(5.0, w.y, gp::Hyperparams{}));
  }
}
BENCHMARK(BM_LogLikelihoodToeplitz)->Unit(benchmark::kMillisecond);

void BM_FitHyperparams(benchmark::State& state) {
  const auto w = training_window();
  for (auto _ : state) benchmark::DoNotOptimize(gp::fit_hyperparams(w.t, w.y, gp::Hyperparams{}));
}
BENCHMARK(BM_FitHyperparams)->Unit(benchmark::kMillisecond);

void BM_PosteriorWithData(benchmark::State& state) {
  const auto w = training_window();
  const auto base = gp::GpModel::train(w.t, w.y, gp::Hyperparams{});
  for (auto _ : state) benchmark::DoNotOptimize(base.with_data(w.t, w.y).alpha());
}
BENCHMARK(BM_PosteriorWithData)->Unit(benchmark::kMicrosecond);

void BM_MpcStep(benchmark::State& state) {
  const auto model = model::discretize_model();
  const mpc::MpcParams params;
  StateVector x = StateVector::Zero();
  x(kPlasmaGlucose) = 40.0;
  std::vector<double> preview(30);
  for (std::size_t k = 0; k < preview.size(); ++k) preview[k] = 5.0 * std::sin(0.1 * k);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mpc::mpc_step_with_preview(x, preview, params, model).u_applied);
  }
}
BENCHMARK(BM_MpcStep)->Unit(benchmark::kMicrosecond);

void BM_UkfCycle(benchmark::State& state) {
  const auto model = model::discretize_model();
  const auto cfg = estimator::default_ukf_config(model, 26.7604);
  estimator::UkfState s;
  for (auto _ : state) {
    s = estimator::ukf_update(s, 112.0, cfg, model);
    s = estimator::ukf_predict(s, 0.01, std::nullopt, cfg, model);
    benchmark::DoNotOptimize(s.mean.data());
  }
}
BENCHMARK(BM_UkfCycle)->Unit(benchmark::kMicrosecond);

void BM_ClosedLoopDay(benchmark::State& state) {
  const auto controller = state.range(0) ? harness::ControllerKind::kGpMpc : harness::ControllerKind::kMpc;
  auto scenario = harness::make_scenario(harness::ScenarioKind::kFasting, controller, 0, 1.0);
  scenario.gp_activation_days = 0.5;
  for (auto _ : state) benchmark::DoNotOptimize(harness::run_closed_loop(scenario).records.size());
  state.SetLabel(state.range(0) ? "gp-mpc" : "mpc");
}
BENCHMARK(BM_ClosedLoopDay)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
