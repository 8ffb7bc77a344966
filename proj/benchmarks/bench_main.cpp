#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <random>

#include "singctrl/experiment.hpp"
#include "singctrl/ocp.hpp"
#include "singctrl/problems/fishery.hpp"
#include "singctrl/projection.hpp"
#include "singctrl/prox_tv.hpp"
#include "singctrl/tv.hpp"

namespace {

using namespace singctrl;

void RolloutAndGradient(benchmark::State& state) {
  const FisheryParams params;
  const ControlProblem prob = fishery_problem(params);
  const Mesh mesh(params.T, static_cast<int>(state.range(0)));
  const Eigen::MatrixXd u = Eigen::MatrixXd::Constant(1, mesh.intervals, 0.1);
  for (auto _ : state) {
    const Eigen::MatrixXd x = rollout_state(prob, mesh, u);
    const Eigen::MatrixXd lambda = backward_adjoint(prob, mesh, x, u);
    Eigen::MatrixXd g = gradient_via_lagrangian(prob, mesh, x, u, lambda);
    benchmark::DoNotOptimize(g);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(RolloutAndGradient)->RangeMultiplier(2)->Range(128, 4096)->Complexity();

void PolyhedronProjection(benchmark::State& state) {
  const FisheryParams params;
  const ControlProblem prob = fishery_problem(params);
  const Mesh mesh(params.T, static_cast<int>(state.range(0)));
  const PolyhedralNLP nlp =
      assemble_nlp(prob, mesh, TVWeights{Eigen::VectorXd::Constant(1, 1e-2)});
  std::mt19937 rng(7);
  std::normal_distribution<double> dist(0.2, 0.5);
  Eigen::VectorXd z(nlp.dim);
  for (int i = 0; i < nlp.dim; ++i) z(i) = dist(rng);
  PolyhedronProjector proj(nlp);
  for (auto _ : state) {
    Eigen::VectorXd y = proj.project(z, false);
    benchmark::DoNotOptimize(y);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(PolyhedronProjection)->RangeMultiplier(2)->Range(128, 2048)->Complexity();

void TVProx(benchmark::State& state) {
  std::mt19937 rng(11);
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd y(state.range(0));
  for (int i = 0; i < y.size(); ++i) y(i) = dist(rng);
  for (auto _ : state) {
    Eigen::VectorXd x = tv1d_prox(y, 0.3);
    benchmark::DoNotOptimize(x);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(TVProx)->RangeMultiplier(4)->Range(1024, 65536)->Complexity();

void FisherySolveSmall(benchmark::State& state) {
  const FisheryParams params;
  const ControlProblem prob = fishery_problem(params);
  const Mesh mesh(params.T, 100);
  const Eigen::MatrixXd u0 = Eigen::MatrixXd::Zero(1, mesh.intervals);
  SolverConfig cfg;
  cfg.tol = 1e-6;
  for (auto _ : state) {
    RunOutcome out = run_polyhedral(prob, mesh, Eigen::VectorXd::Constant(1, 1e-2), u0, cfg);
    benchmark::DoNotOptimize(out.report.objective);
  }
}
BENCHMARK(FisherySolveSmall)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
