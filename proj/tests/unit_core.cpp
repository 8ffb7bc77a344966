#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "singctrl/errors.hpp"
#include "singctrl/ocp.hpp"
#include "singctrl/problems/fishery.hpp"
#include "singctrl/problems/plant.hpp"
#include "singctrl/problems/sir.hpp"
#include "singctrl/tv.hpp"

using namespace singctrl;

namespace {

Eigen::MatrixXd random_controls(const ControlProblem& p, int N, unsigned seed) {
  std::mt19937 rng(seed);
  Eigen::MatrixXd u(p.control_dim, N);
  for (int j = 0; j < p.control_dim; ++j) {
    std::uniform_real_distribution<double> dist(p.lower(j), p.upper(j));
    for (int k = 0; k < N; ++k) u(j, k) = dist(rng);
  }
  return u;
}

// Central finite differences of the reduced cost u -> J(rollout(u), u).
double fd_gradient_entry(const ControlProblem& p, const Mesh& mesh, Eigen::MatrixXd u, int j,
                         int k) {
  const double step = 1e-6 * (1.0 + std::abs(u(j, k)));
  const double saved = u(j, k);
  u(j, k) = saved + step;
  const double fp = discrete_cost(p, mesh, rollout_state(p, mesh, u), u);
  u(j, k) = saved - step;
  const double fm = discrete_cost(p, mesh, rollout_state(p, mesh, u), u);
  u(j, k) = saved;
  return (fp - fm) / (2.0 * step);
}

void check_gradient_against_fd(const ControlProblem& p, const Mesh& mesh, unsigned seed) {
  const Eigen::MatrixXd u = random_controls(p, mesh.intervals, seed);
  const Eigen::MatrixXd x = rollout_state(p, mesh, u);
  const Eigen::MatrixXd lambda = backward_adjoint(p, mesh, x, u);
  const Eigen::MatrixXd g = gradient_via_lagrangian(p, mesh, x, u, lambda);
  double scale = 1e-8;
  for (int j = 0; j < p.control_dim; ++j)
    for (int k = 0; k < mesh.intervals; ++k) scale = std::max(scale, std::abs(g(j, k)));
  for (int j = 0; j < p.control_dim; ++j)
    for (int k = 0; k < mesh.intervals; ++k) {
      const double fd = fd_gradient_entry(p, mesh, u, j, k);
      CHECK(std::abs(g(j, k) - fd) <= 1e-5 * std::max(scale, std::abs(fd)));
    }
}

}  // namespace

TEST_CASE("mesh basics") {
  const Mesh mesh(10.0, 50);
  CHECK(mesh.step() == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(mesh.node(0) == 0.0);
  CHECK(mesh.node(50) == doctest::Approx(10.0).epsilon(1e-15));
  CHECK_THROWS_AS(Mesh(0.0, 10), ParameterDomainError);
  CHECK_THROWS_AS(Mesh(1.0, 0), ParameterDomainError);
}

TEST_CASE("rollout holds the harvesting equilibrium") {
  const FisheryParams params;
  const ControlProblem p = fishery_problem(params);
  const Mesh mesh(params.T, 750);
  const Eigen::MatrixXd u = Eigen::MatrixXd::Constant(1, 750, 0.1875);
  const Eigen::MatrixXd x = rollout_state(p, mesh, u);
  for (int k = 0; k <= 750; ++k) CHECK(x(0, k) == doctest::Approx(0.625).epsilon(1e-13));
}

TEST_CASE("rollout single Euler step") {
  const FisheryParams params;
  const ControlProblem p = fishery_problem(params);
  const Mesh mesh(0.1, 1);  // h = 0.1
  const Eigen::MatrixXd u = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const Eigen::MatrixXd x = rollout_state(p, mesh, u);
  CHECK(x(0, 1) == doctest::Approx(0.5234375).epsilon(1e-15));
}

TEST_CASE("rollout is deterministic bit for bit") {
  const ControlProblem p = sir_problem(SirParams{});
  const Mesh mesh(50.0, 200);
  const Eigen::MatrixXd u = random_controls(p, 200, 42);
  const Eigen::MatrixXd x1 = rollout_state(p, mesh, u);
  const Eigen::MatrixXd x2 = rollout_state(p, mesh, u);
  CHECK((x1 - x2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rollout reports divergence with the first bad index") {
  ControlProblem p;
  p.state_dim = 1;
  p.control_dim = 1;
  p.x0 = Eigen::VectorXd::Constant(1, 10.0);
  p.lower = Eigen::VectorXd::Constant(1, 0.0);
  p.upper = Eigen::VectorXd::Constant(1, 1.0);
  p.dynamics = [](const double* x, const double*, double* out) {
    out[0] = std::exp(x[0]) * x[0] * x[0];
  };
  p.running_cost = [](const double*, const double*) { return 0.0; };
  const Mesh mesh(10.0, 10);
  const Eigen::MatrixXd u = Eigen::MatrixXd::Zero(1, 10);
  CHECK_THROWS_AS(rollout_state(p, mesh, u), RolloutDiverged);
}

TEST_CASE("adjoint terminal condition is exact") {
  const ControlProblem p = sir_problem(SirParams{});
  const Mesh mesh(50.0, 100);
  const Eigen::MatrixXd u = random_controls(p, 100, 3);
  const Eigen::MatrixXd x = rollout_state(p, mesh, u);
  const Eigen::MatrixXd lambda = backward_adjoint(p, mesh, x, u);
  for (int i = 0; i < 3; ++i) CHECK(lambda(i, 99) == 0.0);
}

TEST_CASE("adjoint single hand step on the harvesting model") {
  // h = 1, u_{N-1} = 1: lambda_{N-2} = 0 + 1*(-p q * 1 + 0) = -4.
  const FisheryParams params;
  const ControlProblem p = fishery_problem(params);
  const Mesh mesh(2.0, 2);
  Eigen::MatrixXd u(1, 2);
  u << 0.3, 1.0;
  const Eigen::MatrixXd x = rollout_state(p, mesh, u);
  const Eigen::MatrixXd lambda = backward_adjoint(p, mesh, x, u);
  CHECK(lambda(0, 1) == 0.0);
  CHECK(lambda(0, 0) == doctest::Approx(-4.0).epsilon(1e-15));
}

TEST_CASE("second adjoint of the growth model follows its recursion") {
  const ControlProblem p = plant_problem(PlantParams{});
  const Mesh mesh(5.0, 40);
  const Eigen::MatrixXd u = random_controls(p, 40, 5);
  const Eigen::MatrixXd x = rollout_state(p, mesh, u);
  const Eigen::MatrixXd lambda = backward_adjoint(p, mesh, x, u);
  const double h = mesh.step();
  for (int k = 39; k >= 1; --k)
    CHECK(lambda(1, k - 1) ==
          doctest::Approx(lambda(1, k) - h / x(1, k)).epsilon(1e-13));
}

TEST_CASE("discrete cost basics") {
  ControlProblem p;
  p.state_dim = 1;
  p.control_dim = 1;
  p.x0 = Eigen::VectorXd::Zero(1);
  p.lower = Eigen::VectorXd::Constant(1, 0.0);
  p.upper = Eigen::VectorXd::Constant(1, 1.0);
  p.dynamics = [](const double*, const double*, double* out) { out[0] = 0.0; };
  p.running_cost = [](const double*, const double*) { return 0.0; };
  const Mesh mesh(1.0, 4);
  const Eigen::MatrixXd u = Eigen::MatrixXd::Zero(1, 4);
  const Eigen::MatrixXd x = rollout_state(p, mesh, u);
  CHECK(discrete_cost(p, mesh, x, u) == 0.0);
}

TEST_CASE("discrete cost of the known optimal controls") {
  // Sampled optimal control, Euler rollout, left-rectangle sum.
  SUBCASE("harvesting profit") {
    const FisheryParams params;
    const ControlProblem p = fishery_problem(params);
    const FisheryExact e = fishery_exact(params);
    const Mesh mesh(params.T, 750);
    Eigen::MatrixXd u(1, 750);
    for (int k = 0; k < 750; ++k) u(0, k) = e.u(mesh.node(k));
    const Eigen::MatrixXd x = rollout_state(p, mesh, u);
    CHECK(-discrete_cost(p, mesh, x, u) == doctest::Approx(3.0575).epsilon(2e-4));
  }
  SUBCASE("growth-model value") {
    const PlantParams params;  // T=5, 4, 1
    const ControlProblem p = plant_problem(params);
    const PlantExact e = plant_exact(params);
    const Mesh mesh(params.T, 750);
    Eigen::MatrixXd u(1, 750);
    for (int k = 0; k < 750; ++k) u(0, k) = e.u(mesh.node(k));
    const Eigen::MatrixXd x = rollout_state(p, mesh, u);
    CHECK(-discrete_cost(p, mesh, x, u) == doctest::Approx(11.787362).epsilon(1e-6));
  }
}

TEST_CASE("cost evaluation error carries the offending index") {
  ControlProblem p;
  p.state_dim = 1;
  p.control_dim = 1;
  p.x0 = Eigen::VectorXd::Constant(1, 1.0);
  p.lower = Eigen::VectorXd::Constant(1, 0.0);
  p.upper = Eigen::VectorXd::Constant(1, 1.0);
  p.dynamics = [](const double* x, const double*, double* out) { out[0] = -2.0 * x[0]; };
  p.running_cost = [](const double* x, const double*) { return std::log(x[0]); };
  const Mesh mesh(4.0, 4);  // h = 1: x goes 1, -1, 1, -1 -> log fails at k = 1
  const Eigen::MatrixXd u = Eigen::MatrixXd::Zero(1, 4);
  const Eigen::MatrixXd x = rollout_state(p, mesh, u);
  try {
    discrete_cost(p, mesh, x, u);
    FAIL("expected a cost evaluation error");
  } catch (const CostEvaluationError& err) {
    CHECK(err.step == 1);
  }
}

TEST_CASE("gradient vanishes on the singular arc data") {
  const FisheryParams params;
  const ControlProblem p = fishery_problem(params);
  const Mesh mesh(params.T, 20);
  const Eigen::MatrixXd u = Eigen::MatrixXd::Constant(1, 20, 0.1875);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(1, 21, 0.625);
  const Eigen::MatrixXd lambda = Eigen::MatrixXd::Constant(1, 20, -1.2);
  const Eigen::MatrixXd g = gradient_via_lagrangian(p, mesh, x, u, lambda);
  for (int k = 0; k < 20; ++k) CHECK(std::abs(g(0, k)) <= 1e-12 * mesh.step());
}

TEST_CASE("gradient matches central finite differences") {
  const FisheryParams fp;
  check_gradient_against_fd(fishery_problem(fp), Mesh(fp.T, 40), 11);
  const PlantParams pp;
  check_gradient_against_fd(plant_problem(pp), Mesh(pp.T, 40), 12);
  const SirParams sp;
  check_gradient_against_fd(sir_problem(sp), Mesh(sp.T, 40), 13);
}

TEST_CASE("control partials do not depend on the control") {
  auto probe = [](const ControlProblem& p) {
    const int n = p.state_dim, m = p.control_dim;
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> dist(0.1, 0.9);
    Eigen::VectorXd x(n), u1(m), u2(m);
    for (int i = 0; i < n; ++i) x(i) = 1.0 + dist(rng);
    for (int j = 0; j < m; ++j) {
      u1(j) = dist(rng);
      u2(j) = dist(rng);
    }
    Eigen::VectorXd a(n * m), b(n * m), ga(m), gb(m);
    p.dynamics_du(x.data(), u1.data(), a.data());
    p.dynamics_du(x.data(), u2.data(), b.data());
    p.cost_du(x.data(), u1.data(), ga.data());
    p.cost_du(x.data(), u2.data(), gb.data());
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ga - gb).cwiseAbs().maxCoeff() == 0.0);
  };
  probe(fishery_problem(FisheryParams{}));
  probe(plant_problem(PlantParams{}));
  probe(sir_problem(SirParams{}));
}

TEST_CASE("total variation values") {
  CHECK(total_variation(Eigen::VectorXd::Constant(12, 0.4)) == 0.0);
  Eigen::VectorXd u(3);
  u << 0.0, 1.0, 0.5;
  CHECK(total_variation(u) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(total_variation(Eigen::VectorXd::Constant(1, 7.0)) == 0.0);

  // sampled optimal harvesting control: one jump of size M - u_s
  const FisheryExact e = fishery_exact(FisheryParams{});
  const Mesh mesh(10.0, 750);
  Eigen::VectorXd ue(750);
  for (int k = 0; k < 750; ++k) ue(k) = e.u(mesh.node(k));
  CHECK(total_variation(ue) == doctest::Approx(0.8125).epsilon(1e-12));
}

TEST_CASE("difference split of consecutive control changes") {
  Eigen::VectorXd u(3);
  u << 0.0, 1.0, 0.5;
  const auto [zeta, iota] = tv_decompose(u);
  CHECK(zeta(0) == 1.0);
  CHECK(zeta(1) == 0.0);
  CHECK(iota(0) == 0.0);
  CHECK(iota(1) == 0.5);

  const auto [z2, i2] = tv_decompose(Eigen::VectorXd::Constant(5, 0.3));
  CHECK(z2.cwiseAbs().maxCoeff() == 0.0);
  CHECK(i2.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("difference split properties on random vectors") {
  std::mt19937 rng(1234);
  std::normal_distribution<double> dist(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 40);
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u(i) = dist(rng);
    const auto [zeta, iota] = tv_decompose(u);
    double sum = 0.0;
    for (int k = 0; k < n - 1; ++k) {
      CHECK(zeta(k) * iota(k) == 0.0);
      CHECK(u(k + 1) - u(k) == zeta(k) - iota(k));
      sum += zeta(k) + iota(k);
    }
    CHECK(std::abs(sum - total_variation(u)) <= 1e-14 * std::max(1.0, sum));
  }
}

TEST_CASE("difference matrix stencil") {
  const DifferenceMatrix A = DifferenceMatrix::bidiagonal(5);
  CHECK(A.rows == 4);
  CHECK(A.cols == 5);
  for (int r = 0; r < 4; ++r) {
    CHECK(A.row_entries[r][0] == std::pair{r, -1.0});
    CHECK(A.row_entries[r][1] == std::pair{r + 1, 1.0});
  }
}

TEST_CASE("stacked point round-trips") {
  std::mt19937 rng(77);
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd u(2, 6);
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 6; ++k) u(j, k) = dist(rng);
  const DecomposedPoint p = DecomposedPoint::decompose(u);
  const Eigen::VectorXd z = p.stacked();
  CHECK(z.size() == 2 * (3 * 6 - 2));
  const DecomposedPoint q = DecomposedPoint::from_stacked(z, 2, 6);
  CHECK((q.u - u).cwiseAbs().maxCoeff() == 0.0);
  CHECK((q.zeta - p.zeta).cwiseAbs().maxCoeff() == 0.0);
  CHECK((q.iota - p.iota).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("assembled program: equality rows, bounds, penalty") {
  const FisheryParams params;
  const ControlProblem prob = fishery_problem(params);
  const Mesh mesh(params.T, 3);

  SUBCASE("m=1, N=3 equality matrix is the documented 2x7 block") {
    const PolyhedralNLP nlp = assemble_nlp(prob, mesh, TVWeights{Eigen::VectorXd::Constant(1, 0.1)});
    REQUIRE(nlp.dim == 7);
    REQUIRE(nlp.equality.size() == 2);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2, 7);
    for (int r = 0; r < 2; ++r)
      for (const auto& [c, v] : nlp.equality[r].entries) B(r, c) = v;
    Eigen::MatrixXd expect(2, 7);
    expect << -1, 1, 0, -1, 0, 1, 0,
               0, -1, 1, 0, -1, 0, 1;
    CHECK((B - expect).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("zero weight reduces the objective to the discrete cost") {
    const PolyhedralNLP nlp = assemble_nlp(prob, mesh, TVWeights{Eigen::VectorXd::Zero(1)});
    Eigen::MatrixXd u(1, 3);
    u << 0.2, 0.9, 0.4;
    const DecomposedPoint p = DecomposedPoint::decompose(u);
    const Eigen::MatrixXd x = rollout_state(prob, mesh, u);
    CHECK(nlp.objective(p.stacked()) == doctest::Approx(discrete_cost(prob, mesh, x, u)).epsilon(1e-15));
  }

  SUBCASE("penalty blocks of the gradient are constant") {
    const PolyhedralNLP nlp = assemble_nlp(prob, mesh, TVWeights{Eigen::VectorXd::Constant(1, 0.25)});
    Eigen::MatrixXd u(1, 3);
    u << 0.2, 0.9, 0.4;
    Eigen::VectorXd g;
    nlp.gradient(DecomposedPoint::decompose(u).stacked(), g);
    for (int i = 3; i < 7; ++i) CHECK(g(i) == 0.25);
  }

  SUBCASE("penalized objective at a split point is cost plus weighted variation") {
    const PolyhedralNLP nlp = assemble_nlp(prob, mesh, TVWeights{Eigen::VectorXd::Constant(1, 0.3)});
    Eigen::MatrixXd u(1, 3);
    u << 0.2, 0.9, 0.4;
    const Eigen::MatrixXd x = rollout_state(prob, mesh, u);
    const double expect =
        discrete_cost(prob, mesh, x, u) + 0.3 * total_variation(u.row(0).transpose());
    CHECK(nlp.objective(DecomposedPoint::decompose(u).stacked()) ==
          doctest::Approx(expect).epsilon(1e-14));
  }

  SUBCASE("weights outside [0,1) are rejected") {
    CHECK_THROWS_AS(TVWeights{Eigen::VectorXd::Constant(1, 1.0)}, ParameterDomainError);
    CHECK_THROWS_AS(TVWeights{Eigen::VectorXd::Constant(1, -0.1)}, ParameterDomainError);
  }
}
