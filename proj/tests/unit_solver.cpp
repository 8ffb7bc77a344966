#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>

#include "singctrl/errors.hpp"
#include "singctrl/experiment.hpp"
#include "singctrl/problems/fishery.hpp"
#include "singctrl/projection.hpp"
#include "singctrl/prox_tv.hpp"
#include "singctrl/solver.hpp"
#include "singctrl/tv.hpp"

using namespace singctrl;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense brute-force projection: enumerate every assignment of each variable
// to {free, at lower, at upper} (finite bounds only), solve the
// equality-constrained least-squares problem on the free variables, and keep
// the best feasible candidate.  Exponential, so only for small instances.
Eigen::VectorXd brute_force_projection(const Eigen::VectorXd& z, const Eigen::VectorXd& lo,
                                       const Eigen::VectorXd& hi, const Eigen::MatrixXd& B) {
  const int D = static_cast<int>(z.size());
  const int R = static_cast<int>(B.rows());
  std::vector<int> options(D);  // 1 = free only, 2 = +lower, 3 = +upper too
  for (int i = 0; i < D; ++i) {
    options[i] = 1;
    if (std::isfinite(lo(i))) ++options[i];
    if (std::isfinite(hi(i))) ++options[i];
  }

  Eigen::VectorXd best;
  double best_dist = kInf;
  std::vector<int> choice(D, 0);
  for (;;) {
    // decode: 0 = free; 1 = first finite bound; 2 = second finite bound
    Eigen::VectorXd y(D);
    std::vector<int> free_idx;
    bool valid = true;
    for (int i = 0; i < D; ++i) {
      if (choice[i] == 0) {
        free_idx.push_back(i);
      } else if (choice[i] == 1) {
        y(i) = std::isfinite(lo(i)) ? lo(i) : hi(i);
      } else {
        y(i) = hi(i);
        if (!std::isfinite(lo(i))) valid = false;  // only one finite bound exists
      }
    }
    if (valid) {
      const int F = static_cast<int>(free_idx.size());
      Eigen::VectorXd rhs_fix = Eigen::VectorXd::Zero(R);
      for (int i = 0; i < D; ++i)
        if (choice[i] != 0) rhs_fix += B.col(i) * y(i);
      // KKT: [I  Bf^T; Bf 0] [yF; mu] = [zF; -rhs_fix]
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(F + R, F + R);
      Eigen::VectorXd rhs(F + R);
      for (int a = 0; a < F; ++a) {
        K(a, a) = 1.0;
        for (int r = 0; r < R; ++r) {
          K(a, F + r) = B(r, free_idx[a]);
          K(F + r, a) = B(r, free_idx[a]);
        }
        rhs(a) = z(free_idx[a]);
      }
      for (int r = 0; r < R; ++r) rhs(F + r) = -rhs_fix(r);
      Eigen::VectorXd sol(F + R);
      if (F + R > 0) sol = K.completeOrthogonalDecomposition().solve(rhs);
      if (F + R == 0 || (K * sol - rhs).cwiseAbs().maxCoeff() <= 1e-9) {
        for (int a = 0; a < F; ++a) y(free_idx[a]) = sol(a);
        bool feasible = true;
        for (int i = 0; i < D && feasible; ++i)
          feasible = y(i) >= lo(i) - 1e-10 && y(i) <= hi(i) + 1e-10;
        if (feasible && (R == 0 || (B * y).cwiseAbs().maxCoeff() <= 1e-9)) {
          const double dist = (y - z).squaredNorm();
          if (dist < best_dist) {
            best_dist = dist;
            best = y;
          }
        }
      }
    }
    int i = 0;
    while (i < D && ++choice[i] >= options[i]) choice[i++] = 0;
    if (i == D) break;
  }
  REQUIRE(best_dist < kInf);
  return best;
}

PolyhedralNLP bounds_only_nlp(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  PolyhedralNLP nlp;
  nlp.dim = static_cast<int>(lo.size());
  nlp.lo = lo;
  nlp.hi = hi;
  return nlp;
}

// random feasible-by-construction instance: bounds always admit 0, B sparse
PolyhedralNLP random_instance(std::mt19937& rng, int max_dim = 15) {
  std::uniform_int_distribution<int> dim_dist(4, max_dim);
  std::uniform_real_distribution<double> mag(0.2, 2.0);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_real_distribution<double> pick(0.0, 1.0);

  PolyhedralNLP nlp;
  nlp.dim = dim_dist(rng);
  nlp.lo.resize(nlp.dim);
  nlp.hi.resize(nlp.dim);
  for (int i = 0; i < nlp.dim; ++i) {
    const double p = pick(rng);
    if (p < 0.3) {
      nlp.lo(i) = -mag(rng);
      nlp.hi(i) = mag(rng);
    } else if (p < 0.55) {
      nlp.lo(i) = -mag(rng);
      nlp.hi(i) = kInf;
    } else if (p < 0.8) {
      nlp.lo(i) = -kInf;
      nlp.hi(i) = mag(rng);
    } else {
      nlp.lo(i) = -kInf;
      nlp.hi(i) = kInf;
    }
  }
  std::uniform_int_distribution<int> rows_dist(0, 3);
  const int rows = rows_dist(rng);
  for (int r = 0; r < rows; ++r) {
    SparseRow row;
    std::uniform_int_distribution<int> nnz_dist(1, 3);
    const int nnz = nnz_dist(rng);
    for (int t = 0; t < nnz; ++t) {
      std::uniform_int_distribution<int> col_dist(0, nlp.dim - 1);
      row.entries.emplace_back(col_dist(rng), coef(rng));
    }
    nlp.equality.push_back(row);
  }
  return nlp;
}

Eigen::MatrixXd dense_equality(const PolyhedralNLP& nlp) {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<int>(nlp.equality.size()), nlp.dim);
  for (int r = 0; r < static_cast<int>(nlp.equality.size()); ++r)
    for (const auto& [c, v] : nlp.equality[r].entries) B(r, c) += v;
  return B;
}

// Exact enumeration oracle for the 1-D TV proximal map: every sign pattern
// of the jumps, fused blocks at pattern zeros.
Eigen::VectorXd tv_prox_oracle(const Eigen::VectorXd& y, double lam) {
  const int n = static_cast<int>(y.size());
  auto f_true = [&](const Eigen::VectorXd& x) {
    double v = 0.5 * (x - y).squaredNorm();
    for (int i = 0; i + 1 < n; ++i) v += lam * std::abs(x(i + 1) - x(i));
    return v;
  };
  Eigen::VectorXd best = y;
  double best_val = kInf;
  std::vector<int> pat(std::max(0, n - 1), 0);  // 0 fused, 1 up, 2 down
  for (;;) {
    std::vector<std::vector<int>> blocks{{0}};
    std::vector<int> jumps;
    for (int i = 0; i < n - 1; ++i) {
      if (pat[i] == 0)
        blocks.back().push_back(i + 1);
      else {
        jumps.push_back(pat[i] == 1 ? 1 : -1);
        blocks.push_back({i + 1});
      }
    }
    Eigen::VectorXd x(n);
    for (int b = 0; b < static_cast<int>(blocks.size()); ++b) {
      const int s_in = b > 0 ? jumps[b - 1] : 0;
      const int s_out = b + 1 < static_cast<int>(blocks.size()) ? jumps[b] : 0;
      double mean = 0.0;
      for (int idx : blocks[b]) mean += y(idx);
      mean /= blocks[b].size();
      const double t = mean + lam * (s_out - s_in) / blocks[b].size();
      for (int idx : blocks[b]) x(idx) = t;
    }
    const double v = f_true(x);
    if (v < best_val) {
      best_val = v;
      best = x;
    }
    int i = 0;
    while (i < n - 1 && ++pat[i] >= 3) pat[i++] = 0;
    if (i == n - 1 || n <= 1) break;
  }
  return best;
}

}  // namespace

TEST_CASE("projection is the identity on feasible points") {
  const FisheryParams params;
  const ControlProblem prob = fishery_problem(params);
  const Mesh mesh(params.T, 25);
  const PolyhedralNLP nlp = assemble_nlp(prob, mesh, TVWeights{Eigen::VectorXd::Constant(1, 0.1)});
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd u(1, 25);
  for (int k = 0; k < 25; ++k) u(0, k) = dist(rng);
  const Eigen::VectorXd z = DecomposedPoint::decompose(u).stacked();
  const Eigen::VectorXd y = project(nlp, z);
  CHECK((y - z).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + z.cwiseAbs().maxCoeff()));
}

TEST_CASE("projection with no equality rows is a clamp") {
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd hi = Eigen::VectorXd::Ones(3);
  Eigen::VectorXd z(3);
  z << -0.5, 0.3, 2.0;
  const Eigen::VectorXd y = project(bounds_only_nlp(lo, hi), z);
  Eigen::VectorXd expect(3);
  expect << 0.0, 0.3, 1.0;
  CHECK((y - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("projection matches the dense oracle on the 12-dim split polyhedron") {
  const FisheryParams params;
  const ControlProblem prob = fishery_problem(params);
  const Mesh mesh(params.T, 4);  // m=1, N=4: stacked dimension 10
  const PolyhedralNLP nlp = assemble_nlp(prob, mesh, TVWeights{Eigen::VectorXd::Constant(1, 0.1)});
  const Eigen::MatrixXd B = dense_equality(nlp);
  std::mt19937 rng(5);
  std::normal_distribution<double> dist(0.2, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    Eigen::VectorXd z(nlp.dim);
    for (int i = 0; i < nlp.dim; ++i) z(i) = dist(rng);
    const Eigen::VectorXd y = project(nlp, z);
    const Eigen::VectorXd o = brute_force_projection(z, nlp.lo, nlp.hi, B);
    CHECK((y - o).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("projection matches the dense oracle on random instances") {
  std::mt19937 rng(17);
  std::normal_distribution<double> dist(0.0, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    const PolyhedralNLP nlp = random_instance(rng, 12);
    Eigen::VectorXd z(nlp.dim);
    for (int i = 0; i < nlp.dim; ++i) z(i) = dist(rng);
    const Eigen::VectorXd y = project(nlp, z);
    const Eigen::VectorXd o = brute_force_projection(z, nlp.lo, nlp.hi, dense_equality(nlp));
    CHECK((y - o).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("projection is idempotent and feasible") {
  const FisheryParams params;
  const ControlProblem prob = fishery_problem(params);
  const Mesh mesh(params.T, 40);
  const PolyhedralNLP nlp = assemble_nlp(prob, mesh, TVWeights{Eigen::VectorXd::Constant(1, 0.1)});
  std::mt19937 rng(23);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd z(nlp.dim);
    for (int i = 0; i < nlp.dim; ++i) z(i) = dist(rng);
    const Eigen::VectorXd y = project(nlp, z);
    const Eigen::VectorXd y2 = project(nlp, y);
    CHECK((y2 - y).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + y.cwiseAbs().maxCoeff()));
    CHECK((y.array() >= nlp.lo.array()).all());
    CHECK((y.array() <= nlp.hi.array()).all());
    const Eigen::MatrixXd B = dense_equality(nlp);
    CHECK((B * y).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("solver lands on the interior optimum of a convex quadratic") {
  const FisheryParams params;
  const ControlProblem prob = fishery_problem(params);
  const Mesh mesh(params.T, 10);
  PolyhedralNLP nlp = assemble_nlp(prob, mesh, TVWeights{Eigen::VectorXd::Constant(1, 0.0)});

  // feasible target: a decomposed in-bounds control
  Eigen::MatrixXd uc(1, 10);
  for (int k = 0; k < 10; ++k) uc(0, k) = 0.25 + 0.05 * k;
  const Eigen::VectorXd c = DecomposedPoint::decompose(uc).stacked();
  nlp.objective = [c](const Eigen::VectorXd& z) { return (z - c).squaredNorm(); };
  nlp.gradient = [c](const Eigen::VectorXd& z, Eigen::VectorXd& g) { g = 2.0 * (z - c); };

  SolverConfig cfg;
  cfg.tol = 1e-11;
  const SolveReport rep = solve(nlp, Eigen::VectorXd::Zero(nlp.dim), cfg);
  CHECK(rep.reason == TerminationReason::converged);
  CHECK(rep.stationarity <= cfg.tol);
  CHECK((rep.minimizer - c).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("penalized harvesting solve on a coarse mesh behaves") {
  const FisheryParams params;
  const ControlProblem prob = fishery_problem(params);
  const Mesh mesh(params.T, 60);
  SolverConfig cfg;
  cfg.tol = 1e-8;
  const RunOutcome out = run_polyhedral(prob, mesh, Eigen::VectorXd::Constant(1, 1e-2),
                                        Eigen::MatrixXd::Zero(1, 60), cfg);
  CHECK(out.report.reason == TerminationReason::converged);
  // singular plateau then full effort
  const FisheryExact e = fishery_exact(params);
  double err = 0.0;
  for (int k = 0; k < 60; ++k)
    err += mesh.step() * std::abs(out.trajectory.controls(0, k) - e.u(mesh.node(k)));
  CHECK(err <= 0.3);
}

TEST_CASE("1-D TV proximal map matches exact enumeration") {
  std::mt19937 rng(31);
  std::normal_distribution<double> dist(0.0, 2.0);
  std::uniform_real_distribution<double> lam_dist(0.0, 2.5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = dist(rng);
    const double lam = lam_dist(rng);
    const Eigen::VectorXd x = tv1d_prox(y, lam);
    const Eigen::VectorXd o = tv_prox_oracle(y, lam);
    CHECK((x - o).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("box-composed proximal map respects both pieces") {
  Eigen::VectorXd y(6);
  y << -1.0, 2.0, 0.4, 0.6, 1.8, -0.3;
  const Eigen::VectorXd x = tv1d_prox_box(y, 0.2, 0.0, 1.0);
  CHECK((x.array() >= -1e-14).all());
  CHECK((x.array() <= 1.0 + 1e-14).all());
  // fixed point: another pass changes nothing
  const Eigen::VectorXd x2 = tv1d_prox_box(x, 0.0, 0.0, 1.0);
  CHECK((x2 - x).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("proximal backend with zero cost returns a constant control") {
  ControlProblem prob;
  prob.state_dim = 1;
  prob.control_dim = 1;
  prob.x0 = Eigen::VectorXd::Zero(1);
  prob.lower = Eigen::VectorXd::Constant(1, 0.0);
  prob.upper = Eigen::VectorXd::Constant(1, 1.0);
  prob.dynamics = [](const double*, const double*, double* out) { out[0] = 0.0; };
  prob.running_cost = [](const double*, const double*) { return 0.0; };
  prob.dynamics_dx = [](const double*, const double*, double* out) { out[0] = 0.0; };
  prob.dynamics_du = [](const double*, const double*, double* out) { out[0] = 0.0; };
  prob.cost_dx = [](const double*, const double*, double* out) { out[0] = 0.0; };
  prob.cost_du = [](const double*, const double*, double* out) { out[0] = 0.0; };

  const Mesh mesh(1.0, 20);
  Eigen::VectorXd u0(20);
  for (int k = 0; k < 20; ++k) u0(k) = 0.3 + 0.4 * std::sin(2.0 * k);
  SolverConfig cfg;
  cfg.tol = 1e-10;
  const ProxTVResult res = prox_tv_backend(prob, mesh, 0.1, cfg, u0);
  CHECK(res.reason == TerminationReason::converged);
  const Eigen::VectorXd d = res.u.tail(19) - res.u.head(19);
  CHECK(d.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("backends agree on a coarse harvesting instance") {
  const FisheryParams params;
  const ControlProblem prob = fishery_problem(params);
  const Mesh mesh(params.T, 60);
  SolverConfig cfg;
  cfg.tol = 1e-8;
  const RunOutcome poly = run_polyhedral(prob, mesh, Eigen::VectorXd::Constant(1, 1e-2),
                                         Eigen::MatrixXd::Zero(1, 60), cfg);
  const ProxTVResult prox =
      prox_tv_backend(prob, mesh, 1e-2, cfg, Eigen::VectorXd::Zero(60));
  double dist = 0.0;
  for (int k = 0; k < 60; ++k)
    dist += mesh.step() * std::abs(poly.trajectory.controls(0, k) - prox.u(k));
  CHECK(dist <= 0.01);
}
