#include "singctrl/tv.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "singctrl/errors.hpp"
#include "singctrl/ocp.hpp"

namespace singctrl {

TVWeights::TVWeights(Eigen::VectorXd r) : rho(std::move(r)) {
  for (int j = 0; j < rho.size(); ++j)
    if (!(rho(j) >= 0.0 && rho(j) < 1.0))
      throw ParameterDomainError("TV weight must lie in [0, 1)");
}

DifferenceMatrix DifferenceMatrix::bidiagonal(int N) {
  if (N < 2) throw ParameterDomainError("difference matrix needs at least two columns");
  DifferenceMatrix A;
  A.rows = N - 1;
  A.cols = N;
  A.row_entries.resize(N - 1);
  for (int r = 0; r < N - 1; ++r)
    A.row_entries[r] = {std::pair{r, -1.0}, std::pair{r + 1, 1.0}};
  return A;
}

double total_variation(const Eigen::VectorXd& u) {
  double v = 0.0;
  for (int k = 0; k + 1 < u.size(); ++k) v += std::abs(u(k + 1) - u(k));
  return v;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> tv_decompose(const Eigen::VectorXd& u) {
  const int n = static_cast<int>(u.size());
  Eigen::VectorXd zeta = Eigen::VectorXd::Zero(std::max(0, n - 1));
  Eigen::VectorXd iota = Eigen::VectorXd::Zero(std::max(0, n - 1));
  for (int k = 0; k + 1 < n; ++k) {
    const double d = u(k + 1) - u(k);
    if (d > 0.0)
      zeta(k) = d;
    else
      iota(k) = -d;
  }
  return {zeta, iota};
}

Eigen::VectorXd DecomposedPoint::stacked() const {
  const StackedLayout layout{channels(), intervals()};
  Eigen::VectorXd z(layout.dim());
  for (int j = 0; j < layout.m; ++j) {
    z.segment(layout.u_offset(j), layout.N) = u.row(j).transpose();
    z.segment(layout.zeta_offset(j), layout.N - 1) = zeta.row(j).transpose();
    z.segment(layout.iota_offset(j), layout.N - 1) = iota.row(j).transpose();
  }
  return z;
}

DecomposedPoint DecomposedPoint::from_stacked(const Eigen::VectorXd& z, int m, int N) {
  const StackedLayout layout{m, N};
  if (z.size() != layout.dim()) throw ContractViolation("stacked vector has wrong length");
  DecomposedPoint p;
  p.u.resize(m, N);
  p.zeta.resize(m, N - 1);
  p.iota.resize(m, N - 1);
  for (int j = 0; j < m; ++j) {
    p.u.row(j) = z.segment(layout.u_offset(j), N).transpose();
    p.zeta.row(j) = z.segment(layout.zeta_offset(j), N - 1).transpose();
    p.iota.row(j) = z.segment(layout.iota_offset(j), N - 1).transpose();
  }
  return p;
}

DecomposedPoint DecomposedPoint::decompose(const Eigen::MatrixXd& u) {
  DecomposedPoint p;
  const int m = static_cast<int>(u.rows());
  const int N = static_cast<int>(u.cols());
  p.u = u;
  p.zeta.resize(m, N - 1);
  p.iota.resize(m, N - 1);
  for (int j = 0; j < m; ++j) {
    auto [zeta, iota] = tv_decompose(u.row(j).transpose());
    p.zeta.row(j) = zeta.transpose();
    p.iota.row(j) = iota.transpose();
  }
  return p;
}

PolyhedralNLP assemble_nlp(const ControlProblem& problem, const Mesh& mesh,
                           const TVWeights& weights) {
  const int m = problem.control_dim;
  const int N = mesh.intervals;
  if (weights.rho.size() != m) throw ContractViolation("one TV weight per control channel");
  const StackedLayout layout{m, N};
  const double inf = std::numeric_limits<double>::infinity();

  PolyhedralNLP nlp;
  nlp.dim = layout.dim();
  nlp.lo.resize(nlp.dim);
  nlp.hi.resize(nlp.dim);
  for (int j = 0; j < m; ++j) {
    nlp.lo.segment(layout.u_offset(j), N).setConstant(problem.lower(j));
    nlp.hi.segment(layout.u_offset(j), N).setConstant(problem.upper(j));
    nlp.lo.segment(layout.zeta_offset(j), 2 * (N - 1)).setConstant(0.0);
    nlp.hi.segment(layout.zeta_offset(j), 2 * (N - 1)).setConstant(inf);
  }

  // Rows [A_j | -I | I]: u_{k+1} - u_k - zeta_k + iota_k = 0.
  nlp.equality.resize(m * (N - 1));
  for (int j = 0; j < m; ++j)
    for (int r = 0; r < N - 1; ++r) {
      auto& row = nlp.equality[j * (N - 1) + r];
      row.entries = {{layout.u_offset(j) + r, -1.0},
                     {layout.u_offset(j) + r + 1, 1.0},
                     {layout.zeta_offset(j) + r, -1.0},
                     {layout.iota_offset(j) + r, 1.0}};
    }

  // The closures share the problem by value; rollouts are recomputed per call
  // (the solver evaluates objective and gradient at distinct points anyway).
  auto shared = std::make_shared<ControlProblem>(problem);
  Eigen::VectorXd rho = weights.rho;

  nlp.objective = [shared, mesh, rho, layout](const Eigen::VectorXd& z) {
    DecomposedPoint p = DecomposedPoint::from_stacked(z, layout.m, layout.N);
    const Eigen::MatrixXd x = rollout_state(*shared, mesh, p.u);
    double J = discrete_cost(*shared, mesh, x, p.u);
    for (int j = 0; j < layout.m; ++j)
      J += rho(j) * (p.zeta.row(j).sum() + p.iota.row(j).sum());
    return J;
  };

  nlp.gradient = [shared, mesh, rho, layout](const Eigen::VectorXd& z, Eigen::VectorXd& g) {
    DecomposedPoint p = DecomposedPoint::from_stacked(z, layout.m, layout.N);
    const Eigen::MatrixXd x = rollout_state(*shared, mesh, p.u);
    const Eigen::MatrixXd lambda = backward_adjoint(*shared, mesh, x, p.u);
    const Eigen::MatrixXd gu = gradient_via_lagrangian(*shared, mesh, x, p.u, lambda);
    g.resize(layout.dim());
    for (int j = 0; j < layout.m; ++j) {
      g.segment(layout.u_offset(j), layout.N) = gu.row(j).transpose();
      g.segment(layout.zeta_offset(j), 2 * (layout.N - 1)).setConstant(rho(j));
    }
  };

  return nlp;
}

}  // namespace singctrl
