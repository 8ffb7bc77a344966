#include "singctrl/ocp.hpp"

#include <cmath>

#include "singctrl/errors.hpp"

namespace singctrl {

namespace {

void check_controls(const ControlProblem& p, const Mesh& mesh, const Eigen::MatrixXd& u) {
  if (u.rows() != p.control_dim || u.cols() != mesh.intervals)
    throw ContractViolation("control matrix must be m x N");
}

void check_states(const ControlProblem& p, const Mesh& mesh, const Eigen::MatrixXd& x) {
  if (x.rows() != p.state_dim || x.cols() != mesh.intervals + 1)
    throw ContractViolation("state matrix must be n x (N+1)");
}

}  // namespace

Eigen::MatrixXd rollout_state(const ControlProblem& p, const Mesh& mesh, const Eigen::MatrixXd& u) {
  check_controls(p, mesh, u);
  const int n = p.state_dim;
  const int N = mesh.intervals;
  const double h = mesh.step();

  Eigen::MatrixXd x(n, N + 1);
  x.col(0) = p.x0;
  Eigen::VectorXd f(n);
  for (int k = 0; k < N; ++k) {
    p.dynamics(x.col(k).data(), u.col(k).data(), f.data());
    x.col(k + 1) = x.col(k) + h * f;
    if (!x.col(k + 1).allFinite()) throw RolloutDiverged(k + 1);
  }
  return x;
}

Eigen::MatrixXd backward_adjoint(const ControlProblem& p, const Mesh& mesh,
                                 const Eigen::MatrixXd& x, const Eigen::MatrixXd& u) {
  check_controls(p, mesh, u);
  check_states(p, mesh, x);
  const int n = p.state_dim;
  const int N = mesh.intervals;
  const double h = mesh.step();

  Eigen::MatrixXd lambda(n, N);
  lambda.col(N - 1).setZero();
  Eigen::VectorXd gx(n);
  Eigen::MatrixXd fx(n, n);  // raw buffer, df_l/dx_i at [l*n + i]
  for (int k = N - 1; k >= 1; --k) {
    p.cost_dx(x.col(k).data(), u.col(k).data(), gx.data());
    p.dynamics_dx(x.col(k).data(), u.col(k).data(), fx.data());
    for (int i = 0; i < n; ++i) {
      double acc = lambda(i, k) + h * gx(i);
      for (int l = 0; l < n; ++l) acc += h * lambda(l, k) * fx.data()[l * n + i];
      lambda(i, k - 1) = acc;
    }
  }
  return lambda;
}

double discrete_cost(const ControlProblem& p, const Mesh& mesh, const Eigen::MatrixXd& x,
                     const Eigen::MatrixXd& u) {
  check_controls(p, mesh, u);
  check_states(p, mesh, x);
  const int N = mesh.intervals;
  const double h = mesh.step();
  double J = 0.0;
  for (int k = 0; k < N; ++k) {
    const double g = p.running_cost(x.col(k).data(), u.col(k).data());
    if (!std::isfinite(g)) throw CostEvaluationError(k);
    J += h * g;
  }
  return J;
}

Eigen::MatrixXd gradient_via_lagrangian(const ControlProblem& p, const Mesh& mesh,
                                        const Eigen::MatrixXd& x, const Eigen::MatrixXd& u,
                                        const Eigen::MatrixXd& lambda) {
  check_controls(p, mesh, u);
  check_states(p, mesh, x);
  if (lambda.rows() != p.state_dim || lambda.cols() != mesh.intervals)
    throw ContractViolation("adjoint matrix must be n x N");
  const int n = p.state_dim;
  const int m = p.control_dim;
  const int N = mesh.intervals;
  const double h = mesh.step();

  Eigen::MatrixXd grad(m, N);
  Eigen::VectorXd gu(m);
  Eigen::MatrixXd fu(n, m);  // raw buffer, df_i/du_j at [i*m + j]
  for (int k = 0; k < N; ++k) {
    p.cost_du(x.col(k).data(), u.col(k).data(), gu.data());
    p.dynamics_du(x.col(k).data(), u.col(k).data(), fu.data());
    for (int j = 0; j < m; ++j) {
      double acc = h * gu(j);
      for (int i = 0; i < n; ++i) acc += h * lambda(i, k) * fu.data()[i * m + j];
      grad(j, k) = acc;
    }
  }
  return grad;
}

}  // namespace singctrl
