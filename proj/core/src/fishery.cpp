#include "singctrl/problems/fishery.hpp"

#include <cmath>

#include "singctrl/errors.hpp"

namespace singctrl {

bool FisheryParams::interior_singular_arc() const {
  return p * q - c > 0.0 && p * q - c < 2.0 * p * q * q * M;
}

bool FisheryParams::starts_on_singular_arc(double tol) const {
  return std::abs(x0 - (c + p * q) / (2.0 * p * q)) <= tol;
}

ControlProblem fishery_problem(const FisheryParams& params) {
  const double p = params.p, q = params.q, c = params.c;
  ControlProblem prob;
  prob.state_dim = 1;
  prob.control_dim = 1;
  prob.x0 = Eigen::VectorXd::Constant(1, params.x0);
  prob.lower = Eigen::VectorXd::Constant(1, 0.0);
  prob.upper = Eigen::VectorXd::Constant(1, params.M);
  prob.running_cost = [p, q, c](const double* x, const double* u) {
    return (c - p * q * x[0]) * u[0];
  };
  prob.dynamics = [q](const double* x, const double* u, double* out) {
    out[0] = x[0] * (1.0 - x[0]) - q * u[0] * x[0];
  };
  prob.dynamics_dx = [q](const double* x, const double* u, double* out) {
    out[0] = 1.0 - 2.0 * x[0] - q * u[0];
  };
  prob.dynamics_du = [q](const double* x, const double*, double* out) { out[0] = -q * x[0]; };
  prob.cost_dx = [p, q](const double*, const double* u, double* out) { out[0] = -p * q * u[0]; };
  prob.cost_du = [p, q, c](const double* x, const double*, double* out) {
    out[0] = c - p * q * x[0];
  };
  return prob;
}

FisheryExact fishery_exact(const FisheryParams& params) {
  if (!params.interior_singular_arc())
    throw ParameterDomainError("fishery: singular effort not strictly inside (0, M)");
  if (!params.starts_on_singular_arc(1e-9))
    throw ParameterDomainError("fishery: x0 must equal the singular stock level");

  const double p = params.p, q = params.q, c = params.c, M = params.M, T = params.T;
  const double pq = p * q;

  FisheryExact e;
  e.params = params;
  e.u_s = (pq - c) / (2.0 * pq * q);
  e.x_s = (c + pq) / (2.0 * pq);
  e.lambda_s = p * (c - pq) / (c + pq);
  e.alpha = 1.0 - q * M;
  e.gamma = std::abs(2.0 * e.alpha * pq - c - pq);

  const double num = -e.gamma * (pq - c) - 2.0 * e.gamma * c * q * M + q * M * (c + pq) * (c + pq);
  const double den = (c + pq) * ((c - pq) + 2.0 * p * q * q * M - e.gamma * q * M);
  const double ratio = num / den;
  if (!(ratio > 0.0)) throw ParameterDomainError("fishery: switch-time formula out of domain");
  e.t_star = T - std::log(ratio) / (1.0 - q * M);
  e.K = (c + pq) * std::exp(-e.alpha * e.t_star) / e.gamma;
  return e;
}

double FisheryExact::u(double t) const { return t < t_star ? u_s : params.M; }

double FisheryExact::x(double t) const {
  if (t < t_star) return x_s;
  const double ea = std::exp(alpha * t);
  return alpha * K * ea / (-1.0 + K * ea);
}

double FisheryExact::lambda(double t) const {
  if (t < t_star) return lambda_s;
  const double p = params.p, q = params.q, c = params.c, M = params.M;
  const double pq = p * q;
  const double es = std::exp(alpha * t_star);
  const double et = std::exp(alpha * t);
  const double w = (-1.0 + K * et) / (-1.0 + K * es);
  return w * w * std::exp(alpha * (t_star - t)) *
         (p * (c - pq) / (c + pq) +
          (pq * M / alpha) * (1.0 / w) * (std::exp(alpha * (t - t_star)) - 1.0));
}

double FisheryExact::switching(double t) const {
  const double xs = x(t);
  return params.c - params.p * params.q * xs - params.q * lambda(t) * xs;
}

Eigen::VectorXd fishery_switching(const FisheryParams& params, const Eigen::MatrixXd& x,
                                  const Eigen::MatrixXd& lambda) {
  const int N = static_cast<int>(lambda.cols());
  Eigen::VectorXd psi(N);
  for (int k = 0; k < N; ++k)
    psi(k) = params.c - params.p * params.q * x(0, k) - params.q * lambda(0, k) * x(0, k);
  return psi;
}

}  // namespace singctrl
