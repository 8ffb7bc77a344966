#include "singctrl/problems/sir.hpp"

#include <limits>

#include "singctrl/errors.hpp"

namespace singctrl {

ControlProblem sir_problem(const SirParams& prm) {
  if (!(prm.S0 + prm.I0 + prm.R0 > 0.0))
    throw ParameterDomainError("sir: total population must be positive");
  if (!(prm.u_max > 0.0 && prm.v_max > 0.0))
    throw ParameterDomainError("sir: control caps must be positive");

  ControlProblem prob;
  prob.state_dim = 3;
  prob.control_dim = 2;
  prob.x0 = Eigen::Vector3d(prm.S0, prm.I0, prm.R0);
  prob.lower = Eigen::VectorXd::Zero(2);
  prob.upper = (Eigen::VectorXd(2) << prm.u_max, prm.v_max).finished();

  prob.running_cost = [prm](const double* x, const double* u) {
    return prm.a * x[1] + prm.b * u[0] + prm.c * u[1];
  };
  prob.dynamics = [prm](const double* x, const double* u, double* out) {
    const double S = x[0], I = x[1], R = x[2];
    const double N = S + I + R;
    if (!(N > 0.0)) {  // poison the step so the rollout guard reports it
      out[0] = out[1] = out[2] = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    const double inc = prm.beta * I * S / N;
    out[0] = prm.gamma * N - prm.nu * S - inc + prm.rho_r * R - prm.kappa * S * u[0];
    out[1] = inc - (prm.nu + prm.mu + prm.alpha) * I - prm.eta * I * u[1];
    out[2] = -prm.nu * R - prm.rho_r * R + prm.kappa * S * u[0] + prm.alpha * I +
             prm.eta * I * u[1];
  };
  prob.dynamics_dx = [prm](const double* x, const double* u, double* out) {
    const double S = x[0], I = x[1], R = x[2];
    const double N = S + I + R;
    const double N2 = N * N;
    // partials of the incidence term beta I S / N
    const double dS = prm.beta * I / N - prm.beta * I * S / N2;
    const double dI = prm.beta * S / N - prm.beta * I * S / N2;
    const double dR = -prm.beta * I * S / N2;
    out[0] = prm.gamma - prm.nu - dS - prm.kappa * u[0];  // dS'/dS
    out[1] = prm.gamma - dI;                              // dS'/dI
    out[2] = prm.gamma - dR + prm.rho_r;                  // dS'/dR
    out[3] = dS;                                                          // dI'/dS
    out[4] = dI - (prm.nu + prm.mu + prm.alpha) - prm.eta * u[1];         // dI'/dI
    out[5] = dR;                                                          // dI'/dR
    out[6] = prm.kappa * u[0];                                            // dR'/dS
    out[7] = prm.alpha + prm.eta * u[1];                                  // dR'/dI
    out[8] = -prm.nu - prm.rho_r;                                         // dR'/dR
  };
  prob.dynamics_du = [prm](const double* x, const double*, double* out) {
    const double S = x[0], I = x[1];
    out[0] = -prm.kappa * S;  // dS'/du
    out[1] = 0.0;             // dS'/dv
    out[2] = 0.0;             // dI'/du
    out[3] = -prm.eta * I;    // dI'/dv
    out[4] = prm.kappa * S;   // dR'/du
    out[5] = prm.eta * I;     // dR'/dv
  };
  prob.cost_dx = [prm](const double*, const double*, double* out) {
    out[0] = 0.0;
    out[1] = prm.a;
    out[2] = 0.0;
  };
  prob.cost_du = [prm](const double*, const double*, double* out) {
    out[0] = prm.b;
    out[1] = prm.c;
  };
  return prob;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> sir_switching(const SirParams& prm,
                                                          const Trajectory& traj) {
  const int N = static_cast<int>(traj.adjoints.cols());
  Eigen::VectorXd phi_u(N), phi_v(N);
  for (int k = 0; k < N; ++k) {
    const double S = traj.states(0, k), I = traj.states(1, k);
    const double lS = traj.adjoints(0, k), lI = traj.adjoints(1, k), lR = traj.adjoints(2, k);
    phi_u(k) = prm.b + (lR - lS) * prm.kappa * S;
    phi_v(k) = prm.c + (lR - lI) * prm.eta * I;
  }
  return {phi_u, phi_v};
}

}  // namespace singctrl
