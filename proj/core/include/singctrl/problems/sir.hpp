#pragma once

#include <Eigen/Dense>
#include <utility>

#include "singctrl/mesh.hpp"
#include "singctrl/problem.hpp"

namespace singctrl {

// SIR epidemic with vaccination u and treatment v (both in [0, max]):
//   S' = gamma N - nu S - beta I S / N + rho_r R - kappa S u
//   I' = beta I S / N - (nu + mu + alpha) I - eta I v
//   R' = -nu R - rho_r R + kappa S u + alpha I + eta I v,   N = S + I + R,
// minimize integral of a I + b u + c v.
struct SirParams {
  double gamma = 0.00683;   // birth rate
  double nu = 0.00188;      // natural death rate
  double beta = 0.2426;     // transmission rate
  double mu = 0.005;        // disease-induced death rate
  double alpha = 0.00002;   // recovery rate
  double rho_r = 0.007;     // resensitization rate
  double kappa = 0.3;       // vaccination effectiveness
  double eta = 0.1;         // treatment effectiveness
  double a = 5.0;           // infection weight
  double b = 50.0;          // vaccination weight
  double c = 300.0;         // treatment weight
  double T = 50.0;
  double u_max = 1.0;
  double v_max = 1.0;
  double S0 = 1000.0;
  double I0 = 10.0;
  double R0 = 0.0;
};

ControlProblem sir_problem(const SirParams& params);

// Phi_u,k = b + (lambda_R - lambda_S) kappa S_k,
// Phi_v,k = c + (lambda_R - lambda_I) eta I_k  (gradient entries over h).
std::pair<Eigen::VectorXd, Eigen::VectorXd> sir_switching(const SirParams& params,
                                                          const Trajectory& traj);

}  // namespace singctrl
