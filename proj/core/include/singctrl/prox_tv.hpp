#pragma once

#include <Eigen/Dense>

#include "singctrl/mesh.hpp"
#include "singctrl/problem.hpp"
#include "singctrl/solver.hpp"

namespace singctrl {

// Exact proximal map of lam * TV: argmin_x 1/2 ||x - y||^2 + lam * V(x),
// computed by the direct taut-string scan in O(n).
Eigen::VectorXd tv1d_prox(const Eigen::VectorXd& y, double lam);

// prox of lam*TV plus the box indicator [lo, hi], via alternating
// TV-prox / box-projection with Dykstra corrections to a joint fixed point.
Eigen::VectorXd tv1d_prox_box(const Eigen::VectorXd& y, double lam, double lo, double hi);

// Independent single-channel backend: proximal gradient on
// J(u) + rho * V(u) over the control box.  Used to cross-check the
// polyhedral solver; not the primary path.
struct ProxTVResult {
  Eigen::VectorXd u;
  double objective = 0.0;      // J + rho V at exit
  double stationarity = 0.0;   // fixed-point residual of the unit prox step
  long iters = 0;
  TerminationReason reason = TerminationReason::max_iters;
};

ProxTVResult prox_tv_backend(const ControlProblem& problem, const Mesh& mesh, double rho,
                             const SolverConfig& cfg, const Eigen::VectorXd& u0);

}  // namespace singctrl
