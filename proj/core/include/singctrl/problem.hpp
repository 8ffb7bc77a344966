#pragma once

#include <Eigen/Dense>
#include <functional>

namespace singctrl {

// Pointer-based callables keep the rollout/adjoint loops allocation-free.
// Layouts: dynamics_dx writes df_i/dx_l at out[i*n + l]; dynamics_du writes
// df_i/du_j at out[i*m + j].
using StageFn = std::function<void(const double* x, const double* u, double* out)>;
using StageCostFn = std::function<double(const double* x, const double* u)>;

// A control-affine optimal control problem: minimize the integral of g along
// trajectories of x' = f(x, u) with box-bounded controls.
struct ControlProblem {
  int state_dim = 0;
  int control_dim = 0;
  Eigen::VectorXd x0;
  Eigen::VectorXd lower;  // control bounds, length m
  Eigen::VectorXd upper;

  StageCostFn running_cost;
  StageFn dynamics;
  StageFn dynamics_dx;
  StageFn dynamics_du;
  StageFn cost_dx;
  StageFn cost_du;
};

// Discrete trajectory on a mesh with N intervals:
// states n x (N+1), adjoints n x N, controls m x N (constant per interval).
struct Trajectory {
  Eigen::MatrixXd states;
  Eigen::MatrixXd adjoints;
  Eigen::MatrixXd controls;
};

}  // namespace singctrl
