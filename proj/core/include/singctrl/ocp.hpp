#pragma once

#include "singctrl/mesh.hpp"
#include "singctrl/problem.hpp"

namespace singctrl {

// Forward Euler: x_{k+1} = x_k + h f(x_k, u_k), x_0 given.
Eigen::MatrixXd rollout_state(const ControlProblem& problem, const Mesh& mesh,
                              const Eigen::MatrixXd& u);

// Discrete adjoints lambda (n x N) with lambda_{N-1} = 0 and, for k = N-1..1,
//   lambda_{k-1} = lambda_k + h dg/dx(x_k, u_k) + h (df/dx(x_k, u_k))^T lambda_k.
Eigen::MatrixXd backward_adjoint(const ControlProblem& problem, const Mesh& mesh,
                                 const Eigen::MatrixXd& x, const Eigen::MatrixXd& u);

// Left-rectangle cost J = sum_k h g(x_k, u_k), k = 0..N-1.
double discrete_cost(const ControlProblem& problem, const Mesh& mesh,
                     const Eigen::MatrixXd& x, const Eigen::MatrixXd& u);

// Gradient of the discrete cost with respect to the controls, assembled from
// the adjoints: entry (j,k) = h dg/du_j + h sum_i lambda_{i,k} df_i/du_j.
Eigen::MatrixXd gradient_via_lagrangian(const ControlProblem& problem, const Mesh& mesh,
                                        const Eigen::MatrixXd& x, const Eigen::MatrixXd& u,
                                        const Eigen::MatrixXd& lambda);

}  // namespace singctrl
