#pragma once

#include <Eigen/Dense>

#include "singctrl/mesh.hpp"
#include "singctrl/problem.hpp"

namespace singctrl {

// Logistic fish stock harvested at effort u in [0, M]:
//   x' = x(1 - x) - q u x,  minimize  integral of (c - p q x) u.
struct FisheryParams {
  double T = 10.0;
  double p = 2.0;   // price per unit harvest
  double q = 2.0;   // catchability
  double c = 1.0;   // cost per unit effort
  double M = 1.0;   // max effort
  double x0 = 0.625;

  // 0 < pq - c < 2 p q^2 M keeps the singular effort strictly inside (0, M).
  bool interior_singular_arc() const;
  // Starting on the singular arc requires x0 = (c + pq) / (2pq).
  bool starts_on_singular_arc(double tol = 1e-12) const;
};

// Closed-form optimal solution: singular arc at constant (u_s, x_s, lambda_s)
// on [0, t_star), then full effort u = M to the horizon.
struct FisheryExact {
  FisheryParams params;
  double u_s = 0.0;       // (pq - c) / (2 p q^2)
  double x_s = 0.0;       // (c + pq) / (2 p q)
  double lambda_s = 0.0;  // p (c - pq) / (c + pq)
  double t_star = 0.0;
  double alpha = 0.0;  // 1 - q M
  double gamma = 0.0;  // |2 alpha p q - c - p q|
  double K = 0.0;      // (c + pq) e^{-alpha t_star} / gamma

  double u(double t) const;
  double x(double t) const;
  double lambda(double t) const;
  // switching value c - p q x - q lambda x along the exact solution
  double switching(double t) const;
};

ControlProblem fishery_problem(const FisheryParams& params);
FisheryExact fishery_exact(const FisheryParams& params);

// psi_k = c - p q x_k - q lambda_k x_k at every interval.
Eigen::VectorXd fishery_switching(const FisheryParams& params, const Eigen::MatrixXd& x,
                                  const Eigen::MatrixXd& lambda);

}  // namespace singctrl
