#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "singctrl/nlp.hpp"

namespace singctrl {

// Euclidean projection onto {lo <= y <= hi, B y = 0} via a damped semismooth
// Newton method on the equality multipliers: y(mu) = clamp(z - B^T mu), with
// the Jacobian B D B^T assembled over the currently free variables.  For the
// TV polyhedron the system is tridiagonal per channel.
//
// A projector instance owns its multiplier state so that repeated calls from
// a solver loop are warm-started; distinct instances are independent, which
// keeps concurrent solves safe.
class PolyhedronProjector {
 public:
  PolyhedronProjector(const PolyhedralNLP& nlp, double tol = 1e-11);

  // warm = true reuses the multipliers from the previous call.
  Eigen::VectorXd project(const Eigen::VectorXd& z, bool warm = false);

  // d = argmin ||d + g||^2 subject to B d = 0 and d_i = 0 wherever
  // free[i] == 0; used for equality-constrained steps within an active face.
  Eigen::VectorXd restrict_to_face(const Eigen::VectorXd& g, const std::vector<char>& free_mask);

  double tolerance() const { return tol_; }

 private:
  Eigen::VectorXd clamp(const Eigen::VectorXd& w) const;

  Eigen::SparseMatrix<double> B_, BT_;
  Eigen::VectorXd lo_, hi_, mu_;
  double tol_;
  double fallback_step_;
};

// One-shot convenience wrapper (cold start).
Eigen::VectorXd project(const PolyhedralNLP& nlp, const Eigen::VectorXd& z, double tol = 1e-11);

}  // namespace singctrl
