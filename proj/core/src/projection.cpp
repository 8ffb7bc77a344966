#include "singctrl/projection.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "singctrl/errors.hpp"

namespace singctrl {

namespace {

Eigen::SparseMatrix<double> rows_to_sparse(const std::vector<SparseRow>& rows, int cols) {
  std::vector<Eigen::Triplet<double>> trips;
  for (int r = 0; r < static_cast<int>(rows.size()); ++r)
    for (const auto& [c, v] : rows[r].entries) trips.emplace_back(r, c, v);
  Eigen::SparseMatrix<double> B(static_cast<int>(rows.size()), cols);
  B.setFromTriplets(trips.begin(), trips.end());
  return B;
}

}  // namespace

PolyhedronProjector::PolyhedronProjector(const PolyhedralNLP& nlp, double tol)
    : B_(rows_to_sparse(nlp.equality, nlp.dim)),
      lo_(nlp.lo),
      hi_(nlp.hi),
      mu_(Eigen::VectorXd::Zero(static_cast<int>(nlp.equality.size()))),
      tol_(tol) {
  BT_ = B_.transpose();
  // 1/L with L >= ||B||_2^2, for the guaranteed-descent fallback steps.
  double row_sum = 0.0, col_sum = 0.0;
  Eigen::VectorXd rs = Eigen::VectorXd::Zero(B_.rows()), cs = Eigen::VectorXd::Zero(B_.cols());
  for (int k = 0; k < B_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(B_, k); it; ++it) {
      rs(it.row()) += std::abs(it.value());
      cs(it.col()) += std::abs(it.value());
    }
  if (B_.rows() > 0) {
    row_sum = rs.maxCoeff();
    col_sum = cs.maxCoeff();
  }
  const double L = std::max(1e-12, row_sum * col_sum);
  fallback_step_ = 1.0 / L;
}

Eigen::VectorXd PolyhedronProjector::clamp(const Eigen::VectorXd& w) const {
  return w.cwiseMax(lo_).cwiseMin(hi_);
}

// Exact maximizer of the concave piecewise-quadratic dual along the ray
// mu + t * delta, t >= 0.  With zeta = z - B^T mu and w = B^T delta, the
// directional derivative is
//   g(t) = sum_i w_i * clamp(zeta_i - t w_i, lo_i, hi_i),
// piecewise linear and nonincreasing; segments are delimited by the t at
// which each coordinate enters or leaves its bounds.  Returns the smallest
// t where g crosses zero (found by an incremental breakpoint sweep), or
// throws if g stays positive forever (dual unbounded => infeasible set).
static double exact_ray_maximizer(const Eigen::VectorXd& zeta, const Eigen::VectorXd& w,
                                  const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                  double g0) {
  // events: (time, slope change); a coordinate contributes -w_i^2 to the
  // slope of g exactly while it is free.
  std::vector<std::pair<double, double>> events;
  double slope = 0.0;
  for (int i = 0; i < static_cast<int>(zeta.size()); ++i) {
    const double wi = w(i);
    if (wi == 0.0) continue;
    // position of the unclamped coordinate: zeta_i + t * s, s = -w_i
    const double s = -wi;
    double t_enter, t_exit;  // free interval in t (may be infinite)
    if (s > 0.0) {
      t_enter = std::isfinite(lo(i)) ? (lo(i) - zeta(i)) / s
                                     : -std::numeric_limits<double>::infinity();
      t_exit = std::isfinite(hi(i)) ? (hi(i) - zeta(i)) / s
                                    : std::numeric_limits<double>::infinity();
    } else {
      t_enter = std::isfinite(hi(i)) ? (hi(i) - zeta(i)) / s
                                     : -std::numeric_limits<double>::infinity();
      t_exit = std::isfinite(lo(i)) ? (lo(i) - zeta(i)) / s
                                    : std::numeric_limits<double>::infinity();
    }
    if (t_exit <= 0.0) continue;  // clamped for every t >= 0
    if (t_enter <= 0.0)
      slope -= wi * wi;  // free at t = 0+
    else
      events.emplace_back(t_enter, -wi * wi);
    if (std::isfinite(t_exit)) events.emplace_back(t_exit, wi * wi);
  }
  std::sort(events.begin(), events.end());

  double g = g0, t_cur = 0.0;
  for (const auto& [t_ev, dslope] : events) {
    if (slope < 0.0 && g + slope * (t_ev - t_cur) <= 0.0) return t_cur - g / slope;
    g += slope * (t_ev - t_cur);
    t_cur = t_ev;
    slope += dslope;
    if (g <= 0.0) return t_cur;
  }
  if (slope < 0.0 && g > 0.0) return t_cur - g / slope;
  if (g <= 0.0) return t_cur;
  throw InfeasibleProjection("projection dual is unbounded; constraint set appears infeasible");
}

Eigen::VectorXd PolyhedronProjector::project(const Eigen::VectorXd& z, bool warm) {
  if (B_.rows() == 0) return clamp(z);
  if (!warm) mu_.setZero();

  const double scale = 1.0 + z.cwiseAbs().maxCoeff();
  const double tol = tol_ * scale;
  const int max_newton = 500;

  // Maximize the concave dual
  //   q(mu) = 1/2 ||y(mu) - z||^2 + mu^T B y(mu),  y(mu) = clamp(z - B^T mu),
  // whose gradient is the equality residual r = B y(mu).  Directions come
  // from a regularized generalized Jacobian; the step length is the exact
  // ray maximizer, which walks across the flat segments that defeat
  // backtracking (all support variables of a row clamped).
  Eigen::VectorXd y = clamp(z - BT_ * mu_);
  Eigen::VectorXd r = B_ * y;

  for (int it = 0; it < max_newton; ++it) {
    if (r.cwiseAbs().maxCoeff() <= tol) return y;

    // B with clamped columns zeroed; J = Bf Bf^T + eps I.
    Eigen::SparseMatrix<double> Bf = B_;
    for (int k = 0; k < Bf.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator jt(Bf, k); jt; ++jt) {
        const int c = jt.col();
        if (y(c) <= lo_(c) || y(c) >= hi_(c)) jt.valueRef() = 0.0;
      }
    Eigen::SparseMatrix<double> J = (Bf * Eigen::SparseMatrix<double>(Bf.transpose())).pruned();
    const double eps = 1e-10;
    Eigen::SparseMatrix<double> I(J.rows(), J.cols());
    I.setIdentity();
    J = J + eps * I;

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(J);
    Eigen::VectorXd delta;
    if (ldlt.info() == Eigen::Success) delta = ldlt.solve(r);
    if (ldlt.info() != Eigen::Success || !delta.allFinite() || delta.dot(r) <= 0.0)
      delta = r;  // guaranteed ascent direction on the concave dual

    const Eigen::VectorXd zeta = z - BT_ * mu_;
    const Eigen::VectorXd w = BT_ * delta;
    const double g0 = delta.dot(r);
    if (g0 <= 0.0) return y;  // r is numerically zero along every direction
    const double t = exact_ray_maximizer(zeta, w, lo_, hi_, g0);
    if (t <= 0.0) return y;

    mu_ += t * delta;
    y = clamp(z - BT_ * mu_);
    r = B_ * y;

    if (!mu_.allFinite() || mu_.cwiseAbs().maxCoeff() > 1e14)
      throw InfeasibleProjection("projection dual diverged; constraint set appears infeasible");
  }
  throw InfeasibleProjection("projection failed to reach tolerance");
}

Eigen::VectorXd PolyhedronProjector::restrict_to_face(const Eigen::VectorXd& g,
                                                      const std::vector<char>& free_mask) {
  Eigen::VectorXd gf = g;
  for (int i = 0; i < gf.size(); ++i)
    if (!free_mask[i]) gf(i) = 0.0;
  if (B_.rows() == 0) return -gf;

  Eigen::SparseMatrix<double> Bf = B_;
  for (int k = 0; k < Bf.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator jt(Bf, k); jt; ++jt)
      if (!free_mask[jt.col()]) jt.valueRef() = 0.0;

  Eigen::SparseMatrix<double> J = (Bf * Eigen::SparseMatrix<double>(Bf.transpose())).pruned();
  Eigen::SparseMatrix<double> I(J.rows(), J.cols());
  I.setIdentity();
  J = J + 1e-12 * I;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(J);
  if (ldlt.info() != Eigen::Success)
    throw InternalConsistencyError("face restriction system could not be factorized");
  const Eigen::VectorXd nu = ldlt.solve(Bf * gf);
  Eigen::VectorXd d = -(gf - BT_ * nu);
  for (int i = 0; i < d.size(); ++i)
    if (!free_mask[i]) d(i) = 0.0;
  return d;
}

Eigen::VectorXd project(const PolyhedralNLP& nlp, const Eigen::VectorXd& z, double tol) {
  PolyhedronProjector proj(nlp, tol);
  return proj.project(z, false);
}

}  // namespace singctrl
