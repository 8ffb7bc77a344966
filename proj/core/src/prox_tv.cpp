#include "singctrl/prox_tv.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "singctrl/errors.hpp"
#include "singctrl/ocp.hpp"
#include "singctrl/tv.hpp"

namespace singctrl {

// Direct 1-D TV denoising (taut-string equivalent), single forward scan with
// segment fusion; runs in O(n).
Eigen::VectorXd tv1d_prox(const Eigen::VectorXd& y, double lam) {
  const int n = static_cast<int>(y.size());
  Eigen::VectorXd x(n);
  if (n == 0) return x;
  if (n == 1 || lam <= 0.0) {
    x = y;
    return x;
  }

  int k = 0, k0 = 0, km = 0, kp = 0;
  double vmin = y(0) - lam, vmax = y(0) + lam;
  double umin = lam, umax = -lam;

  for (;;) {
    if (k == n - 1) {
      if (umin < 0.0) {
        do x(k0++) = vmin;
        while (k0 <= km);
        k = km = kp = k0;
        vmin = y(k);
        umin = lam;
        umax = y(k) + lam - vmax;
      } else if (umax > 0.0) {
        do x(k0++) = vmax;
        while (k0 <= kp);
        k = km = kp = k0;
        vmax = y(k);
        umax = -lam;
        umin = y(k) - lam - vmin;
      } else {
        vmin += umin / (k - k0 + 1);
        for (int i = k0; i < n; ++i) x(i) = vmin;
        return x;
      }
      continue;
    }
    if (y(k + 1) + umin < vmin - lam) {
      // Negative jump: flush the current minorant segment.
      do x(k0++) = vmin;
      while (k0 <= km);
      k = km = kp = k0;
      vmin = y(k);
      vmax = y(k) + 2.0 * lam;
      umin = lam;
      umax = -lam;
    } else if (y(k + 1) + umax > vmax + lam) {
      // Positive jump: flush the current majorant segment.
      do x(k0++) = vmax;
      while (k0 <= kp);
      k = km = kp = k0;
      vmin = y(k) - 2.0 * lam;
      vmax = y(k);
      umin = lam;
      umax = -lam;
    } else {
      ++k;
      umin += y(k) - vmin;
      umax += y(k) - vmax;
      if (umin >= lam) {
        vmin += (umin - lam) / (k - k0 + 1);
        umin = lam;
        km = k;
      }
      if (umax <= -lam) {
        vmax += (umax + lam) / (k - k0 + 1);
        umax = -lam;
        kp = k;
      }
    }
  }
}

Eigen::VectorXd tv1d_prox_box(const Eigen::VectorXd& y, double lam, double lo, double hi) {
  // Dykstra's alternating scheme for prox of (lam*TV + box indicator).
  Eigen::VectorXd x = y;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(y.size());
  Eigen::VectorXd q = Eigen::VectorXd::Zero(y.size());
  for (int it = 0; it < 500; ++it) {
    const Eigen::VectorXd w = tv1d_prox(x + p, lam);
    p = x + p - w;
    const Eigen::VectorXd v = (w + q).cwiseMax(lo).cwiseMin(hi);
    q = w + q - v;
    const double gap = (v - w).cwiseAbs().maxCoeff();
    x = v;
    if (gap <= 1e-14 * (1.0 + y.cwiseAbs().maxCoeff())) break;
  }
  return x;
}

ProxTVResult prox_tv_backend(const ControlProblem& problem, const Mesh& mesh, double rho,
                             const SolverConfig& cfg, const Eigen::VectorXd& u0) {
  if (problem.control_dim != 1)
    throw ContractViolation("prox-TV backend handles a single control channel");
  const int N = mesh.intervals;
  const double lo = problem.lower(0), hi = problem.upper(0);

  auto objective = [&](const Eigen::VectorXd& u) {
    try {
      const Eigen::MatrixXd x = rollout_state(problem, mesh, u.transpose());
      return discrete_cost(problem, mesh, x, u.transpose()) + rho * total_variation(u);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  auto gradient = [&](const Eigen::VectorXd& u) {
    const Eigen::MatrixXd x = rollout_state(problem, mesh, u.transpose());
    const Eigen::MatrixXd lambda = backward_adjoint(problem, mesh, x, u.transpose());
    return Eigen::VectorXd(
        gradient_via_lagrangian(problem, mesh, x, u.transpose(), lambda).row(0).transpose());
  };

  ProxTVResult res;
  Eigen::VectorXd u = u0.cwiseMax(lo).cwiseMin(hi);
  double F = objective(u);
  Eigen::VectorXd g = gradient(u);
  double alpha = 1.0 / std::max(1e-12, g.cwiseAbs().maxCoeff());

  for (long it = 0; it < cfg.max_iters; ++it) {
    ++res.iters;
    // Fixed-point residual of the unit-step prox-gradient map.
    const Eigen::VectorXd fix = tv1d_prox_box(u - g, rho, lo, hi);
    res.stationarity = (fix - u).cwiseAbs().maxCoeff();
    if (res.stationarity <= cfg.tol) {
      res.reason = TerminationReason::converged;
      break;
    }

    alpha = std::clamp(alpha, cfg.bb_min, cfg.bb_max);
    bool accepted = false;
    Eigen::VectorXd ut;
    double Ft = 0.0;
    for (int ls = 0; ls < 80; ++ls) {
      ut = tv1d_prox_box(u - alpha * g, alpha * rho, lo, hi);
      Ft = objective(ut);
      const double dist2 = (ut - u).squaredNorm();
      if (dist2 == 0.0) break;
      if (Ft <= F - cfg.armijo_sigma / alpha * dist2) {
        accepted = true;
        break;
      }
      alpha *= cfg.backtrack;
      if (alpha < 1e-18) break;
    }
    if (!accepted) {
      res.reason = TerminationReason::line_search_failure;
      break;
    }
    const Eigen::VectorXd gnew = gradient(ut);
    const Eigen::VectorXd s = ut - u;
    const Eigen::VectorXd yv = gnew - g;
    const double sy = s.dot(yv);
    alpha = sy > 0.0 ? s.squaredNorm() / sy : alpha * 2.0;
    u = ut;
    F = Ft;
    g = gnew;
  }

  res.u = u;
  res.objective = F;
  return res;
}

}  // namespace singctrl
