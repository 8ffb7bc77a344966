#include "singctrl/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "singctrl/errors.hpp"
#include "singctrl/projection.hpp"

namespace singctrl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Objective evaluation that treats domain failures (diverged rollout,
// log of a nonpositive state) as +inf so the line search backs off.
double safe_objective(const PolyhedralNLP& nlp, const Eigen::VectorXd& z) {
  try {
    const double f = nlp.objective(z);
    return std::isfinite(f) ? f : kInf;
  } catch (const Error&) {
    return kInf;
  }
}

std::vector<char> free_mask(const PolyhedralNLP& nlp, const Eigen::VectorXd& z) {
  std::vector<char> mask(nlp.dim);
  for (int i = 0; i < nlp.dim; ++i) mask[i] = (z(i) > nlp.lo(i) && z(i) < nlp.hi(i)) ? 1 : 0;
  return mask;
}

double equality_residual(const PolyhedralNLP& nlp, const Eigen::VectorXd& z) {
  double r = 0.0;
  for (const auto& row : nlp.equality) {
    double s = 0.0;
    for (const auto& [c, v] : row.entries) s += v * z(c);
    r = std::max(r, std::abs(s));
  }
  return r;
}

// Endgame refinement for the rounding-noise regime: near a minimizer the
// attainable objective decrease is quadratic in the remaining stationarity
// residual and disappears below the evaluation noise of f, while gradients
// are still exact to machine precision.  Runs conjugate-gradient steps on
// the current active face with the step length taken from a finite-difference
// directional curvature, and judges progress by the face-restricted gradient
// residual instead of the objective.  Returns the number of steps taken.
long face_polish(const PolyhedralNLP& nlp, PolyhedronProjector& proj, double proj_tol,
                 const SolverConfig& cfg, Eigen::VectorXd& z, double& f, Eigen::VectorXd& g) {
  Eigen::VectorXd d_prev, pg_prev;
  bool have_prev = false;
  double best_pg = kInf;
  Eigen::VectorXd z_best = z;
  double f_best = f;
  int stall = 0;
  long steps = 0;
  Eigen::VectorXd g_probe(nlp.dim);

  for (int it = 0; it < 500; ++it) {
    const std::vector<char> mask = free_mask(nlp, z);
    const Eigen::VectorXd d0 = proj.restrict_to_face(g, mask);  // descent direction
    const Eigen::VectorXd pg = -d0;
    const double pg_norm = pg.cwiseAbs().maxCoeff();
    // A measurable objective decrease outranks the residual; when f is
    // indistinguishable, the smaller face residual defines the better point.
    const double f_slack = 1e-11 * (1.0 + std::abs(f_best));
    bool improved = false;
    if (f < f_best - f_slack) {
      improved = true;
    } else if (f <= f_best + f_slack && pg_norm < 0.99 * best_pg) {
      improved = true;
    }
    if (improved) {
      z_best = z;
      f_best = f;
      best_pg = pg_norm;
      stall = 0;
    } else if (++stall > 30) {
      break;
    }
    if (pg_norm <= 0.25 * cfg.tol) break;

    Eigen::VectorXd d;
    if (have_prev) {
      const double beta =
          std::max(0.0, pg.dot(pg - pg_prev) / std::max(1e-300, pg_prev.squaredNorm()));
      d = d0 + beta * d_prev;
      if (d.dot(pg) >= 0.0) d = d0;
    } else {
      d = d0;
    }
    const double gd = g.dot(d);
    if (gd >= 0.0) break;
    const double dnorm = d.cwiseAbs().maxCoeff();
    if (dnorm == 0.0) break;

    // Longest feasible step inside the box along d.
    double abar = kInf;
    for (int i = 0; i < nlp.dim; ++i) {
      if (!mask[i] || d(i) == 0.0) continue;
      if (d(i) > 0.0 && std::isfinite(nlp.hi(i))) abar = std::min(abar, (nlp.hi(i) - z(i)) / d(i));
      if (d(i) < 0.0 && std::isfinite(nlp.lo(i))) abar = std::min(abar, (nlp.lo(i) - z(i)) / d(i));
    }

    // Directional curvature from a gradient difference at a probe point that
    // stays strictly inside the current face.
    const double eps_probe =
        std::min(1e-5 * (1.0 + z.cwiseAbs().maxCoeff()) / dnorm, 0.5 * abar);
    if (!(eps_probe > 0.0) || !std::isfinite(eps_probe)) break;
    nlp.gradient(z + eps_probe * d, g_probe);
    const double hdd = (g_probe - g).dot(d) / eps_probe;

    double alpha = hdd > 0.0 ? -gd / hdd : abar;
    if (!(alpha > 0.0) || !std::isfinite(alpha)) break;
    const bool hit_bound = alpha >= abar;
    alpha = std::min(alpha, abar);

    Eigen::VectorXd zt = (z + alpha * d).cwiseMax(nlp.lo).cwiseMin(nlp.hi);
    const double ft = safe_objective(nlp, zt);
    const double noise = 1e-13 * (1.0 + std::abs(f));
    if (ft > f + 100.0 * noise) break;  // genuine ascent: model is wrong here

    z = zt;
    f = ft;
    nlp.gradient(z, g);
    ++steps;

    const double scale = 1.0 + z.cwiseAbs().maxCoeff();
    if (equality_residual(nlp, z) > 10.0 * proj_tol * scale) {
      z = proj.project(z, true);
      f = safe_objective(nlp, z);
      nlp.gradient(z, g);
      have_prev = false;
      continue;
    }
    if (hit_bound) {
      have_prev = false;
      continue;
    }
    d_prev = d;
    pg_prev = pg;
    have_prev = true;
  }
  z = z_best;
  f = f_best;
  nlp.gradient(z, g);
  return steps;
}

}  // namespace

std::string to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::converged: return "converged";
    case TerminationReason::max_iters: return "max_iters";
    case TerminationReason::line_search_failure: return "line_search_failure";
  }
  return "unknown";
}

SolveReport solve(const PolyhedralNLP& nlp, const Eigen::VectorXd& z0, const SolverConfig& cfg) {
  if (!(cfg.tol > 0.0) || !(cfg.armijo_sigma > 0.0 && cfg.armijo_sigma < 1.0) ||
      !(cfg.backtrack > 0.0 && cfg.backtrack < 1.0))
    throw ParameterDomainError("invalid solver configuration");
  if (z0.size() != nlp.dim) throw ContractViolation("initial point has wrong dimension");

  const auto t_start = std::chrono::steady_clock::now();
  // The projection's residual tolerance bounds the noise floor of every
  // stationarity measurement, so it must sit well below the solver tolerance.
  const double proj_tol = std::min(cfg.projection_tol, 1e-3 * cfg.tol);
  PolyhedronProjector proj(nlp, proj_tol);

  Eigen::VectorXd z = proj.project(z0, false);
  double f = safe_objective(nlp, z);
  Eigen::VectorXd g(nlp.dim);
  nlp.gradient(z, g);

  SolveReport rep;
  rep.reason = TerminationReason::max_iters;

  double bb_step = 1.0 / std::max(1e-12, g.cwiseAbs().maxCoeff());
  double last_p1_decrease = kInf;
  int active_repeat = 0;
  std::vector<char> prev_mask;
  int phase = 1;

  // Phase-2 conjugate-gradient memory.
  Eigen::VectorXd cg_dir, cg_pg_prev;
  bool cg_valid = false;
  double face_bb = 1.0;

  auto stationarity = [&](const Eigen::VectorXd& zz, const Eigen::VectorXd& gg) {
    const Eigen::VectorXd w = proj.project(zz - gg, true);
    return (w - zz).cwiseAbs().maxCoeff();
  };

  // Stagnation guard: when the iterate sits at its numerical floor, neither
  // the residual nor the objective moves; cut the run short instead of
  // spending the full iteration budget on noise-level steps.
  double stag_E = kInf;
  double stag_f = kInf;
  long stag = 0;

  long it = 0;
  for (; it < cfg.max_iters; ++it) {
    const double E = stationarity(z, g);
    rep.stationarity = E;
    if (E <= cfg.tol) {
      rep.reason = TerminationReason::converged;
      break;
    }
    const bool e_progress = E < 0.99 * stag_E;
    const bool f_progress = f < stag_f - 1e-12 * (1.0 + std::abs(f));
    if (e_progress) stag_E = E;
    if (f_progress) stag_f = f;
    if (e_progress || f_progress) {
      stag = 0;
    } else if (++stag >= 2000) {
      rep.reason = TerminationReason::line_search_failure;
      break;
    }

    if (phase == 1) {
      ++rep.phase1_iters;
      double alpha = std::clamp(bb_step, cfg.bb_min, cfg.bb_max);
      // Trial points far outside the box only saturate the projection while
      // making its dual walk expensive; cap the displacement of the trial.
      const double gmax = g.cwiseAbs().maxCoeff();
      if (gmax > 0.0)
        alpha = std::min(alpha, 100.0 * (1.0 + z.cwiseAbs().maxCoeff()) / gmax);
      bool accepted = false;
      bool have_gnew = false;
      Eigen::VectorXd zt, d;
      Eigen::VectorXd gnew(nlp.dim);
      double ft = kInf;
      // Once the predicted decrease |g.d| = O(E^2) drops below the rounding
      // noise of f, the Armijo comparison carries no information; in that
      // regime the projected-gradient step is accepted on contraction of the
      // stationarity residual instead (the fixed-point map is locally
      // contractive), which is what actually drives E down to tight tol.
      const double noise = 1e-13 * (1.0 + std::abs(f));
      for (int ls = 0; ls < 80; ++ls) {
        zt = proj.project(z - alpha * g, true);
        d = zt - z;
        const double gd = g.dot(d);
        if (d.cwiseAbs().maxCoeff() == 0.0) break;  // projection arc collapsed
        ft = safe_objective(nlp, zt);
        if (ft <= f + cfg.armijo_sigma * std::min(gd, 0.0)) {
          accepted = true;
          break;
        }
        if (ft <= f + 10.0 * noise) {
          nlp.gradient(zt, gnew);
          if (stationarity(zt, gnew) <= 0.9 * E) {
            accepted = true;
            have_gnew = true;
            break;
          }
        }
        alpha *= cfg.backtrack;
        if (alpha < 1e-18) break;
      }
      if (!accepted) {
        // No measurable objective signal at any step length: polish the
        // stationarity residual directly on the active face, then re-check.
        const double f_before = f;
        rep.phase2_iters += face_polish(nlp, proj, proj_tol, cfg, z, f, g);
        const double E_polished = stationarity(z, g);
        if (E_polished <= cfg.tol) {
          rep.stationarity = E_polished;
          rep.reason = TerminationReason::converged;
          break;
        }
        if (E_polished <= 0.9 * E || f < f_before - 1e-11 * (1.0 + std::abs(f_before))) {
          prev_mask.clear();
          active_repeat = 0;
          continue;
        }
        rep.reason = TerminationReason::line_search_failure;
        break;
      }

      if (!have_gnew) nlp.gradient(zt, gnew);
      const Eigen::VectorXd s = zt - z;
      const Eigen::VectorXd yv = gnew - g;
      const double sy = s.dot(yv);
      bb_step = sy > 0.0 ? s.squaredNorm() / sy : 1.0 / std::max(1e-12, gnew.cwiseAbs().maxCoeff());
      last_p1_decrease = f - ft;
      z = zt;
      f = ft;
      g = gnew;

      std::vector<char> mask = free_mask(nlp, z);
      if (mask == prev_mask)
        ++active_repeat;
      else
        active_repeat = 0;
      prev_mask = std::move(mask);
      if (active_repeat >= cfg.phase_switch_repeats) {
        phase = 2;
        cg_valid = false;
        face_bb = std::clamp(bb_step, cfg.bb_min, cfg.bb_max);
      }
    } else {
      ++rep.phase2_iters;
      const std::vector<char> mask = free_mask(nlp, z);
      const Eigen::VectorXd d0 = proj.restrict_to_face(g, mask);  // = -projected gradient
      const Eigen::VectorXd pg = -d0;
      const double pg_norm = pg.cwiseAbs().maxCoeff();
      if (pg_norm <= 0.5 * cfg.tol) {
        // Face is optimized; let phase 1 decide whether bounds should release.
        phase = 1;
        active_repeat = 0;
        continue;
      }

      Eigen::VectorXd d;
      if (cg_valid) {
        const double beta =
            std::max(0.0, pg.dot(pg - cg_pg_prev) / std::max(1e-300, cg_pg_prev.squaredNorm()));
        d = d0 + beta * cg_dir;
        if (d.dot(pg) >= -1e-14 * d.norm() * pg.norm()) d = d0;  // restart on bad direction
      } else {
        d = d0;
      }

      // Longest feasible step along d inside the box.
      double abar = kInf;
      for (int i = 0; i < nlp.dim; ++i) {
        if (!mask[i] || d(i) == 0.0) continue;
        if (d(i) > 0.0 && std::isfinite(nlp.hi(i))) abar = std::min(abar, (nlp.hi(i) - z(i)) / d(i));
        if (d(i) < 0.0 && std::isfinite(nlp.lo(i))) abar = std::min(abar, (nlp.lo(i) - z(i)) / d(i));
      }

      double alpha = std::min(abar, std::clamp(face_bb, cfg.bb_min, cfg.bb_max));
      const double gd = g.dot(d);
      bool accepted = false;
      Eigen::VectorXd zt;
      double ft = kInf;
      for (int ls = 0; ls < 80; ++ls) {
        zt = z + alpha * d;
        ft = safe_objective(nlp, zt);
        if (ft <= f + cfg.armijo_sigma * alpha * std::min(gd, 0.0)) {
          accepted = true;
          break;
        }
        alpha *= cfg.backtrack;
        if (alpha < 1e-18) break;
      }
      if (!accepted) {
        phase = 1;
        active_repeat = 0;
        cg_valid = false;
        continue;
      }
      const bool hit_bound = alpha >= abar * (1.0 - 1e-12);
      // Snap to the box so active-set tests see exact bound values.
      zt = zt.cwiseMax(nlp.lo).cwiseMin(nlp.hi);

      Eigen::VectorXd gnew(nlp.dim);
      nlp.gradient(zt, gnew);
      const Eigen::VectorXd s = zt - z;
      const Eigen::VectorXd yv = gnew - g;
      const double sy = s.dot(yv);
      face_bb = sy > 0.0 ? s.squaredNorm() / sy : face_bb;
      const double decrease = f - ft;
      z = zt;
      f = ft;
      g = gnew;
      cg_dir = d;
      cg_pg_prev = pg;
      cg_valid = true;

      // Null-space steps accumulate roundoff in Bz; re-project when it grows.
      const double scale = 1.0 + z.cwiseAbs().maxCoeff();
      if (equality_residual(nlp, z) > 10.0 * cfg.projection_tol * scale) {
        z = proj.project(z, true);
        f = safe_objective(nlp, z);
        nlp.gradient(z, g);
        cg_valid = false;
      }

      if (hit_bound || decrease < cfg.phase2_decrease_ratio * last_p1_decrease) {
        phase = 1;
        active_repeat = 0;
        cg_valid = false;
      }
    }
  }

  rep.minimizer = z;
  rep.objective = f;
  if (rep.reason != TerminationReason::converged) rep.stationarity = stationarity(z, g);
  rep.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return rep;
}

}  // namespace singctrl
