#pragma once

#include <Eigen/Dense>
#include <string>

#include "singctrl/nlp.hpp"

namespace singctrl {

struct SolverConfig {
  double tol = 1e-10;           // sup-norm projected-gradient stationarity
  long max_iters = 300000;
  double armijo_sigma = 1e-4;   // sufficient-decrease constant
  double backtrack = 0.5;       // step shrink factor
  double bb_min = 1e-10;        // Barzilai-Borwein step clamp
  double bb_max = 1e10;
  double projection_tol = 1e-11;
  int phase_switch_repeats = 2;        // active set repeats before phase 2
  double phase2_decrease_ratio = 0.1;  // phase 2 must beat this x phase-1 decrease
};

enum class TerminationReason { converged, max_iters, line_search_failure };

std::string to_string(TerminationReason r);

struct SolveReport {
  Eigen::VectorXd minimizer;
  double objective = 0.0;
  double stationarity = 0.0;  // E(z) = ||project(z - grad) - z||_inf at exit
  long phase1_iters = 0;
  long phase2_iters = 0;
  double wall_time_s = 0.0;
  TerminationReason reason = TerminationReason::max_iters;
};

// Two-phase projected-gradient / active-set descent over
// {lo <= z <= hi, Bz = 0}.  Phase 1: z+ = project(z - alpha grad) with
// Armijo backtracking and Barzilai-Borwein initial steps.  Phase 2:
// conjugate-gradient-style steps restricted to the current active face.
SolveReport solve(const PolyhedralNLP& nlp, const Eigen::VectorXd& z0, const SolverConfig& cfg);

}  // namespace singctrl
