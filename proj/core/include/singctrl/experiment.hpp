#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "singctrl/analysis.hpp"
#include "singctrl/mesh.hpp"
#include "singctrl/problem.hpp"
#include "singctrl/solver.hpp"

namespace singctrl {

// One penalized solve: assembles the stacked TV NLP, runs the two-phase
// solver, and re-rolls the trajectory at the returned controls.
struct RunOutcome {
  Trajectory trajectory;
  SolveReport report;
  double objective_penalized = 0.0;
  double objective_unpenalized = 0.0;
};

RunOutcome run_polyhedral(const ControlProblem& problem, const Mesh& mesh,
                          const Eigen::VectorXd& rho, const Eigen::MatrixXd& u0,
                          const SolverConfig& cfg);

// Diagnostics for one outcome.  `u_exact` (per channel, may be empty or hold
// nullopt entries) enables the error norms; switch/oscillation thresholds
// follow the control bounds: eps = 1e-3 (omega - xi), delta = 0.05 (omega - xi).
ExperimentReport summarize(const ControlProblem& problem, const Mesh& mesh,
                           const RunOutcome& outcome, const Eigen::VectorXd& rho,
                           const std::vector<std::optional<std::function<double(double)>>>& u_exact);

// One solve per rho value from the shared initial guess; failures are
// recorded in the report's error field and the sweep continues.
std::vector<ExperimentReport> rho_sweep(
    const ControlProblem& problem, const Mesh& mesh, const std::vector<Eigen::VectorXd>& rhos,
    const Eigen::MatrixXd& u0, const SolverConfig& cfg,
    const std::vector<std::optional<std::function<double(double)>>>& u_exact,
    std::vector<RunOutcome>* outcomes = nullptr);

}  // namespace singctrl
