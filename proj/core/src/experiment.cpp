#include "singctrl/experiment.hpp"

#include "singctrl/errors.hpp"
#include "singctrl/ocp.hpp"
#include "singctrl/tv.hpp"

namespace singctrl {

RunOutcome run_polyhedral(const ControlProblem& problem, const Mesh& mesh,
                          const Eigen::VectorXd& rho, const Eigen::MatrixXd& u0,
                          const SolverConfig& cfg) {
  const TVWeights weights{rho};
  const PolyhedralNLP nlp = assemble_nlp(problem, mesh, weights);
  const Eigen::VectorXd z0 = DecomposedPoint::decompose(u0).stacked();

  RunOutcome out;
  out.report = solve(nlp, z0, cfg);

  const DecomposedPoint p =
      DecomposedPoint::from_stacked(out.report.minimizer, problem.control_dim, mesh.intervals);
  out.trajectory.controls = p.u;
  out.trajectory.states = rollout_state(problem, mesh, p.u);
  out.trajectory.adjoints = backward_adjoint(problem, mesh, out.trajectory.states, p.u);
  out.objective_unpenalized = discrete_cost(problem, mesh, out.trajectory.states, p.u);
  out.objective_penalized = out.report.objective;
  return out;
}

ExperimentReport summarize(
    const ControlProblem& problem, const Mesh& mesh, const RunOutcome& outcome,
    const Eigen::VectorXd& rho,
    const std::vector<std::optional<std::function<double(double)>>>& u_exact) {
  const int m = problem.control_dim;
  ExperimentReport rep;
  rep.rho.assign(rho.data(), rho.data() + rho.size());
  rep.objective_penalized = outcome.objective_penalized;
  rep.objective_unpenalized = outcome.objective_unpenalized;
  rep.stationarity = outcome.report.stationarity;
  rep.phase1_iters = outcome.report.phase1_iters;
  rep.phase2_iters = outcome.report.phase2_iters;
  rep.wall_time_s = outcome.report.wall_time_s;
  rep.termination = to_string(outcome.report.reason);

  for (int j = 0; j < m; ++j) {
    const Eigen::VectorXd uj = outcome.trajectory.controls.row(j).transpose();
    const double span = problem.upper(j) - problem.lower(j);
    const double eps = 1e-3 * span;
    const double delta = 0.05 * span;

    if (j < static_cast<int>(u_exact.size()) && u_exact[j]) {
      rep.l1_error.push_back(grid_l1_error(uj, *u_exact[j], mesh));
      rep.linf_error.push_back(grid_linf_error(uj, *u_exact[j], mesh));
    } else {
      rep.l1_error.push_back(std::nullopt);
      rep.linf_error.push_back(std::nullopt);
    }
    rep.switches.push_back(
        detect_switches(uj, mesh, {problem.lower(j), problem.upper(j)}, eps));
    rep.oscillation.push_back(oscillation_count(uj, mesh, delta));
    rep.tv.push_back(total_variation(uj));
  }
  return rep;
}

std::vector<ExperimentReport> rho_sweep(
    const ControlProblem& problem, const Mesh& mesh, const std::vector<Eigen::VectorXd>& rhos,
    const Eigen::MatrixXd& u0, const SolverConfig& cfg,
    const std::vector<std::optional<std::function<double(double)>>>& u_exact,
    std::vector<RunOutcome>* outcomes) {
  const int n = static_cast<int>(rhos.size());
  std::vector<ExperimentReport> reports(n);
  if (outcomes) outcomes->resize(n);

  parallel_for_index(n, [&](int i) {
    try {
      RunOutcome out = run_polyhedral(problem, mesh, rhos[i], u0, cfg);
      reports[i] = summarize(problem, mesh, out, rhos[i], u_exact);
      if (outcomes) (*outcomes)[i] = std::move(out);
    } catch (const std::exception& ex) {
      reports[i].rho.assign(rhos[i].data(), rhos[i].data() + rhos[i].size());
      reports[i].error = ex.what();
    }
  });
  return reports;
}

}  // namespace singctrl
