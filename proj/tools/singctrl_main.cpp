// Command-line front end: configuration loading, experiment orchestration,
// and emission of result tables / plot-ready CSV files.
//
// Exit codes: 0 success, 1 solver failure, 2 configuration error.
#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "singctrl/analysis.hpp"
#include "singctrl/errors.hpp"
#include "singctrl/experiment.hpp"
#include "singctrl/ocp.hpp"
#include "singctrl/problems/fishery.hpp"
#include "singctrl/problems/plant.hpp"
#include "singctrl/problems/sir.hpp"
#include "singctrl/prox_tv.hpp"
#include "singctrl/solver.hpp"
#include "singctrl/tv.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace singctrl;

namespace {

// ---------------------------------------------------------------------------
// configuration

struct RunConfig {
  std::string problem;           // fishery | plant | sir
  std::string plant_case;        // "", 2a, 2b, 2c
  int n = 750;
  double tol = 1e-10;
  std::vector<double> rho;       // per channel; scalar broadcast: first channel
  std::vector<double> u0;        // constant initial guess per channel
  std::vector<double> hs;        // convergence mesh widths
  std::string backend = "polyhedral";
  std::string out_dir = "out";
  std::map<std::string, double> overrides;  // <problem>.<param> = value
};

[[noreturn]] void config_fail(const std::string& msg) { throw ConfigError(msg); }

std::vector<double> parse_double_list(const std::string& s, const std::string& field) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      config_fail("invalid number '" + item + "' in " + field);
    }
  }
  if (out.empty()) config_fail(field + " is empty");
  return out;
}

// Flat key = value lines; '#' comments; string values may be bare or quoted.
void load_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) config_fail("cannot open config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r\n");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r\n");
      return s.substr(a, b - a + 1);
    };
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      config_fail("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
      val = val.substr(1, val.size() - 2);

    if (key == "problem") cfg.problem = val;
    else if (key == "case") cfg.plant_case = val;
    else if (key == "n") cfg.n = static_cast<int>(parse_double_list(val, key)[0]);
    else if (key == "tol") cfg.tol = parse_double_list(val, key)[0];
    else if (key == "rho") cfg.rho = parse_double_list(val, key);
    else if (key == "u0") cfg.u0 = parse_double_list(val, key);
    else if (key == "hs") cfg.hs = parse_double_list(val, key);
    else if (key == "backend") cfg.backend = val;
    else if (key == "out") cfg.out_dir = val;
    else if (key.find('.') != std::string::npos)
      cfg.overrides[key] = parse_double_list(val, key)[0];
    else
      config_fail("unknown config key '" + key + "'");
  }
}

// ---------------------------------------------------------------------------
// problem instantiation

struct ProblemBundle {
  ControlProblem problem;
  double horizon = 0.0;
  int channels = 1;
  // per-channel exact control, when an analytic solution applies
  std::vector<std::optional<std::function<double(double)>>> u_exact;
  // exact junction times of the optimal structure (switch / join times)
  std::vector<double> exact_junctions;
  // per-channel exact states (same length as state dimension), optional
  std::vector<std::function<double(double)>> x_exact;
};

double override_or(const RunConfig& cfg, const std::string& key, double fallback) {
  const auto it = cfg.overrides.find(key);
  return it == cfg.overrides.end() ? fallback : it->second;
}

ProblemBundle make_problem(const RunConfig& cfg, bool need_oracle) {
  ProblemBundle b;
  if (cfg.problem == "fishery") {
    FisheryParams p;
    p.T = override_or(cfg, "fishery.T", p.T);
    p.p = override_or(cfg, "fishery.p", p.p);
    p.q = override_or(cfg, "fishery.q", p.q);
    p.c = override_or(cfg, "fishery.c", p.c);
    p.M = override_or(cfg, "fishery.M", p.M);
    p.x0 = override_or(cfg, "fishery.x0", p.x0);
    b.problem = fishery_problem(p);
    b.horizon = p.T;
    b.channels = 1;
    try {
      const FisheryExact e = fishery_exact(p);
      b.u_exact = {std::function<double(double)>([e](double t) { return e.u(t); })};
      b.exact_junctions = {e.t_star};
      b.x_exact = {[e](double t) { return e.x(t); }};
    } catch (const Error&) {
      if (need_oracle) throw;
      b.u_exact = {std::nullopt};
    }
  } else if (cfg.problem == "plant") {
    PlantParams p;  // defaults give case 2a
    if (cfg.plant_case == "2b") p = {5.0, 1.0, 1e-4};
    else if (cfg.plant_case == "2c") p = {5.0, 1.0, 2.0};
    else if (!cfg.plant_case.empty() && cfg.plant_case != "2a")
      config_fail("case must be one of 2a, 2b, 2c");
    p.T = override_or(cfg, "plant.T", p.T);
    p.x10 = override_or(cfg, "plant.x10", p.x10);
    p.x20 = override_or(cfg, "plant.x20", p.x20);
    b.problem = plant_problem(p);
    b.horizon = p.T;
    b.channels = 1;
    const PlantCase tag = plant_classify(p);
    if (tag == PlantCase::case_2a || tag == PlantCase::case_2b || tag == PlantCase::case_2c) {
      const PlantExact e = plant_exact(p);
      b.u_exact = {std::function<double(double)>([e](double t) { return e.u(t); })};
      b.exact_junctions = {e.t1, e.t2};
      b.x_exact = {[e](double t) { return e.x1(t); }, [e](double t) { return e.x2(t); }};
    } else {
      if (need_oracle)
        config_fail("no analytic oracle for plant parameters outside the singular cases");
      b.u_exact = {std::nullopt};
    }
  } else if (cfg.problem == "sir") {
    if (need_oracle) config_fail("no analytic oracle for problem 'sir'");
    SirParams p;
    p.gamma = override_or(cfg, "sir.gamma", p.gamma);
    p.nu = override_or(cfg, "sir.nu", p.nu);
    p.beta = override_or(cfg, "sir.beta", p.beta);
    p.mu = override_or(cfg, "sir.mu", p.mu);
    p.alpha = override_or(cfg, "sir.alpha", p.alpha);
    p.rho_r = override_or(cfg, "sir.rho_r", p.rho_r);
    p.kappa = override_or(cfg, "sir.kappa", p.kappa);
    p.eta = override_or(cfg, "sir.eta", p.eta);
    p.a = override_or(cfg, "sir.a", p.a);
    p.b = override_or(cfg, "sir.b", p.b);
    p.c = override_or(cfg, "sir.c", p.c);
    p.T = override_or(cfg, "sir.T", p.T);
    p.u_max = override_or(cfg, "sir.u_max", p.u_max);
    p.v_max = override_or(cfg, "sir.v_max", p.v_max);
    p.S0 = override_or(cfg, "sir.S0", p.S0);
    p.I0 = override_or(cfg, "sir.I0", p.I0);
    p.R0 = override_or(cfg, "sir.R0", p.R0);
    b.problem = sir_problem(p);
    b.horizon = p.T;
    b.channels = 2;
    b.u_exact = {std::nullopt, std::nullopt};
  } else {
    config_fail("problem must be one of fishery, plant, sir");
  }
  return b;
}

Eigen::VectorXd resolve_rho(const RunConfig& cfg, int channels) {
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(channels);
  if (cfg.rho.empty()) return rho;
  if (static_cast<int>(cfg.rho.size()) == channels) {
    for (int j = 0; j < channels; ++j) rho(j) = cfg.rho[j];
  } else if (cfg.rho.size() == 1) {
    rho(0) = cfg.rho[0];  // scalar broadcast: penalize the first channel
  } else {
    config_fail("rho must have 1 or " + std::to_string(channels) + " entries");
  }
  for (int j = 0; j < channels; ++j)
    if (!(rho(j) >= 0.0 && rho(j) < 1.0))
      config_fail("rho must lie in [0, 1); got " + std::to_string(rho(j)));
  return rho;
}

Eigen::MatrixXd resolve_u0(const RunConfig& cfg, int channels, int n) {
  Eigen::MatrixXd u0 = Eigen::MatrixXd::Zero(channels, n);
  if (cfg.u0.empty()) return u0;
  if (static_cast<int>(cfg.u0.size()) != channels)
    config_fail("u0 must have " + std::to_string(channels) + " entries");
  for (int j = 0; j < channels; ++j) u0.row(j).setConstant(cfg.u0[j]);
  return u0;
}

void validate_common(const RunConfig& cfg) {
  if (cfg.n < 2) config_fail("n must be at least 2");
  if (!(cfg.tol > 0.0)) config_fail("tol must be positive");
  if (cfg.backend != "polyhedral" && cfg.backend != "prox-tv")
    config_fail("backend must be polyhedral or prox-tv");
}

// ---------------------------------------------------------------------------
// formatting

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json json_opt(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) config_fail("cannot write " + p.string());
  return f;
}

// ---------------------------------------------------------------------------
// solving

struct SolvedRun {
  RunOutcome outcome;
  ExperimentReport report;
};

SolvedRun solve_once(const ProblemBundle& b, const RunConfig& cfg, const Eigen::VectorXd& rho,
                     const Eigen::MatrixXd& u0) {
  const Mesh mesh(b.horizon, cfg.n);
  SolverConfig scfg;
  scfg.tol = cfg.tol;
  SolvedRun run;
  if (cfg.backend == "polyhedral") {
    run.outcome = run_polyhedral(b.problem, mesh, rho, u0, scfg);
  } else {
    if (b.channels != 1)
      config_fail("backend prox-tv supports single-channel problems only");
    const ProxTVResult res = prox_tv_backend(b.problem, mesh, rho(0), scfg, u0.row(0));
    run.outcome.trajectory.controls = res.u.transpose();
    run.outcome.trajectory.states = rollout_state(b.problem, mesh, run.outcome.trajectory.controls);
    run.outcome.trajectory.adjoints =
        backward_adjoint(b.problem, mesh, run.outcome.trajectory.states,
                         run.outcome.trajectory.controls);
    run.outcome.report.minimizer = res.u;
    run.outcome.report.objective = res.objective;
    run.outcome.report.stationarity = res.stationarity;
    run.outcome.report.phase1_iters = res.iters;
    run.outcome.report.phase2_iters = 0;
    run.outcome.report.reason = res.reason;
    run.outcome.objective_unpenalized = discrete_cost(
        b.problem, mesh, run.outcome.trajectory.states, run.outcome.trajectory.controls);
    run.outcome.objective_penalized =
        run.outcome.objective_unpenalized +
        rho(0) * total_variation(run.outcome.trajectory.controls.row(0));
  }
  run.report = summarize(b.problem, mesh, run.outcome, rho, b.u_exact);
  return run;
}

json report_to_json(const RunConfig& cfg, const ExperimentReport& r) {
  json j;
  j["problem"] = cfg.problem;
  j["case"] = cfg.plant_case.empty() ? json(nullptr) : json(cfg.plant_case);
  j["n"] = cfg.n;
  j["tol"] = cfg.tol;
  j["backend"] = cfg.backend;
  j["rho"] = r.rho;
  j["objective_penalized"] = r.objective_penalized;
  j["objective_unpenalized"] = r.objective_unpenalized;
  j["stationarity"] = r.stationarity;
  j["phase1_iters"] = r.phase1_iters;
  j["phase2_iters"] = r.phase2_iters;
  j["wall_time_s"] = r.wall_time_s;
  j["termination"] = r.termination;
  j["tv"] = r.tv;
  json l1 = json::array(), linf = json::array();
  for (const auto& v : r.l1_error) l1.push_back(json_opt(v));
  for (const auto& v : r.linf_error) linf.push_back(json_opt(v));
  j["l1_error"] = l1;
  j["linf_error"] = linf;
  json osc = json::array();
  for (const auto& o : r.oscillation) osc.push_back({{"count", o.count}, {"flag", o.flag}});
  j["oscillation"] = osc;
  json sw_all = json::array();
  std::optional<double> first_transition;
  for (std::size_t ch = 0; ch < r.switches.size(); ++ch) {
    json sw = json::array();
    for (const auto& rec : r.switches[ch]) {
      sw.push_back({{"time", rec.time},
                    {"from", json_opt(rec.from)},
                    {"to", json_opt(rec.to)}});
      if (ch == 0 && rec.time > 0.0 && !first_transition) first_transition = rec.time;
    }
    sw_all.push_back(sw);
  }
  j["switches"] = sw_all;
  j["switch_time"] = json_opt(first_transition);
  j["error"] = r.error.empty() ? json(nullptr) : json(r.error);
  return j;
}

void write_trajectory_csv(const fs::path& path, const ProblemBundle& b, const RunConfig& cfg,
                          const Trajectory& traj) {
  const Mesh mesh(b.horizon, cfg.n);
  const int m = b.channels, n_x = b.problem.state_dim, N = cfg.n;
  const Eigen::MatrixXd g = gradient_via_lagrangian(b.problem, mesh, traj.states, traj.controls,
                                                    traj.adjoints);
  auto f = open_out(path);
  f << "t";
  for (int j = 0; j < m; ++j) f << ",u_" << (j + 1);
  for (int i = 0; i < n_x; ++i) f << ",x_" << (i + 1);
  for (int i = 0; i < n_x; ++i) f << ",lambda_" << (i + 1);
  for (int j = 0; j < m; ++j) f << ",phi_" << (j + 1);
  f << "\n";
  const double h = mesh.step();
  for (int k = 0; k <= N; ++k) {
    f << num(mesh.node(k));
    for (int j = 0; j < m; ++j) f << "," << (k < N ? num(traj.controls(j, k)) : "");
    for (int i = 0; i < n_x; ++i) f << "," << num(traj.states(i, k));
    for (int i = 0; i < n_x; ++i) f << "," << (k < N ? num(traj.adjoints(i, k)) : "");
    for (int j = 0; j < m; ++j) f << "," << (k < N ? num(g(j, k) / h) : "");
    f << "\n";
  }
}

void write_solver_log(const fs::path& path, const RunConfig& cfg, const ExperimentReport& r) {
  auto f = open_out(path);
  f << "problem: " << cfg.problem
    << (cfg.plant_case.empty() ? "" : " case " + cfg.plant_case) << "\n"
    << "backend: " << cfg.backend << "\n"
    << "n: " << cfg.n << "\n"
    << "tol: " << num(cfg.tol) << "\n"
    << "termination: " << r.termination << "\n"
    << "stationarity: " << num(r.stationarity) << "\n"
    << "phase1_iters: " << r.phase1_iters << "\n"
    << "phase2_iters: " << r.phase2_iters << "\n"
    << "objective_penalized: " << num(r.objective_penalized) << "\n"
    << "objective_unpenalized: " << num(r.objective_unpenalized) << "\n"
    << "wall_time_s: " << num(r.wall_time_s) << "\n";
}

void emit_solve_outputs(const fs::path& dir, const ProblemBundle& b, const RunConfig& cfg,
                        const SolvedRun& run) {
  fs::create_directories(dir);
  write_trajectory_csv(dir / "trajectory.csv", b, cfg, run.outcome.trajectory);
  open_out(dir / "report.json") << report_to_json(cfg, run.report).dump(2) << "\n";
  write_solver_log(dir / "solver.log", cfg, run.report);
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_solve(const RunConfig& cfg) {
  validate_common(cfg);
  const ProblemBundle b = make_problem(cfg, false);
  const Eigen::VectorXd rho = resolve_rho(cfg, b.channels);
  const SolvedRun run =
      solve_once(b, cfg, rho, resolve_u0(cfg, b.channels, cfg.n));
  emit_solve_outputs(fs::path(cfg.out_dir), b, cfg, run);
  if (run.report.termination != "converged") {
    std::fprintf(stderr, "solver did not converge: %s (stationarity %s)\n",
                 run.report.termination.c_str(), num(run.report.stationarity).c_str());
    return 1;
  }
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  validate_common(cfg);
  if (cfg.rho.empty()) config_fail("sweep requires a nonempty rho list");
  const ProblemBundle b = make_problem(cfg, false);
  const Mesh mesh(b.horizon, cfg.n);
  if (cfg.backend != "polyhedral")
    config_fail("sweep supports the polyhedral backend only");

  std::vector<Eigen::VectorXd> rhos;
  for (double v : cfg.rho) {
    RunConfig one = cfg;
    one.rho = {v};
    rhos.push_back(resolve_rho(one, b.channels));
  }
  SolverConfig scfg;
  scfg.tol = cfg.tol;
  std::vector<RunOutcome> outcomes;
  const std::vector<ExperimentReport> reports = rho_sweep(
      b.problem, mesh, rhos, resolve_u0(cfg, b.channels, cfg.n), scfg, b.u_exact, &outcomes);

  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  auto f = open_out(dir / "sweep.csv");
  f << "rho";
  for (int j = 0; j < b.channels; ++j)
    f << ",l1_" << (j + 1) << ",linf_" << (j + 1) << ",tv_" << (j + 1) << ",osc_count_"
      << (j + 1) << ",osc_flag_" << (j + 1);
  f << ",switch_time,objective_penalized,objective_unpenalized,stationarity,termination,"
       "wall_time_s\n";

  int failures = 0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const ExperimentReport& r = reports[i];
    f << num(cfg.rho[i]);
    for (int j = 0; j < b.channels; ++j) {
      f << "," << (r.l1_error.size() > static_cast<std::size_t>(j) && r.l1_error[j]
                       ? num(*r.l1_error[j]) : "")
        << "," << (r.linf_error.size() > static_cast<std::size_t>(j) && r.linf_error[j]
                       ? num(*r.linf_error[j]) : "")
        << "," << (r.tv.size() > static_cast<std::size_t>(j) ? num(r.tv[j]) : "")
        << "," << (r.oscillation.size() > static_cast<std::size_t>(j)
                       ? std::to_string(r.oscillation[j].count) : "")
        << "," << (r.oscillation.size() > static_cast<std::size_t>(j)
                       ? (r.oscillation[j].flag ? "1" : "0") : "");
    }
    std::optional<double> first_transition;
    if (!r.switches.empty())
      for (const auto& rec : r.switches[0])
        if (rec.time > 0.0 && !first_transition) first_transition = rec.time;
    f << "," << (first_transition ? num(*first_transition) : "") << ","
      << num(r.objective_penalized) << "," << num(r.objective_unpenalized) << ","
      << num(r.stationarity) << "," << r.termination << "," << num(r.wall_time_s) << "\n";

    // per-rho subdirectory with full solve artifacts
    RunConfig sub = cfg;
    sub.rho = {cfg.rho[i]};
    std::ostringstream name;
    name << "rho_" << num(cfg.rho[i]);
    if (r.error.empty()) {
      SolvedRun run;
      run.outcome = outcomes[i];
      run.report = r;
      emit_solve_outputs(dir / name.str(), b, sub, run);
      if (r.termination != "converged") ++failures;
    } else {
      fs::create_directories(dir / name.str());
      open_out(dir / name.str() / "report.json")
          << report_to_json(sub, r).dump(2) << "\n";
      ++failures;
    }
  }
  if (failures > 0) {
    std::fprintf(stderr, "%d of %zu sweep solves failed\n", failures, reports.size());
    return 1;
  }
  return 0;
}

int cmd_convergence(const RunConfig& cfg) {
  validate_common(cfg);
  const ProblemBundle b = make_problem(cfg, true);
  if (b.channels != 1) config_fail("convergence study requires a single-channel problem");
  if (!b.u_exact[0]) config_fail("no analytic oracle for this configuration");
  std::vector<double> hs = cfg.hs;
  if (hs.empty()) hs = {0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125};
  for (double h : hs)
    if (!(h > 0.0) || h > b.horizon) config_fail("mesh width " + num(h) + " out of range");

  const Eigen::VectorXd rho = resolve_rho(cfg, 1);
  SolverConfig scfg;
  scfg.tol = cfg.tol;
  const std::string backend = cfg.backend;
  const ProblemBundle* bp = &b;
  auto solve_u = [bp, rho, scfg, backend](const Mesh& mesh) {
    if (backend == "polyhedral") {
      const RunOutcome out = run_polyhedral(bp->problem, mesh, rho,
                                            Eigen::MatrixXd::Zero(1, mesh.intervals), scfg);
      return Eigen::VectorXd(out.trajectory.controls.row(0));
    }
    return prox_tv_backend(bp->problem, mesh, rho(0), scfg,
                           Eigen::VectorXd::Zero(mesh.intervals))
        .u;
  };
  const ConvergenceTable table = convergence_study(solve_u, *b.u_exact[0], b.horizon, hs);

  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  auto f = open_out(dir / "convergence.csv");
  f << "h,err,ratio,log2_ratio\n";
  for (const auto& row : table.rows) {
    f << num(row.h) << "," << num(row.err) << ","
      << (row.ratio ? num(*row.ratio) : "") << ","
      << (row.log2_ratio ? num(*row.log2_ratio) : "") << "\n";
  }
  json fit;
  auto fit_json = [](const std::optional<LinearFit>& lf) {
    if (!lf) return json(nullptr);
    return json{{"slope", lf->slope}, {"intercept", lf->intercept}, {"r2", lf->r2}};
  };
  fit["fit_all"] = fit_json(table.fit_all);
  fit["fit_filtered"] = fit_json(table.fit_filtered);
  fit["outlier"] = table.outlier;
  open_out(dir / "fit.json") << fit.dump(2) << "\n";
  return 0;
}

int cmd_compare(const RunConfig& cfg) {
  validate_common(cfg);
  const ProblemBundle b = make_problem(cfg, true);  // exits 2 when no oracle
  const Eigen::VectorXd rho = resolve_rho(cfg, b.channels);
  const SolvedRun run = solve_once(b, cfg, rho, resolve_u0(cfg, b.channels, cfg.n));
  const Mesh mesh(b.horizon, cfg.n);

  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  auto f = open_out(dir / "compare.csv");
  f << "t,u_num,u_exact,diff";
  for (std::size_t i = 0; i < b.x_exact.size(); ++i)
    f << ",x_" << (i + 1) << "_num,x_" << (i + 1) << "_exact";
  f << "\n";
  const auto& exact_u = *b.u_exact[0];
  for (int k = 0; k < cfg.n; ++k) {
    const double t = mesh.node(k);
    const double un = run.outcome.trajectory.controls(0, k);
    const double ue = exact_u(t);
    f << num(t) << "," << num(un) << "," << num(ue) << "," << num(un - ue);
    for (std::size_t i = 0; i < b.x_exact.size(); ++i)
      f << "," << num(run.outcome.trajectory.states(static_cast<int>(i), k)) << ","
        << num(b.x_exact[i](t));
    f << "\n";
  }

  json errs;
  errs["l1"] = json_opt(run.report.l1_error.empty() ? std::nullopt : run.report.l1_error[0]);
  errs["linf"] =
      json_opt(run.report.linf_error.empty() ? std::nullopt : run.report.linf_error[0]);
  errs["oscillation_count"] =
      run.report.oscillation.empty() ? 0 : run.report.oscillation[0].count;
  errs["oscillation_flag"] =
      !run.report.oscillation.empty() && run.report.oscillation[0].flag;
  json detected = json::array();
  if (!run.report.switches.empty())
    for (const auto& rec : run.report.switches[0])
      if (rec.time > 0.0) detected.push_back(rec.time);
  errs["detected_switches"] = detected;
  errs["exact_junctions"] = b.exact_junctions;
  open_out(dir / "errors.json") << errs.dump(2) << "\n";

  if (run.report.termination != "converged") {
    std::fprintf(stderr, "solver did not converge: %s\n", run.report.termination.c_str());
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regularized solver for control-affine trajectory optimization"};
  app.require_subcommand(1);

  RunConfig cli;  // values given on the command line
  std::string config_path, rho_str, u0_str, hs_str;
  bool n_set = false, tol_set = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--problem", cli.problem, "fishery | plant | sir");
    sub->add_option("--case", cli.plant_case, "plant scenario: 2a | 2b | 2c");
    sub->add_option("--n", cli.n, "number of mesh intervals")
        ->each([&](const std::string&) { n_set = true; });
    sub->add_option("--tol", cli.tol, "stationarity tolerance")
        ->each([&](const std::string&) { tol_set = true; });
    sub->add_option("--rho", rho_str, "penalty weight(s), comma separated");
    sub->add_option("--u0", u0_str, "constant initial control per channel");
    sub->add_option("--backend", cli.backend, "polyhedral | prox-tv");
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--out", cli.out_dir, "output directory");
  };

  CLI::App* solve = app.add_subcommand("solve", "run one penalized solve");
  CLI::App* sweep = app.add_subcommand("sweep", "solve across a list of penalty weights");
  CLI::App* conv = app.add_subcommand("convergence", "mesh refinement study");
  CLI::App* comp = app.add_subcommand("compare", "overlay solve against the analytic solution");
  for (CLI::App* sub : {solve, sweep, conv, comp}) add_common(sub);
  conv->add_option("--h-list", hs_str, "mesh widths, comma separated");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg;  // defaults
    if (!config_path.empty()) load_config_file(config_path, cfg);
    // command line overrides the file
    if (!cli.problem.empty()) cfg.problem = cli.problem;
    if (!cli.plant_case.empty()) cfg.plant_case = cli.plant_case;
    if (n_set) cfg.n = cli.n;
    if (tol_set) cfg.tol = cli.tol;
    if (!rho_str.empty()) cfg.rho = parse_double_list(rho_str, "rho");
    if (!u0_str.empty()) cfg.u0 = parse_double_list(u0_str, "u0");
    if (!hs_str.empty()) cfg.hs = parse_double_list(hs_str, "h-list");
    if (cli.backend != "polyhedral") cfg.backend = cli.backend;
    if (cli.out_dir != "out") cfg.out_dir = cli.out_dir;
    if (cfg.problem.empty()) config_fail("--problem is required");

    if (solve->parsed()) return cmd_solve(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg);
    if (conv->parsed()) return cmd_convergence(cfg);
    return cmd_compare(cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const ParameterDomainError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
