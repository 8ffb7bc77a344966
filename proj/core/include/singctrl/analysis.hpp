#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "singctrl/mesh.hpp"

namespace singctrl {

// Grid norms of u_num minus the exact control sampled at left endpoints.
double grid_l1_error(const Eigen::VectorXd& u_num, const std::function<double(double)>& u_exact,
                     const Mesh& mesh);
double grid_linf_error(const Eigen::VectorXd& u_num, const std::function<double(double)>& u_exact,
                       const Mesh& mesh);

// A change of classification along the mesh; `from`/`to` are the matched
// target levels, or nullopt when the segment is interior ("singular").
struct SwitchRecord {
  double time = 0.0;
  std::optional<double> from;
  std::optional<double> to;
};

// Classifies each node to the nearest target level within eps (else interior)
// and records every run boundary. The first record, at t = 0, reports the
// initial classification with `from` empty.
std::vector<SwitchRecord> detect_switches(const Eigen::VectorXd& u_num, const Mesh& mesh,
                                          const std::vector<double>& levels, double eps);

// Sign reversals of consecutive differences both exceeding delta in size.
struct OscillationResult {
  int count = 0;
  bool flag = false;  // count >= 5
};
OscillationResult oscillation_count(const Eigen::VectorXd& u_num, const Mesh& mesh, double delta);

// First/last time where the window-averaged control sits at least eps away
// from both bounds; identifies a singular (or chattering) region.
std::optional<std::pair<double, double>> interior_region(const Eigen::VectorXd& u_num,
                                                         const Mesh& mesh, double lo, double hi,
                                                         double eps, int window = 9);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Least squares of y against x; outliers flagged at |studentized residual| > 2.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);
std::vector<bool> studentized_outliers(const std::vector<double>& x, const std::vector<double>& y,
                                       double threshold = 2.0);

struct ConvergenceRow {
  double h = 0.0;
  double err = 0.0;
  std::optional<double> ratio;       // err_h / err_{h/2}
  std::optional<double> log2_ratio;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;  // sorted by decreasing h
  std::optional<LinearFit> fit_all;
  std::optional<LinearFit> fit_filtered;  // outliers removed
  std::vector<bool> outlier;
};

// Runs solve_u per mesh (possibly concurrently; result order follows input
// order), measures L1 error against u_exact, fits ln(err) vs ln(h).
ConvergenceTable convergence_study(const std::function<Eigen::VectorXd(const Mesh&)>& solve_u,
                                   const std::function<double(double)>& u_exact, double horizon,
                                   const std::vector<double>& hs);

// One solve's worth of diagnostics; per-channel entries where applicable.
struct ExperimentReport {
  std::vector<double> rho;
  std::vector<std::optional<double>> l1_error, linf_error;
  std::vector<std::vector<SwitchRecord>> switches;
  std::vector<OscillationResult> oscillation;
  std::vector<double> tv;
  double objective_penalized = 0.0;
  double objective_unpenalized = 0.0;
  double stationarity = 0.0;
  long phase1_iters = 0;
  long phase2_iters = 0;
  double wall_time_s = 0.0;
  std::string termination;
  std::string error;  // nonempty when the solve itself failed
};

// Number of worker threads for sweeps: SINGCTRL_THREADS, else hardware.
int sweep_thread_count();

// Runs `body(i)` for i in [0, count) over the sweep thread pool.
void parallel_for_index(int count, const std::function<void(int)>& body);

}  // namespace singctrl
