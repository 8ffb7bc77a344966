#include "singctrl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "singctrl/errors.hpp"

namespace singctrl {

double grid_l1_error(const Eigen::VectorXd& u_num, const std::function<double(double)>& u_exact,
                     const Mesh& mesh) {
  const double h = mesh.step();
  double e = 0.0;
  for (int k = 0; k < u_num.size(); ++k) e += h * std::abs(u_num(k) - u_exact(mesh.node(k)));
  return e;
}

double grid_linf_error(const Eigen::VectorXd& u_num, const std::function<double(double)>& u_exact,
                       const Mesh& mesh) {
  double e = 0.0;
  for (int k = 0; k < u_num.size(); ++k)
    e = std::max(e, std::abs(u_num(k) - u_exact(mesh.node(k))));
  return e;
}

namespace {

// index into levels, or -1 for interior
int classify(double v, const std::vector<double>& levels, double eps) {
  int best = -1;
  double best_dist = eps;
  for (int i = 0; i < static_cast<int>(levels.size()); ++i) {
    const double d = std::abs(v - levels[i]);
    if (d <= best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

std::vector<SwitchRecord> detect_switches(const Eigen::VectorXd& u_num, const Mesh& mesh,
                                          const std::vector<double>& levels, double eps) {
  if (!(eps > 0.0)) throw ParameterDomainError("switch detection needs eps > 0");
  std::vector<SwitchRecord> records;
  if (u_num.size() == 0) return records;

  auto level_of = [&](int cls) -> std::optional<double> {
    if (cls < 0) return std::nullopt;
    return levels[cls];
  };

  int current = classify(u_num(0), levels, eps);
  records.push_back({mesh.node(0), std::nullopt, level_of(current)});
  for (int k = 1; k < u_num.size(); ++k) {
    const int cls = classify(u_num(k), levels, eps);
    if (cls != current) {
      records.push_back({mesh.node(k), level_of(current), level_of(cls)});
      current = cls;
    }
  }
  return records;
}

OscillationResult oscillation_count(const Eigen::VectorXd& u_num, const Mesh&, double delta) {
  if (!(delta > 0.0)) throw ParameterDomainError("oscillation count needs delta > 0");
  OscillationResult res;
  for (int k = 0; k + 2 < u_num.size(); ++k) {
    const double d0 = u_num(k + 1) - u_num(k);
    const double d1 = u_num(k + 2) - u_num(k + 1);
    if (std::abs(d0) > delta && std::abs(d1) > delta && d0 * d1 < 0.0) ++res.count;
  }
  res.flag = res.count >= 5;
  return res;
}

std::optional<std::pair<double, double>> interior_region(const Eigen::VectorXd& u_num,
                                                         const Mesh& mesh, double lo, double hi,
                                                         double eps, int window) {
  const int n = static_cast<int>(u_num.size());
  if (n == 0) return std::nullopt;
  const int half = std::max(0, window / 2);
  int first = -1, last = -1;
  for (int k = 0; k < n; ++k) {
    const int a = std::max(0, k - half);
    const int b = std::min(n - 1, k + half);
    const double avg = u_num.segment(a, b - a + 1).mean();
    if (avg - lo >= eps && hi - avg >= eps) {
      if (first < 0) first = k;
      last = k;
    }
  }
  if (first < 0) return std::nullopt;
  return std::make_pair(mesh.node(first), mesh.node(last));
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  if (n < 2 || y.size() != x.size()) throw ContractViolation("fit needs >= 2 paired points");
  double sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0, ss_tot = 0;
  for (int i = 0; i < n; ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    ss_res += r * r;
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

std::vector<bool> studentized_outliers(const std::vector<double>& x, const std::vector<double>& y,
                                       double threshold) {
  const int n = static_cast<int>(x.size());
  std::vector<bool> mask(n, false);
  if (n < 4) return mask;  // too few points to judge
  const LinearFit fit = fit_line(x, y);
  double mx = 0;
  for (double v : x) mx += v;
  mx /= n;
  double sxx = 0;
  for (double v : x) sxx += (v - mx) * (v - mx);
  double ss_res = 0;
  std::vector<double> res(n);
  for (int i = 0; i < n; ++i) {
    res[i] = y[i] - (fit.slope * x[i] + fit.intercept);
    ss_res += res[i] * res[i];
  }
  const double s2 = ss_res / (n - 2);
  for (int i = 0; i < n; ++i) {
    const double lev = 1.0 / n + (x[i] - mx) * (x[i] - mx) / sxx;
    const double denom = std::sqrt(s2 * (1.0 - lev));
    if (denom > 0.0 && std::abs(res[i] / denom) > threshold) mask[i] = true;
  }
  return mask;
}

int sweep_thread_count() {
  if (const char* env = std::getenv("SINGCTRL_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for_index(int count, const std::function<void(int)>& body) {
  const int workers = std::min(count, sweep_thread_count());
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < count; i += workers) body(i);
    });
  for (auto& t : pool) t.join();
}

ConvergenceTable convergence_study(const std::function<Eigen::VectorXd(const Mesh&)>& solve_u,
                                   const std::function<double(double)>& u_exact, double horizon,
                                   const std::vector<double>& hs) {
  const int n = static_cast<int>(hs.size());
  ConvergenceTable table;
  table.rows.resize(n);
  std::vector<std::string> failures(n);

  parallel_for_index(n, [&](int i) {
    try {
      const int N = static_cast<int>(std::lround(horizon / hs[i]));
      const Mesh mesh(horizon, N);
      const Eigen::VectorXd u = solve_u(mesh);
      table.rows[i].h = mesh.step();
      table.rows[i].err = grid_l1_error(u, u_exact, mesh);
    } catch (const std::exception& ex) {
      failures[i] = ex.what();
    }
  });
  for (int i = 0; i < n; ++i)
    if (!failures[i].empty())
      throw Error("convergence study failed at h = " + std::to_string(hs[i]) + ": " + failures[i]);

  std::sort(table.rows.begin(), table.rows.end(),
            [](const auto& a, const auto& b) { return a.h > b.h; });
  for (int i = 0; i + 1 < n; ++i) {
    // ratio against the halved mesh, when present
    const double target = table.rows[i].h / 2.0;
    for (int j = i + 1; j < n; ++j)
      if (std::abs(table.rows[j].h - target) <= 1e-12 * target) {
        table.rows[i].ratio = table.rows[i].err / table.rows[j].err;
        table.rows[i].log2_ratio = std::log2(*table.rows[i].ratio);
        break;
      }
  }

  if (n >= 2) {
    std::vector<double> lx(n), ly(n);
    for (int i = 0; i < n; ++i) {
      lx[i] = std::log(table.rows[i].h);
      ly[i] = std::log(table.rows[i].err);
    }
    table.fit_all = fit_line(lx, ly);
    table.outlier = studentized_outliers(lx, ly);
    std::vector<double> fx, fy;
    for (int i = 0; i < n; ++i)
      if (!table.outlier[i]) {
        fx.push_back(lx[i]);
        fy.push_back(ly[i]);
      }
    if (static_cast<int>(fx.size()) >= 2 && fx.size() < lx.size())
      table.fit_filtered = fit_line(fx, fy);
    else
      table.fit_filtered = table.fit_all;
  } else {
    table.outlier.assign(n, false);
  }
  return table;
}

}  // namespace singctrl
