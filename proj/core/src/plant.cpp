#include "singctrl/problems/plant.hpp"

#include <cmath>
#include <functional>

#include "singctrl/errors.hpp"

namespace singctrl {

namespace {

// Bisection on a fixed bracket, then Newton polish with a central-difference
// slope; deterministic to the last bit for fixed inputs.
double find_root(const std::function<double(double)>& f, double a, double b, double atol = 1e-12) {
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0.0) throw InternalConsistencyError("root bracket does not change sign");
  for (int it = 0; it < 200 && b - a > atol; ++it) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if (fm == 0.0) return m;
    if (fa * fm < 0.0) {
      b = m;
      fb = fm;
    } else {
      a = m;
      fa = fm;
    }
  }
  double x = 0.5 * (a + b);
  for (int it = 0; it < 4; ++it) {
    const double dh = 1e-7 * (1.0 + std::abs(x));
    const double slope = (f(x + dh) - f(x - dh)) / (2.0 * dh);
    if (slope == 0.0) break;
    const double step = f(x) / slope;
    const double xn = x - step;
    if (xn < a || xn > b) break;
    x = xn;
  }
  return x;
}

}  // namespace

const char* to_string(PlantCase c) {
  switch (c) {
    case PlantCase::case_2a: return "2a";
    case PlantCase::case_2b: return "2b";
    case PlantCase::case_2c: return "2c";
    case PlantCase::bang_bang: return "bang-bang";
    case PlantCase::purely_reproductive: return "purely-reproductive";
  }
  return "unknown";
}

ControlProblem plant_problem(const PlantParams& params) {
  if (!(params.x10 > 0.0)) throw ParameterDomainError("plant: x10 must be positive");
  if (!(params.x20 >= 1e-8))
    throw ParameterDomainError("plant: x20 must be at least 1e-8 for a finite cost");
  ControlProblem prob;
  prob.state_dim = 2;
  prob.control_dim = 1;
  prob.x0 = Eigen::Vector2d(params.x10, params.x20);
  prob.lower = Eigen::VectorXd::Constant(1, 0.0);
  prob.upper = Eigen::VectorXd::Constant(1, 1.0);
  prob.running_cost = [](const double* x, const double*) { return -std::log(x[1]); };
  prob.dynamics = [](const double* x, const double* u, double* out) {
    out[0] = u[0] * x[0];
    out[1] = (1.0 - u[0]) * x[0];
  };
  prob.dynamics_dx = [](const double*, const double* u, double* out) {
    out[0] = u[0];        // df1/dx1
    out[1] = 0.0;         // df1/dx2
    out[2] = 1.0 - u[0];  // df2/dx1
    out[3] = 0.0;         // df2/dx2
  };
  prob.dynamics_du = [](const double* x, const double*, double* out) {
    out[0] = x[0];
    out[1] = -x[0];
  };
  prob.cost_dx = [](const double* x, const double*, double* out) {
    out[0] = 0.0;
    out[1] = -1.0 / x[1];
  };
  prob.cost_du = [](const double*, const double*, double* out) { out[0] = 0.0; };
  return prob;
}

PlantConstants plant_constants() {
  const double z = find_root(
      [](double zz) { return 1.0 / zz - std::log(1.0 / zz + 1.0 / (zz * zz) + 1.0); }, 1e-6, 10.0,
      1e-14);
  PlantConstants c;
  c.z = z;
  c.y = 1.0 + 1.0 / z;
  c.terminal_ratio = c.y + c.z;
  return c;
}

PlantCase plant_classify(const PlantParams& params) {
  const PlantConstants c = plant_constants();
  const double T = params.T;
  const double r = params.x20 / params.x10;
  const double rel = 1e-9;

  if (T > c.terminal_ratio) {
    const double r_max = c.z * std::exp(T - c.y);
    if (r < r_max) {
      const double r_sing = 1.0 / (T - 1.0);
      if (std::abs(r - r_sing) <= rel * std::max(1.0, std::abs(r_sing))) return PlantCase::case_2a;
      return r < r_sing ? PlantCase::case_2b : PlantCase::case_2c;
    }
    return PlantCase::bang_bang;
  }
  // Short horizons never reach the singular arc.
  if (r <= c.terminal_ratio - T) return PlantCase::purely_reproductive;
  return PlantCase::bang_bang;
}

PlantExact plant_exact(const PlantParams& params) {
  const PlantCase tag = plant_classify(params);
  if (tag != PlantCase::case_2a && tag != PlantCase::case_2b && tag != PlantCase::case_2c)
    throw ParameterDomainError("plant: closed forms exist only for the singular cases");

  const double T = params.T;
  const PlantConstants c = plant_constants();

  PlantExact e;
  e.params = params;
  e.tag = tag;
  e.t2 = T - c.y;

  if (tag == PlantCase::case_2a) {
    e.t1 = 0.0;
  } else if (tag == PlantCase::case_2b) {
    const double r = params.x20 / params.x10;
    // roots of (T - 1 - t)(r + t) = 1, i.e. t^2 - (T - 1 - r) t + 1 - (T - 1) r = 0
    const double disc = (T - 1.0 + r) * (T - 1.0 + r) - 4.0;
    if (disc < 0.0) throw InternalConsistencyError("plant 2b: negative discriminant");
    const double lo = 0.5 * (T - 1.0 - r - std::sqrt(disc));
    const double hi = 0.5 * (T - 1.0 - r + std::sqrt(disc));
    const bool lo_ok = lo > 0.0 && lo < e.t2;
    const bool hi_ok = hi > 0.0 && hi < e.t2;
    if (lo_ok == hi_ok) throw InternalConsistencyError("plant 2b: switch root not isolated");
    e.t1 = lo_ok ? lo : hi;
  } else {
    const double r = params.x20 / params.x10;
    e.t1 = find_root([r, T](double t) { return r * std::exp(-t) - 1.0 / (T - 1.0 - t); }, 1e-12,
                     e.t2, 1e-14);
  }

  if (tag == PlantCase::case_2b) {
    e.x1_t1 = params.x10;
    e.x2_t1 = params.x10 * e.t1 + params.x20;
  } else if (tag == PlantCase::case_2c) {
    e.x1_t1 = params.x10 * std::exp(e.t1);
    e.x2_t1 = params.x20;
  } else {
    e.x1_t1 = params.x10;
    e.x2_t1 = params.x20;
  }
  e.x2_t2 = e.x2_t1 * std::exp(e.t2 - e.t1);
  e.x1_t2 = (T - 1.0 - e.t2) * e.x2_t2;
  e.x2_T = e.x1_t2 * (T - e.t2) + e.x2_t2;
  return e;
}

double PlantExact::u(double t) const {
  if (t < t1) return tag == PlantCase::case_2b ? 0.0 : 1.0;
  if (t <= t2) return 1.0 - 1.0 / (params.T - 1.0 - t);
  return 0.0;
}

double PlantExact::x1(double t) const {
  if (t < t1) return tag == PlantCase::case_2b ? params.x10 : params.x10 * std::exp(t);
  if (t <= t2) return (params.T - 1.0 - t) * x2(t);
  return x1_t2;
}

double PlantExact::x2(double t) const {
  if (t < t1) return tag == PlantCase::case_2b ? params.x10 * t + params.x20 : params.x20;
  if (t <= t2) return x2_t1 * std::exp(t - t1);
  return x1_t2 * (t - t2) + x2_t2;
}

double PlantExact::lambda2(double t) const {
  if (t < t1) {
    if (tag == PlantCase::case_2b)
      return std::log(x2(t) / x2_t1) / params.x10 - 1.0 / x2_t1;
    return (t - t1) / params.x20 - 1.0 / x2_t1;  // case 2c, x2 constant here
  }
  if (t <= t2) return -std::exp(t1 - t) / x2_t1;
  return std::log(x2(t) / x2_T) / x1_t2;
}

double PlantExact::lambda1(double t) const {
  if (t < t1) {
    if (tag == PlantCase::case_2b) {
      const double v = x2(t);
      const double x10 = params.x10;
      return v * std::log(x2_t1 / v) / (x10 * x10) + (v - x2_t1) / (x10 * x10) +
             (v - x2_t1) / (x2_t1 * x10) - 1.0 / x2_t1;
    }
    return -std::exp(t1 - t) / params.x20;  // case 2c
  }
  if (t <= t2) return lambda2(t);  // adjoints coincide on the singular arc
  const double v = x2(t);
  return -(v * std::log(v / x2_T) + x2_T - v) / (x1_t2 * x1_t2);
}

}  // namespace singctrl
