#pragma once

#include <Eigen/Dense>

#include "singctrl/mesh.hpp"
#include "singctrl/problem.hpp"

namespace singctrl {

// Resource allocation between vegetative growth x1 and reproductive growth x2:
//   x1' = u x1,  x2' = (1 - u) x1,  u in [0, 1],  minimize -integral ln(x2).
struct PlantParams {
  double T = 5.0;
  double x10 = 4.0;
  double x20 = 1.0;
};

enum class PlantCase { case_2a, case_2b, case_2c, bang_bang, purely_reproductive };

// Horizon-independent constants of the optimal synthesis:
//   y = T - t2 and z = x2(t2)/x1(t2) solve y = 1 + 1/z, 1/z = ln(y/z + 1).
struct PlantConstants {
  double y = 0.0;
  double z = 0.0;
  double terminal_ratio = 0.0;  // y + z
};

// Closed-form optimal solution for the singular cases: optional initial bang
// arc on [0, t1) (u = 0 in case 2b, u = 1 in case 2c), singular arc
// u = 1 - 1/(T - 1 - t) on [t1, t2], then u = 0 to the horizon.
struct PlantExact {
  PlantParams params;
  PlantCase tag = PlantCase::case_2a;
  double t1 = 0.0;
  double t2 = 0.0;
  // junction values cached for the piecewise formulas
  double x1_t1 = 0.0, x2_t1 = 0.0;
  double x1_t2 = 0.0, x2_t2 = 0.0;
  double x2_T = 0.0;

  double u(double t) const;
  double x1(double t) const;
  double x2(double t) const;
  double lambda1(double t) const;
  double lambda2(double t) const;
};

ControlProblem plant_problem(const PlantParams& params);
PlantConstants plant_constants();
PlantCase plant_classify(const PlantParams& params);
PlantExact plant_exact(const PlantParams& params);

const char* to_string(PlantCase c);

}  // namespace singctrl
