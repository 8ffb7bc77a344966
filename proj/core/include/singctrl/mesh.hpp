#pragma once

#include "singctrl/errors.hpp"

namespace singctrl {

// Uniform mesh on [0, T] with N intervals and N+1 nodes t_k = k*h.
struct Mesh {
  double horizon = 0.0;
  int intervals = 0;

  Mesh(double T, int N) : horizon(T), intervals(N) {
    if (!(T > 0.0)) throw ParameterDomainError("mesh horizon must be positive");
    if (N < 1) throw ParameterDomainError("mesh must have at least one interval");
  }

  double step() const { return horizon / intervals; }
  double node(int k) const { return k * step(); }
};

}  // namespace singctrl
