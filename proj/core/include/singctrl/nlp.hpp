#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

namespace singctrl {

// One row of a sparse equality matrix, stored as (column, value) pairs.
struct SparseRow {
  std::vector<std::pair<int, double>> entries;
};

// min J(z) subject to lo <= z <= hi (entries may be +-inf) and B z = 0.
struct PolyhedralNLP {
  int dim = 0;
  std::function<double(const Eigen::VectorXd&)> objective;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> gradient;
  Eigen::VectorXd lo, hi;
  std::vector<SparseRow> equality;
};

}  // namespace singctrl
