#pragma once

#include <Eigen/Dense>
#include <array>
#include <utility>
#include <vector>

#include "singctrl/mesh.hpp"
#include "singctrl/nlp.hpp"
#include "singctrl/problem.hpp"

namespace singctrl {

// Per-channel total-variation penalty weights, each in [0, 1).
struct TVWeights {
  Eigen::VectorXd rho;

  explicit TVWeights(Eigen::VectorXd r);
};

// Sparse (N-1) x N forward-difference matrix with rows [-1, 1].
struct DifferenceMatrix {
  int rows = 0;
  int cols = 0;
  // row_entries[r] holds the two (col, value) pairs of row r.
  std::vector<std::array<std::pair<int, double>, 2>> row_entries;

  static DifferenceMatrix bidiagonal(int N);
};

// Stacked decision vector [u_1, zeta_1, iota_1, ..., u_m, zeta_m, iota_m]
// where zeta/iota are the nonnegative split of consecutive control
// differences: u_{k+1} - u_k = zeta_k - iota_k.
struct DecomposedPoint {
  Eigen::MatrixXd u;     // m x N
  Eigen::MatrixXd zeta;  // m x (N-1)
  Eigen::MatrixXd iota;  // m x (N-1)

  int channels() const { return static_cast<int>(u.rows()); }
  int intervals() const { return static_cast<int>(u.cols()); }

  Eigen::VectorXd stacked() const;
  static DecomposedPoint from_stacked(const Eigen::VectorXd& z, int m, int N);
  static DecomposedPoint decompose(const Eigen::MatrixXd& u);
};

// Stacked-vector offsets for channel j in a length m*(3N-2) vector.
struct StackedLayout {
  int m = 0;
  int N = 0;
  int dim() const { return m * (3 * N - 2); }
  int channel_offset(int j) const { return j * (3 * N - 2); }
  int u_offset(int j) const { return channel_offset(j); }
  int zeta_offset(int j) const { return channel_offset(j) + N; }
  int iota_offset(int j) const { return channel_offset(j) + 2 * N - 1; }
};

// V(u) = sum_{k=0}^{N-2} |u_{k+1} - u_k|; 0 for N <= 1.
double total_variation(const Eigen::VectorXd& u);

// Nonnegative split of consecutive differences: delta > 0 goes to zeta,
// delta <= 0 goes to iota (as -delta). Complementary by construction.
std::pair<Eigen::VectorXd, Eigen::VectorXd> tv_decompose(const Eigen::VectorXd& u);

// Builds the penalized NLP over the stacked vector: discrete cost plus
// sum_j rho_j * sum_k (zeta_{j,k} + iota_{j,k}), box bounds (control bounds
// on u, [0, inf) on zeta/iota), and equality rows [A_j | -I | I] per channel.
PolyhedralNLP assemble_nlp(const ControlProblem& problem, const Mesh& mesh,
                           const TVWeights& weights);

}  // namespace singctrl
