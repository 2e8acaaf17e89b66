#pragma once

#include <Eigen/Core>

#include <array>
#include <vector>

namespace afem {

/// Nodal P_p Lagrange basis on a triangle in barycentric coordinates.
///
/// Local node order: the three vertices, then the p-1 nodes of local edge
/// 0, 1, 2 (edge i runs from vertex i+1 to vertex i+2), then interior nodes.
class LagrangeBasis {
 public:
  explicit LagrangeBasis(int p);

  int degree() const { return p_; }
  int size() const { return static_cast<int>(index_.size()); }
  /// Multi-index (i, j, k), i + j + k = p, of local node n.
  const std::array<int, 3>& multi_index(int n) const { return index_[n]; }
  /// Barycentric coordinates of local node n.
  Eigen::Vector3d node(int n) const;

  /// Values at barycentric point `l`.
  void eval(const Eigen::Vector3d& l, double* val) const;
  /// Values and first derivatives d/dlambda_a (row-major n x 3).
  void eval_d1(const Eigen::Vector3d& l, double* val, double* d1) const;
  /// Second derivatives d2/dlambda_a dlambda_b (n x 9).
  void eval_d2(const Eigen::Vector3d& l, double* d2) const;

 private:
  // univariate factor L_i(t) = prod_{m<i} (p t - m) / (m + 1) and derivatives
  void factor(int i, double t, double& v, double& d, double& dd) const;

  int p_;
  std::vector<std::array<int, 3>> index_;
};

/// Basis values and barycentric derivatives tabulated at the points of a
/// triangle rule; cached per (p, order).
struct Tabulation {
  int n_basis = 0;
  int n_points = 0;
  std::vector<Eigen::Vector3d> bary;
  std::vector<double> weights;
  std::vector<double> val;  // [q * n_basis + n]
  std::vector<double> d1;   // [(q * n_basis + n) * 3 + a]
  std::vector<double> d2;   // [(q * n_basis + n) * 9 + 3a + b]
};

const LagrangeBasis& lagrange_basis(int p);
const Tabulation& tabulate(int p, int order);
/// Tabulation at Gauss points of local edge i (from vertex i+1 to i+2).
const Tabulation& tabulate_edge(int p, int order, int local_edge);

}  // namespace afem
