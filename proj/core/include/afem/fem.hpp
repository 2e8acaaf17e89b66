#pragma once

#include "afem/lagrange.hpp"
#include "afem/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace afem {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Matrix2 = Eigen::Matrix2d;

/// Scalar nonlinearity A(grad u) = a(|grad u|^2) grad u.
struct Nonlinearity {
  std::function<double(double)> a;        // a(t)
  std::function<double(double)> a_prime;  // a'(t)
  std::function<double(double)> psi;     // Psi(s) = int_0^s a(t) dt
  double alpha = 1.0;                     // strong monotonicity
  double lipschitz = 1.0;                 // L
};

/// Monotonicity and Lipschitz constants of b(.,.) (or of the quasi-linear
/// operator) with respect to the energy norm of a(.,.).
struct MonotonicityBounds {
  double alpha = 1.0;
  double lipschitz = 1.0;
};

struct ExactSolution {
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;
};

/// Coefficients and data of
///   -div(A grad u - f_vec) + b . grad u + c u = f,  u = u_D on the boundary,
/// or of the quasi-linear variant with A grad u replaced by a(|grad u|^2) grad u.
/// Empty callables mean zero (A: identity).
struct ProblemDef {
  std::string name;
  std::function<Matrix2(const Point&)> diffusion;
  /// Column divergence of A, (d_j A_ij)_i; empty means zero inside elements.
  std::function<Point(const Point&)> diffusion_div;
  /// Evaluate A once per element at its centroid (piecewise constant data).
  bool diffusion_elementwise_constant = false;
  std::function<Point(const Point&)> convection;
  std::function<double(const Point&)> reaction;
  std::function<double(const Point&)> load;
  std::function<Point(const Point&)> flux_load;
  std::function<double(const Point&)> flux_load_div;
  std::function<double(const Point&)> dirichlet;
  std::function<Point(const Point&)> dirichlet_gradient;
  std::optional<Nonlinearity> nonlinearity;
  std::optional<ExactSolution> exact;
  /// Known monotonicity constants (linear problems); the quasi-linear
  /// constants live in `nonlinearity`.
  std::optional<MonotonicityBounds> bounds;

  std::optional<MonotonicityBounds> monotonicity() const {
    if (nonlinearity) return MonotonicityBounds{nonlinearity->alpha, nonlinearity->lipschitz};
    return bounds;
  }

  bool is_nonlinear() const { return nonlinearity.has_value(); }
  /// b(.,.) coincides with a(.,.) (no convection, no reaction, linear).
  bool is_symmetric_energy() const { return !convection && !reaction && !nonlinearity; }
  /// The assembled b(.,.) matrix is symmetric (no convection).
  bool has_symmetric_form() const { return !convection && !nonlinearity; }
};

/// P_p Lagrange space with global numbering: vertex dofs first (dof = vertex
/// index), then p-1 dofs per edge (ordered from the smaller to the larger
/// vertex index), then interior dofs element by element. All boundary dofs
/// are Dirichlet dofs.
class Space {
 public:
  Space(MeshPtr mesh, int degree);

  const Mesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  int degree() const { return p_; }
  int n_dofs() const { return n_dofs_; }
  int n_local() const { return n_local_; }
  int n_free() const { return static_cast<int>(free_dofs_.size()); }

  std::span<const int> dofs(int t) const {
    return {dof_map_.data() + static_cast<std::size_t>(t) * n_local_,
            static_cast<std::size_t>(n_local_)};
  }
  bool is_dirichlet(int d) const { return free_index_[d] < 0; }
  const std::vector<int>& dirichlet_dofs() const { return dirichlet_dofs_; }
  const std::vector<int>& free_dofs() const { return free_dofs_; }
  /// Position of a dof in the free-dof vector, -1 for Dirichlet dofs.
  int free_index(int d) const { return free_index_[d]; }

  /// Nodal point of a global dof.
  const Point& dof_point(int d) const { return dof_points_[d]; }
  const LagrangeBasis& basis() const { return *basis_; }

 private:
  MeshPtr mesh_;
  int p_;
  int n_local_;
  int n_dofs_ = 0;
  const LagrangeBasis* basis_;
  std::vector<int> dof_map_;
  std::vector<int> free_index_;
  std::vector<int> free_dofs_;
  std::vector<int> dirichlet_dofs_;
  std::vector<Point> dof_points_;
};

using SpacePtr = std::shared_ptr<const Space>;

/// Element geometry: the affine map and barycentric gradients.
struct ElementGeometry {
  double area;
  Eigen::Matrix<double, 2, 3> grad_bary;  // column a: grad lambda_a
  Point map(const Eigen::Vector3d& l) const { return l[0] * x0 + l[1] * x1 + l[2] * x2; }
  Point x0, x1, x2;
};
ElementGeometry element_geometry(const Mesh& mesh, int t);

struct DiscreteFunction {
  SpacePtr space;
  Vector coeffs;

  DiscreteFunction() = default;
  DiscreteFunction(SpacePtr s, Vector c);
  /// Value at barycentric point `l` of element t.
  double value(int t, const Eigen::Vector3d& l) const;
  Point gradient(int t, const Eigen::Vector3d& l) const;
  /// Value at a physical point (linear search for the containing element).
  double operator()(const Point& x) const;
};

/// Element containing x and the barycentric coordinates of x in it, or -1.
int locate(const Mesh& mesh, const Point& x, Eigen::Vector3d* bary);

/// Matrix of a(u, v) = <A grad u, grad v> over all dofs (A = I for
/// quasi-linear problems).
SparseMatrix assemble_a(const Space& space, const ProblemDef& prob);
/// Matrix of b(u, v) = a(u, v) + <b . grad u + c u, v>. Linear problems only.
SparseMatrix assemble_b(const Space& space, const ProblemDef& prob);
/// Load vector F(v) = <f, v> + <f_vec, grad v> over all dofs.
Vector assemble_load(const Space& space, const ProblemDef& prob);
/// Nodal interpolation of u_D on the Dirichlet dofs, zero elsewhere.
Vector dirichlet_lift(const Space& space, const ProblemDef& prob);
/// F - B g with g the Dirichlet lift (full length; use the free rows).
Vector assemble_rhs(const Space& space, const ProblemDef& prob);
/// Same, for a matrix B the caller already assembled.
Vector assemble_rhs(const Space& space, const ProblemDef& prob, const SparseMatrix& B);

SparseMatrix free_block(const Space& space, const SparseMatrix& M);
Vector free_part(const Space& space, const Vector& v);
/// Full vector with free entries `vf` and Dirichlet entries from `full`.
Vector with_free(const Space& space, const Vector& full, const Vector& vf);

/// Nonlinear operator <a(|grad u|^2) grad u, grad v> + <c u, v> for every
/// basis function v (full length).
Vector apply_nonlinear(const Space& space, const ProblemDef& prob, const Vector& u);
/// Energy E(v) = int Psi(|grad v|^2)/2 + c v^2 / 2 - f v.
double nonlinear_energy(const Space& space, const ProblemDef& prob, const Vector& v);

/// Galerkin solution. Linear: sparse direct solve of the reduced system.
/// Quasi-linear: Zarantonello fixed point with delta = 1/L to 1e-11.
DiscreteFunction solve_galerkin_exact(const SpacePtr& space, const ProblemDef& prob);

/// Coarse-to-fine embedding matrix (fine dofs x coarse dofs).
SparseMatrix prolongation_matrix(const Space& coarse, const Space& fine);
/// Exact embedding of a coarse function into a finer NVB space.
DiscreteFunction prolongate(const DiscreteFunction& coarse, const SpacePtr& fine_space);

/// Energy inner product a(v, w) using the supplied matrix of a(.,.).
double energy_inner(const SparseMatrix& A, const Vector& v, const Vector& w);
double energy_norm(const SparseMatrix& A, const Vector& v);
double energy_inner(const Space& space, const ProblemDef& prob, const DiscreteFunction& v,
                    const DiscreteFunction& w);
double energy_norm(const Space& space, const ProblemDef& prob, const DiscreteFunction& v);

/// |||u - u_h||| against the exact solution, by quadrature of order 2p+6.
double energy_error(const DiscreteFunction& uh, const ProblemDef& prob);

}  // namespace afem
