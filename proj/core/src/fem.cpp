#include "afem/fem.hpp"

#include "afem/errors.hpp"
#include "element_eval.hpp"

#include <Eigen/LU>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>

namespace afem {

namespace {

void check_area(const ElementGeometry& g, int t) {
  if (!(g.area > 0.0))
    throw AssemblyError("degenerate or inverted element " + std::to_string(t));
}

SparseMatrix assemble_form(const Space& space, const ProblemDef& prob, bool lower_order,
                           bool force_identity) {
  const Mesh& mesh = space.mesh();
  const int p = space.degree(), nb = space.n_local();
  const Tabulation& tab = tabulate(p, 2 * p);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(mesh.n_elements()) * nb * nb);
  Eigen::Matrix<double, 2, Eigen::Dynamic> grads(2, nb);
  Eigen::MatrixXd K(nb, nb), L(nb, nb);
  const bool conv = lower_order && prob.convection;
  const bool reac = lower_order && prob.reaction;
  for (int t = 0; t < mesh.n_elements(); ++t) {
    ElementGeometry g = element_geometry(mesh, t);
    check_area(g, t);
    detail::DiffusionEval A(prob, g, force_identity);
    K.setZero();
    if (conv || reac) L.setZero();
    for (int q = 0; q < tab.n_points; ++q) {
      const double w = tab.weights[q] * g.area;
      detail::basis_gradients(tab, q, g, grads);
      const Point x = g.map(tab.bary[q]);
      Eigen::Matrix<double, 2, Eigen::Dynamic> ag = A(x) * grads;
      for (int j = 0; j < nb; ++j)
        for (int i = 0; i <= j; ++i) K(i, j) += w * grads.col(i).dot(ag.col(j));
      if (conv || reac) {
        const double* phi = &tab.val[q * nb];
        Point b = conv ? prob.convection(x) : Point::Zero();
        double c = reac ? prob.reaction(x) : 0.0;
        for (int j = 0; j < nb; ++j) {
          double bj = b.dot(grads.col(j)) + c * phi[j];
          for (int i = 0; i < nb; ++i) L(i, j) += w * bj * phi[i];
        }
      }
    }
    // mirror so the diffusion part is bitwise symmetric
    for (int j = 0; j < nb; ++j)
      for (int i = j + 1; i < nb; ++i) K(i, j) = K(j, i);
    if (conv || reac) K += L;
    auto dofs = space.dofs(t);
    for (int j = 0; j < nb; ++j)
      for (int i = 0; i < nb; ++i) trip.emplace_back(dofs[i], dofs[j], K(i, j));
  }
  SparseMatrix M(space.n_dofs(), space.n_dofs());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

}  // namespace

Space::Space(MeshPtr mesh, int degree)
    : mesh_(std::move(mesh)), p_(degree), basis_(&lagrange_basis(degree)) {
  if (!mesh_) throw ArgumentError("Space: null mesh");
  n_local_ = basis_->size();
  const Mesh& m = *mesh_;
  const int nv = m.n_vertices(), ne = m.n_edges(), nt = m.n_elements();
  const int per_edge = p_ - 1;
  const int per_cell = n_local_ - 3 - 3 * per_edge;
  n_dofs_ = nv + ne * per_edge + nt * per_cell;
  dof_map_.resize(static_cast<std::size_t>(nt) * n_local_);
  for (int t = 0; t < nt; ++t) {
    const auto& el = m.element(t);
    int* d = &dof_map_[static_cast<std::size_t>(t) * n_local_];
    for (int i = 0; i < 3; ++i) d[i] = el[i];
    for (int e = 0; e < 3; ++e) {
      int a = el[(e + 1) % 3], b = el[(e + 2) % 3];
      int base = nv + m.element_edge(t, e) * per_edge;
      for (int s = 1; s < p_; ++s)
        d[3 + e * per_edge + (s - 1)] = base + (a < b ? s - 1 : p_ - 1 - s);
    }
    for (int i = 0; i < per_cell; ++i) d[3 + 3 * per_edge + i] = nv + ne * per_edge + t * per_cell + i;
  }

  std::vector<char> dir(n_dofs_, 0);
  for (int e = 0; e < ne; ++e) {
    if (!m.is_boundary_edge(e)) continue;
    const auto& ed = m.edge(e);
    dir[ed[0]] = dir[ed[1]] = 1;
    for (int s = 0; s < per_edge; ++s) dir[nv + e * per_edge + s] = 1;
  }
  free_index_.assign(n_dofs_, -1);
  for (int d = 0; d < n_dofs_; ++d) {
    if (dir[d]) {
      dirichlet_dofs_.push_back(d);
    } else {
      free_index_[d] = static_cast<int>(free_dofs_.size());
      free_dofs_.push_back(d);
    }
  }

  dof_points_.resize(n_dofs_);
  for (int t = 0; t < nt; ++t) {
    ElementGeometry g = element_geometry(m, t);
    auto d = dofs(t);
    for (int n = 0; n < n_local_; ++n) {
      // vertices copied verbatim so shared dofs agree bitwise
      dof_points_[d[n]] = n < 3 ? m.vertex(m.element(t)[n]) : g.map(basis_->node(n));
    }
  }
}

ElementGeometry element_geometry(const Mesh& mesh, int t) {
  const auto& el = mesh.element(t);
  ElementGeometry g;
  g.x0 = mesh.vertex(el[0]);
  g.x1 = mesh.vertex(el[1]);
  g.x2 = mesh.vertex(el[2]);
  Matrix2 J;
  J.col(0) = g.x1 - g.x0;
  J.col(1) = g.x2 - g.x0;
  const double det = J.determinant();
  g.area = 0.5 * det;
  Matrix2 Jinv;
  Jinv << J(1, 1), -J(0, 1), -J(1, 0), J(0, 0);
  Jinv /= det;
  g.grad_bary.col(1) = Jinv.row(0).transpose();
  g.grad_bary.col(2) = Jinv.row(1).transpose();
  g.grad_bary.col(0) = -g.grad_bary.col(1) - g.grad_bary.col(2);
  return g;
}

DiscreteFunction::DiscreteFunction(SpacePtr s, Vector c) : space(std::move(s)), coeffs(std::move(c)) {
  if (!space || coeffs.size() != space->n_dofs())
    throw ArgumentError("DiscreteFunction: coefficient length does not match the space");
}

double DiscreteFunction::value(int t, const Eigen::Vector3d& l) const {
  const int nb = space->n_local();
  std::vector<double> val(nb);
  space->basis().eval(l, val.data());
  auto d = space->dofs(t);
  double s = 0.0;
  for (int n = 0; n < nb; ++n) s += coeffs[d[n]] * val[n];
  return s;
}

Point DiscreteFunction::gradient(int t, const Eigen::Vector3d& l) const {
  const int nb = space->n_local();
  std::vector<double> val(nb), d1(3 * nb);
  space->basis().eval_d1(l, val.data(), d1.data());
  ElementGeometry g = element_geometry(space->mesh(), t);
  auto d = space->dofs(t);
  Eigen::Vector3d dl = Eigen::Vector3d::Zero();
  for (int n = 0; n < nb; ++n)
    for (int a = 0; a < 3; ++a) dl[a] += coeffs[d[n]] * d1[3 * n + a];
  return g.grad_bary * dl;
}

double DiscreteFunction::operator()(const Point& x) const {
  Eigen::Vector3d l;
  int t = locate(space->mesh(), x, &l);
  if (t < 0) throw ArgumentError("DiscreteFunction: point outside the mesh");
  return value(t, l);
}

int locate(const Mesh& mesh, const Point& x, Eigen::Vector3d* bary) {
  for (int t = 0; t < mesh.n_elements(); ++t) {
    ElementGeometry g = element_geometry(mesh, t);
    Eigen::Vector3d l;
    l[1] = g.grad_bary.col(1).dot(x - g.x0);
    l[2] = g.grad_bary.col(2).dot(x - g.x0);
    l[0] = 1.0 - l[1] - l[2];
    if (l.minCoeff() >= -1e-12) {
      if (bary) *bary = l;
      return t;
    }
  }
  return -1;
}

SparseMatrix assemble_a(const Space& space, const ProblemDef& prob) {
  return assemble_form(space, prob, false, prob.is_nonlinear());
}

SparseMatrix assemble_b(const Space& space, const ProblemDef& prob) {
  if (prob.is_nonlinear())
    throw UnsupportedFormError("assemble_b: problem '" + prob.name + "' is nonlinear");
  return assemble_form(space, prob, true, false);
}

Vector assemble_load(const Space& space, const ProblemDef& prob) {
  Vector F = Vector::Zero(space.n_dofs());
  if (!prob.load && !prob.flux_load) return F;
  const Mesh& mesh = space.mesh();
  const int nb = space.n_local();
  const Tabulation& tab = tabulate(space.degree(), 2 * space.degree());
  Eigen::Matrix<double, 2, Eigen::Dynamic> grads(2, nb);
  for (int t = 0; t < mesh.n_elements(); ++t) {
    ElementGeometry g = element_geometry(mesh, t);
    auto dofs = space.dofs(t);
    for (int q = 0; q < tab.n_points; ++q) {
      const double w = tab.weights[q] * g.area;
      const Point x = g.map(tab.bary[q]);
      if (prob.load) {
        double f = prob.load(x);
        for (int n = 0; n < nb; ++n) F[dofs[n]] += w * f * tab.val[q * nb + n];
      }
      if (prob.flux_load) {
        detail::basis_gradients(tab, q, g, grads);
        Point fv = prob.flux_load(x);
        for (int n = 0; n < nb; ++n) F[dofs[n]] += w * fv.dot(grads.col(n));
      }
    }
  }
  return F;
}

Vector dirichlet_lift(const Space& space, const ProblemDef& prob) {
  Vector g = Vector::Zero(space.n_dofs());
  if (!prob.dirichlet) return g;
  for (int d : space.dirichlet_dofs()) g[d] = prob.dirichlet(space.dof_point(d));
  return g;
}

Vector assemble_rhs(const Space& space, const ProblemDef& prob, const SparseMatrix& B) {
  Vector F = assemble_load(space, prob);
  Vector g = dirichlet_lift(space, prob);
  if (g.cwiseAbs().maxCoeff() > 0.0) F -= B * g;
  return F;
}

Vector assemble_rhs(const Space& space, const ProblemDef& prob) {
  if (!prob.dirichlet) return assemble_load(space, prob);
  SparseMatrix B = prob.is_nonlinear() ? assemble_a(space, prob) : assemble_b(space, prob);
  return assemble_rhs(space, prob, B);
}

SparseMatrix free_block(const Space& space, const SparseMatrix& M) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(M.nonZeros());
  for (int k = 0; k < M.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(M, k); it; ++it) {
      int i = space.free_index(static_cast<int>(it.row()));
      int j = space.free_index(static_cast<int>(it.col()));
      if (i >= 0 && j >= 0) trip.emplace_back(i, j, it.value());
    }
  }
  SparseMatrix R(space.n_free(), space.n_free());
  R.setFromTriplets(trip.begin(), trip.end());
  return R;
}

Vector free_part(const Space& space, const Vector& v) {
  Vector r(space.n_free());
  const auto& fd = space.free_dofs();
  for (int i = 0; i < space.n_free(); ++i) r[i] = v[fd[i]];
  return r;
}

Vector with_free(const Space& space, const Vector& full, const Vector& vf) {
  Vector r = full;
  const auto& fd = space.free_dofs();
  for (int i = 0; i < space.n_free(); ++i) r[fd[i]] = vf[i];
  return r;
}

Vector apply_nonlinear(const Space& space, const ProblemDef& prob, const Vector& u) {
  if (!prob.nonlinearity) throw UnsupportedFormError("apply_nonlinear: problem is linear");
  const auto& nl = *prob.nonlinearity;
  const Mesh& mesh = space.mesh();
  const int p = space.degree(), nb = space.n_local();
  const Tabulation& tab = tabulate(p, 2 * p + 4);
  Eigen::Matrix<double, 2, Eigen::Dynamic> grads(2, nb);
  Vector r = Vector::Zero(space.n_dofs());
  for (int t = 0; t < mesh.n_elements(); ++t) {
    ElementGeometry g = element_geometry(mesh, t);
    auto dofs = space.dofs(t);
    for (int q = 0; q < tab.n_points; ++q) {
      const double w = tab.weights[q] * g.area;
      detail::basis_gradients(tab, q, g, grads);
      const double* phi = &tab.val[q * nb];
      Point du = Point::Zero();
      double uq = 0.0;
      for (int n = 0; n < nb; ++n) {
        du += u[dofs[n]] * grads.col(n);
        uq += u[dofs[n]] * phi[n];
      }
      const Point x = g.map(tab.bary[q]);
      Point flux = nl.a(du.squaredNorm()) * du;
      double lower = prob.reaction ? prob.reaction(x) * uq : 0.0;
      if (prob.convection) lower += prob.convection(x).dot(du);
      for (int n = 0; n < nb; ++n) r[dofs[n]] += w * (flux.dot(grads.col(n)) + lower * phi[n]);
    }
  }
  return r;
}

double nonlinear_energy(const Space& space, const ProblemDef& prob, const Vector& v) {
  if (!prob.nonlinearity) throw UnsupportedFormError("nonlinear_energy: problem is linear");
  const auto& nl = *prob.nonlinearity;
  const Mesh& mesh = space.mesh();
  const int p = space.degree(), nb = space.n_local();
  const Tabulation& tab = tabulate(p, 2 * p + 4);
  Eigen::Matrix<double, 2, Eigen::Dynamic> grads(2, nb);
  double E = 0.0;
  for (int t = 0; t < mesh.n_elements(); ++t) {
    ElementGeometry g = element_geometry(mesh, t);
    auto dofs = space.dofs(t);
    for (int q = 0; q < tab.n_points; ++q) {
      const double w = tab.weights[q] * g.area;
      detail::basis_gradients(tab, q, g, grads);
      const double* phi = &tab.val[q * nb];
      Point dv = Point::Zero();
      double vq = 0.0;
      for (int n = 0; n < nb; ++n) {
        dv += v[dofs[n]] * grads.col(n);
        vq += v[dofs[n]] * phi[n];
      }
      const Point x = g.map(tab.bary[q]);
      double c = prob.reaction ? prob.reaction(x) : 0.0;
      double f = prob.load ? prob.load(x) : 0.0;
      E += w * (0.5 * nl.psi(dv.squaredNorm()) + 0.5 * c * vq * vq - f * vq);
    }
  }
  return E;
}

DiscreteFunction solve_galerkin_exact(const SpacePtr& space, const ProblemDef& prob) {
  const Space& S = *space;
  Vector g = dirichlet_lift(S, prob);
  if (S.n_free() == 0) return {space, g};
  if (!prob.is_nonlinear()) {
    SparseMatrix B = assemble_b(S, prob);
    Vector rhs = free_part(S, assemble_rhs(S, prob, B));
    SparseMatrix Bff = free_block(S, B);
    Vector x;
    if (prob.has_symmetric_form()) {
      Eigen::SimplicialLDLT<SparseMatrix> solver(Bff);
      if (solver.info() != Eigen::Success) throw SolverError("solve_galerkin_exact: LDLT failed");
      x = solver.solve(rhs);
    } else {
      Eigen::SparseLU<SparseMatrix> solver;
      solver.analyzePattern(Bff);
      solver.factorize(Bff);
      if (solver.info() != Eigen::Success) throw SolverError("solve_galerkin_exact: LU failed");
      x = solver.solve(rhs);
    }
    if (!x.allFinite()) throw SolverError("solve_galerkin_exact: singular system");
    return {space, with_free(S, g, x)};
  }

  const auto& nl = *prob.nonlinearity;
  SparseMatrix A = assemble_a(S, prob);
  SparseMatrix Aff = free_block(S, A);
  Eigen::SimplicialLDLT<SparseMatrix> solver(Aff);
  if (solver.info() != Eigen::Success) throw SolverError("solve_galerkin_exact: LDLT failed");
  const Vector F = free_part(S, assemble_load(S, prob));
  const double delta = 1.0 / nl.lipschitz;
  Vector u = g;
  for (int it = 0; it < 10000; ++it) {
    Vector r = F - free_part(S, apply_nonlinear(S, prob, u));
    Vector d = solver.solve(delta * r);
    Vector uf = free_part(S, u) + d;
    u = with_free(S, u, uf);
    double inc = std::sqrt(std::max(0.0, d.dot(Aff * d)));
    double scale = std::max(1.0, std::sqrt(std::max(0.0, uf.dot(Aff * uf))));
    if (inc <= 1e-11 * scale) return {space, u};
  }
  throw SolverError("solve_galerkin_exact: Zarantonello iteration did not converge");
}

SparseMatrix prolongation_matrix(const Space& coarse, const Space& fine) {
  if (coarse.degree() != fine.degree())
    throw ArgumentError("prolongation_matrix: polynomial degrees differ");
  if (!fine.mesh().is_descendant_of(coarse.mesh()))
    throw ArgumentError("prolongation_matrix: fine mesh is not an NVB descendant");
  std::vector<int> anc = fine.mesh().ancestor_map(coarse.mesh());
  const int nb = coarse.n_local();
  std::vector<char> done(fine.n_dofs(), 0);
  std::vector<double> val(nb);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(fine.n_dofs()) * 3);
  for (int t = 0; t < fine.mesh().n_elements(); ++t) {
    const int T = anc[t];
    ElementGeometry g = element_geometry(coarse.mesh(), T);
    auto cd = coarse.dofs(T);
    for (int d : fine.dofs(t)) {
      if (done[d]) continue;
      done[d] = 1;
      const Point& x = fine.dof_point(d);
      Eigen::Vector3d l;
      l[1] = g.grad_bary.col(1).dot(x - g.x0);
      l[2] = g.grad_bary.col(2).dot(x - g.x0);
      l[0] = 1.0 - l[1] - l[2];
      coarse.basis().eval(l, val.data());
      for (int n = 0; n < nb; ++n) {
        double v = val[n];
        if (std::abs(v) < 1e-14) continue;
        if (std::abs(v - 1.0) < 1e-14) v = 1.0;
        trip.emplace_back(d, cd[n], v);
      }
    }
  }
  SparseMatrix P(fine.n_dofs(), coarse.n_dofs());
  P.setFromTriplets(trip.begin(), trip.end());
  return P;
}

DiscreteFunction prolongate(const DiscreteFunction& coarse, const SpacePtr& fine_space) {
  SparseMatrix P = prolongation_matrix(*coarse.space, *fine_space);
  return {fine_space, P * coarse.coeffs};
}

double energy_inner(const SparseMatrix& A, const Vector& v, const Vector& w) {
  if (A.rows() != v.size() || A.cols() != w.size())
    throw ArgumentError("energy_inner: dimension mismatch");
  return v.dot(A * w);
}

double energy_norm(const SparseMatrix& A, const Vector& v) {
  return std::sqrt(std::max(0.0, energy_inner(A, v, v)));
}

double energy_inner(const Space& space, const ProblemDef& prob, const DiscreteFunction& v,
                    const DiscreteFunction& w) {
  if (v.space.get() != &space || w.space.get() != &space)
    throw ArgumentError("energy_inner: function does not live on this space");
  return energy_inner(assemble_a(space, prob), v.coeffs, w.coeffs);
}

double energy_norm(const Space& space, const ProblemDef& prob, const DiscreteFunction& v) {
  return std::sqrt(std::max(0.0, energy_inner(space, prob, v, v)));
}

double energy_error(const DiscreteFunction& uh, const ProblemDef& prob) {
  if (!prob.exact) throw ArgumentError("energy_error: problem has no exact solution");
  const Space& S = *uh.space;
  const Mesh& mesh = S.mesh();
  const int nb = S.n_local();
  const Tabulation& tab = tabulate(S.degree(), 2 * S.degree() + 6);
  Eigen::Matrix<double, 2, Eigen::Dynamic> grads(2, nb);
  double err2 = 0.0;
  for (int t = 0; t < mesh.n_elements(); ++t) {
    ElementGeometry g = element_geometry(mesh, t);
    detail::DiffusionEval A(prob, g, prob.is_nonlinear());
    auto dofs = S.dofs(t);
    for (int q = 0; q < tab.n_points; ++q) {
      detail::basis_gradients(tab, q, g, grads);
      Point du = Point::Zero();
      for (int n = 0; n < nb; ++n) du += uh.coeffs[dofs[n]] * grads.col(n);
      const Point x = g.map(tab.bary[q]);
      Point e = prob.exact->gradient(x) - du;
      err2 += tab.weights[q] * g.area * e.dot(A(x) * e);
    }
  }
  return std::sqrt(err2);
}

}  // namespace afem
