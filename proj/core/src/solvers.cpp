#include "afem/solvers.hpp"

#include "afem/errors.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <random>

namespace afem {

SolverKind parse_solver_kind(const std::string& name) {
  if (name == "direct") return SolverKind::direct;
  if (name == "local-mg" || name == "local_multigrid" || name == "mg")
    return SolverKind::local_multigrid;
  if (name == "richardson" || name == "damped_richardson") return SolverKind::damped_richardson;
  throw ArgumentError("unknown solver '" + name + "' (expected direct, local-mg, richardson)");
}

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::direct: return "direct";
    case SolverKind::local_multigrid: return "local-mg";
    case SolverKind::damped_richardson: return "richardson";
  }
  return "?";
}

namespace {

void check_spd_shape(const SparseMatrix& A) {
  if (A.rows() != A.cols()) throw SolverError("solver setup: matrix is not square");
  for (int k = 0; k < A.outerSize(); ++k) {
    bool diag = false;
    for (SparseMatrix::InnerIterator it(A, k); it; ++it)
      if (it.row() == it.col()) diag = it.value() > 0.0;
    if (!diag) throw SolverError("solver setup: non-positive diagonal entry");
  }
  SparseMatrix T = A.transpose();
  double asym = (A - T).norm(), scale = A.norm();
  if (asym > 1e-10 * scale) throw SolverError("solver setup: matrix is not symmetric");
}

Vector diagonal(const SparseMatrix& A) { return A.diagonal(); }

// in-place Gauss-Seidel sweep over `set` (ascending or descending)
void gauss_seidel(const SparseMatrix& A, const Vector& diag, const std::vector<int>& set,
                  const Vector& r, Vector& e, bool forward) {
  const int n = static_cast<int>(set.size());
  for (int s = 0; s < n; ++s) {
    const int i = set[forward ? s : n - 1 - s];
    double acc = r[i];
    // A is symmetric, so column i holds row i
    for (SparseMatrix::InnerIterator it(A, i); it; ++it) acc -= it.value() * e[it.row()];
    e[i] += acc / diag[i];
  }
}

}  // namespace

SolverState::SolverState(SolverKind kind, const MultigridOptions& mg) : kind_(kind), mg_(mg) {
  if (mg.sweeps < 1) throw ArgumentError("SolverState: need at least one smoothing sweep");
  if (mg.cg_steps < 0) throw ArgumentError("SolverState: cg_steps must be nonnegative");
}

const SparseMatrix& SolverState::matrix() const {
  if (levels_.empty()) throw SolverError("SolverState: no level set up");
  return levels_.back().A;
}

void SolverState::add_level(const SpacePtr& space, SparseMatrix A_ff) {
  if (kind_ == SolverKind::local_multigrid && !levels_.empty()) {
    const int n = n_levels();
    if (mg_.growth > 1.0 && n >= 2 && space->n_free() < mg_.growth * levels_[n - 2].A.rows())
      levels_.pop_back();
    const SpacePtr coarse = levels_.back().space;
    add_level(space, std::move(A_ff), coarse, prolongation_matrix(*coarse, *space));
    return;
  }
  check_spd_shape(A_ff);
  if (kind_ == SolverKind::local_multigrid && space->degree() != 1)
    throw ArgumentError("SolverState: local multigrid supports p = 1 only");
  Level lvl;
  lvl.space = space;
  lvl.A = std::move(A_ff);
  lvl.diag = diagonal(lvl.A);
  if (kind_ != SolverKind::local_multigrid) levels_.clear();
  levels_.push_back(std::move(lvl));
  finest_.reset();
  if (kind_ == SolverKind::local_multigrid) {
    coarse_ = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>(levels_[0].A);
    if (coarse_->info() != Eigen::Success) throw SolverError("SolverState: coarse factorization failed");
  }
  if (kind_ == SolverKind::damped_richardson) {
    const SparseMatrix& A = levels_.back().A;
    double bound = 0.0;
    std::vector<double> rowsum(A.rows(), 0.0);
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(A, k); it; ++it) rowsum[it.row()] += std::abs(it.value());
    for (int i = 0; i < A.rows(); ++i) bound = std::max(bound, rowsum[i] / levels_.back().diag[i]);
    omega_ = bound > 0.0 ? 1.0 / bound : 1.0;
  }
}

void SolverState::add_level(const SpacePtr& space, SparseMatrix A_ff, const SpacePtr& coarse,
                            const SparseMatrix& P_full) {
  if (kind_ != SolverKind::local_multigrid || levels_.empty()) {
    add_level(space, std::move(A_ff));
    return;
  }
  check_spd_shape(A_ff);
  if (space->degree() != 1) throw ArgumentError("SolverState: local multigrid supports p = 1 only");
  Level lvl;
  lvl.space = space;
  lvl.A = std::move(A_ff);
  lvl.diag = diagonal(lvl.A);
  if (coarse != levels_.back().space)
    throw ArgumentError("SolverState: coarse space does not match the previous level");

  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < P_full.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(P_full, k); it; ++it) {
      int i = space->free_index(static_cast<int>(it.row()));
      int j = coarse->free_index(static_cast<int>(it.col()));
      if (i >= 0 && j >= 0) trip.emplace_back(i, j, it.value());
    }
  }
  lvl.P.resize(space->n_free(), coarse->n_free());
  lvl.P.setFromTriplets(trip.begin(), trip.end());

  // new vertices and their neighbours along fine edges
  const Mesh& m = space->mesh();
  const int first_new = coarse->mesh().n_vertices();
  std::vector<char> in(m.n_vertices(), 0);
  for (int e = 0; e < m.n_edges(); ++e) {
    auto [a, b] = m.edge(e);
    if (a >= first_new || b >= first_new) in[a] = in[b] = 1;
  }
  for (int v = 0; v < m.n_vertices(); ++v) {
    int f = space->free_index(v);
    if (in[v] && f >= 0) lvl.smooth.push_back(f);
  }
  std::sort(lvl.smooth.begin(), lvl.smooth.end());
  levels_.push_back(std::move(lvl));
  finest_.reset();
}

Vector SolverState::vcycle(int level, const Vector& r) const {
  if (level == 0) return coarse_->solve(r);
  const Level& L = levels_[level];
  Vector e = Vector::Zero(r.size());
  for (int s = 0; s < mg_.sweeps; ++s) gauss_seidel(L.A, L.diag, L.smooth, r, e, true);
  Vector res = r - L.A * e;
  Vector rc = L.P.transpose() * res;
  e += L.P * vcycle(level - 1, rc);
  for (int s = 0; s < mg_.sweeps; ++s) gauss_seidel(L.A, L.diag, L.smooth, r, e, false);
  return e;
}

void SolverState::factor_finest() const {
  if (finest_) return;
  finest_ = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>(matrix());
  if (finest_->info() != Eigen::Success) throw SolverError("SolverState: factorization failed");
}

Vector SolverState::solve_direct(const Vector& rhs) const {
  if (kind_ == SolverKind::local_multigrid && levels_.size() == 1) return coarse_->solve(rhs);
  factor_finest();
  return finest_->solve(rhs);
}

Vector SolverState::step(const Vector& rhs, const Vector& iterate) const {
  const SparseMatrix& A = matrix();
  if (rhs.size() != A.rows() || iterate.size() != A.rows())
    throw ArgumentError("solver step: vector length does not match the finest level");
  switch (kind_) {
    case SolverKind::direct:
      return solve_direct(rhs);
    case SolverKind::damped_richardson:
      return iterate + omega_ * (rhs - A * iterate).cwiseQuotient(levels_.back().diag);
    case SolverKind::local_multigrid: {
      const int cg = mg_.cg_steps;
      if (cg == 0) return iterate + vcycle(n_levels() - 1, rhs - A * iterate);
      Vector x = iterate, r = rhs - A * iterate;
      Vector z = vcycle(n_levels() - 1, r), d = z;
      double rz = r.dot(z);
      for (int it = 0; it < cg && rz > 0.0; ++it) {
        Vector Ad = A * d;
        double alpha = rz / d.dot(Ad);
        x += alpha * d;
        r -= alpha * Ad;
        if (it + 1 == cg) break;
        z = vcycle(n_levels() - 1, r);
        double rz_new = r.dot(z);
        d = z + (rz_new / rz) * d;
        rz = rz_new;
      }
      return x;
    }
  }
  return iterate;
}

double certify_contraction(const SolverState& state, int trials, std::uint64_t seed, int steps) {
  if (trials < 1) throw ArgumentError("certify_contraction: trials must be >= 1");
  if (state.kind() == SolverKind::direct) return 0.0;
  const SparseMatrix& A = state.matrix();
  const int n = static_cast<int>(A.rows());
  if (n == 0) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Vector b(n), x(n);
    for (int i = 0; i < n; ++i) b[i] = U(rng);
    for (int i = 0; i < n; ++i) x[i] = U(rng);
    Vector xs = state.solve_direct(b);
    double prev = energy_norm(A, xs - x);
    for (int s = 0; s < steps && prev > 1e-14 * (1.0 + energy_norm(A, xs)); ++s) {
      x = state.step(b, x);
      double cur = energy_norm(A, xs - x);
      worst = std::max(worst, cur / prev);
      prev = cur;
    }
  }
  if (worst >= 1.0)
    throw NonContractiveSolverError("certify_contraction: measured error ratio " +
                                    std::to_string(worst) + " >= 1");
  return std::min(1.05 * worst, 0.5 * (1.0 + worst));
}

Vector solve_direct(const SparseMatrix& A, const Vector& rhs) {
  if (A.rows() != A.cols() || A.rows() != rhs.size())
    throw ArgumentError("solve_direct: dimension mismatch");
  SparseMatrix T = A.transpose();
  Vector x;
  if ((A - T).norm() <= 1e-14 * A.norm()) {
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(A);
    if (ldlt.info() == Eigen::Success) {
      x = ldlt.solve(rhs);
      if (x.allFinite() && (A * x - rhs).norm() <= 1e-10 * std::max(1.0, rhs.norm())) return x;
    }
  }
  Eigen::SparseLU<SparseMatrix> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) throw SolverError("solve_direct: singular matrix");
  x = lu.solve(rhs);
  if (!x.allFinite()) throw SolverError("solve_direct: singular matrix");
  return x;
}

}  // namespace afem
