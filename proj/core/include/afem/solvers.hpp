#pragma once

#include "afem/fem.hpp"

#include <Eigen/SparseCholesky>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace afem {

enum class SolverKind { direct, local_multigrid, damped_richardson };

/// Accepts "direct", "local-mg" (or "local_multigrid"), "richardson".
SolverKind parse_solver_kind(const std::string& name);
std::string to_string(SolverKind kind);

/// Contractive iteration for the SPD system of a(.,.) on the free dofs.
///
/// Levels are appended as the adaptive loop refines. `local_multigrid`
/// keeps the whole hierarchy and smooths only near the vertices created on
/// each level; the other kinds only use the finest level.
struct MultigridOptions {
  /// Gauss-Seidel sweeps before and after the coarse correction.
  int sweeps = 1;
  /// Conjugate-gradient iterations per step with the V-cycle as
  /// preconditioner; 0 applies the bare V-cycle.
  int cg_steps = 2;
  /// Keep a level only where the free dofs grew by this factor over the
  /// level two below, replacing the finest level otherwise (<= 1: keep all).
  double growth = 0.0;
};

class SolverState {
 public:
  explicit SolverState(SolverKind kind, const MultigridOptions& mg = {});

  /// Appends a level. `A_ff` is the free-dof block of a(.,.). Multigrid
  /// levels must be NVB refinements of the previous level; the prolongation
  /// is assembled here.
  void add_level(const SpacePtr& space, SparseMatrix A_ff);
  /// Same with an explicit full prolongation from `coarse`, which must be the
  /// space of the current finest level.
  void add_level(const SpacePtr& space, SparseMatrix A_ff, const SpacePtr& coarse,
                 const SparseMatrix& P_full);

  SolverKind kind() const { return kind_; }
  int n_levels() const { return static_cast<int>(levels_.size()); }
  const SparseMatrix& matrix() const;
  /// Richardson damping 1 / (Gershgorin bound of D^{-1} A).
  double omega() const { return omega_; }
  /// Free dofs smoothed on level l (multigrid only).
  const std::vector<int>& smoothing_set(int level) const { return levels_.at(level).smooth; }

  /// One iteration on the finest level: returns Psi(iterate) for A x = rhs.
  Vector step(const Vector& rhs, const Vector& iterate) const;
  /// Exact solve with the finest matrix.
  Vector solve_direct(const Vector& rhs) const;

 private:
  struct Level {
    SpacePtr space;
    SparseMatrix A;
    SparseMatrix P;  // free-to-free prolongation from the previous level
    std::vector<int> smooth;
    Vector diag;
  };
  Vector vcycle(int level, const Vector& r) const;
  void factor_finest() const;

  SolverKind kind_;
  MultigridOptions mg_;
  std::vector<Level> levels_;
  double omega_ = 1.0;
  std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>> coarse_;
  mutable std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>> finest_;
};

/// Worst energy-error reduction per step over `trials` random systems
/// (several consecutive steps each, exact reference by direct solve), plus
/// a 5% margin: q = min(1.05 r, (1 + r) / 2). Direct kind gives 0.
/// Throws NonContractiveSolverError if any ratio reaches 1.
double certify_contraction(const SolverState& state, int trials, std::uint64_t seed = 1,
                           int steps = 5);

/// Sparse direct solve (LDLT for symmetric input, LU otherwise).
Vector solve_direct(const SparseMatrix& A, const Vector& rhs);

}  // namespace afem
