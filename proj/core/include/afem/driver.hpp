#pragma once

#include "afem/estimator.hpp"
#include "afem/fem.hpp"
#include "afem/iteration.hpp"
#include "afem/solvers.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace afem {

struct RunOptions {
  int p = 1;
  double theta = 0.5;
  /// Algorithm 2 solver-stopping parameter.
  double lambda = 0.01;
  /// Algorithm 3 parameters.
  ZarantonelloConfig zarantonello;
  SolverKind solver = SolverKind::local_multigrid;
  MultigridOptions multigrid;

  /// Stop after the first level with at least this many dofs.
  double max_dofs = 5e4;
  /// Stop once the level estimator drops to this value.
  double eta_tol = 0.0;
  /// Stop once the level estimator drops to this fraction of the first one.
  double eta_rel_tol = 0.0;
  int max_levels = 1000;
  /// Hard cap on solver steps per loop; exceeding it throws SolverError.
  int inner_cap = 500;

  /// Random trials per level for certify_contraction (0 disables).
  int certify_trials = 2;
  /// Abort when a certified multigrid contraction exceeds this value.
  double q_alg_ceiling = 0.9;

  /// Compute exact discrete references on levels up to this many dofs.
  bool verification = false;
  double verification_max_dofs = 2e4;
  /// Keep meshes and final iterates of every level.
  bool keep_levels = false;

  std::uint64_t seed = 1;
  EstimatorOptions estimator;
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One entry per computed iterate, in the order of the total step counter.
struct Record {
  int ell = 0;
  int k = -1;  // -1: not applicable (exact solver)
  int j = -1;  // -1: not applicable (exact or single loop)
  int n_elem = 0;
  int n_dof = 0;
  double eta = 0.0;
  /// Solver increment |||u^k - u^{k-1}||| (single) or |||u^{k,j} - u^{k,j-1}||| (nested).
  double increment = kNaN;
  /// |||u^{k,j} - u^{k-1,jbar}||| (nested only).
  double outer_increment = kNaN;
  bool stop_outer = false;
  bool stop_inner = false;
  double t_solve = 0.0;
  double t_estimate = 0.0;
  double t_mark = 0.0;
  double t_refine = 0.0;
  long long cum_cost = 0;
  /// Verification mode: |||u*_l - u|||, and |||u^{k,*} - u^{k,j}||| for nested runs.
  double err_galerkin = kNaN;
  double err_sym = kNaN;
  /// |||u* - u||| when the exact solution is known and verification is on.
  double err_exact = kNaN;
  /// Last record of its level (the iterate that is marked and prolongated).
  bool level_final = false;
};

struct LevelData {
  SpacePtr space;
  Vector u;                 // final iterate (full)
  Vector u_galerkin;        // exact discrete solution, verification only
  Indicators indicators;    // of the final iterate
  std::vector<int> marked;  // empty on the last level
};

struct History {
  std::string algorithm;  // "exact", "single", "nested"
  std::string problem;
  RunOptions options;
  /// Largest certified contraction over all levels (0 for direct).
  double q_alg = 0.0;
  std::vector<double> q_alg_levels;
  /// Zarantonello contraction bound from (alpha, L, delta), NaN if unknown.
  double q_sym_star = kNaN;
  bool converged = false;  // estimator reached zero
  double t_certify = 0.0;
  std::vector<Record> records;
  std::vector<LevelData> levels;  // only with keep_levels

  int n_levels() const;
  /// kbar[l]: number of outer steps on level l.
  std::vector<int> k_bar() const;
  /// jbar[l][k-1]: number of inner steps of outer step k on level l.
  std::vector<std::vector<int>> j_bar() const;
  /// Indices of the level-final records.
  std::vector<int> final_records() const;
};

/// Algorithm 1: exact Galerkin solve, estimate, mark, refine.
History run_exact(const ProblemDef& prob, const MeshPtr& mesh0, const RunOptions& opt);
/// Algorithm 2: one contractive solver step per k until the lambda criterion holds.
History run_single(const ProblemDef& prob, const MeshPtr& mesh0, const RunOptions& opt);
/// Algorithm 3: Zarantonello outer loop with inner contractive SPD solver.
History run_nested(const ProblemDef& prob, const MeshPtr& mesh0, const RunOptions& opt);

/// Uniform refinement baseline with exact solves: one record per level.
History run_uniform(const ProblemDef& prob, const MeshPtr& mesh0, const RunOptions& opt);

/// `ell,k,j,n_elem,n_dof,eta,increment,stop_outer,stop_inner,t_solve,t_estimate,t_mark,t_refine,cum_cost`
void write_csv(std::ostream& os, const History& h);
extern const char* const kCsvHeader;

struct CostCell {
  bool complete = false;
  int record = -1;
  double time_weighted = kNaN;  // eta * cumulative wall time
  double dof_weighted = kNaN;   // eta * cumulative cost
  bool time_row_min = false, time_col_min = false;
  bool dof_row_min = false, dof_col_min = false;
};

struct CostTable {
  std::string row_label = "theta";
  std::string col_label = "lambda";
  std::vector<double> rows;
  std::vector<double> cols;
  std::vector<std::vector<CostCell>> cells;
};

struct SweepEntry {
  double row = 0.0;
  double col = 0.0;
  const History* history = nullptr;
};

/// Weighted-cost comparison at the first level-final record with
/// eta <= factor * eta_0 (eta_0: estimator of the first record).
CostTable weighted_cost_table(const std::vector<SweepEntry>& entries, double eta_stop_factor);
/// CSV rows `[block,]row,col,status,time_weighted,dof_weighted,time_min,dof_min`.
/// A non-empty `block_label` adds a leading column with value `block`.
void write_cost_table(std::ostream& os, const CostTable& table, bool header = true,
                      const std::string& block_label = "", double block = 0.0);

}  // namespace afem
