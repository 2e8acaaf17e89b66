#include "afem/driver.hpp"

#include "afem/errors.hpp"
#include "afem/marking.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace afem {

const char* const kCsvHeader =
    "ell,k,j,n_elem,n_dof,eta,increment,stop_outer,stop_inner,t_solve,t_estimate,t_mark,t_refine,"
    "cum_cost";

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double free_norm(const SparseMatrix& Aff, const Vector& d) {
  return std::sqrt(std::max(0.0, d.dot(Aff * d)));
}

// Everything assembled once per level.
struct LevelSystem {
  SpacePtr space;
  SparseMatrix A;    // a(.,.) over all dofs
  SparseMatrix Aff;  // free block
  SparseMatrix B;    // b(.,.) for linear problems
  Vector F;
  Vector lift;
};

LevelSystem setup_level(const MeshPtr& mesh, const ProblemDef& prob, int p, bool need_b) {
  LevelSystem L;
  L.space = std::make_shared<const Space>(mesh, p);
  L.A = assemble_a(*L.space, prob);
  L.Aff = free_block(*L.space, L.A);
  if (need_b && !prob.is_nonlinear()) L.B = assemble_b(*L.space, prob);
  L.F = assemble_load(*L.space, prob);
  L.lift = dirichlet_lift(*L.space, prob);
  return L;
}

void validate(const RunOptions& opt) {
  if (opt.p < 1) throw ArgumentError("polynomial degree must be >= 1");
  if (!(opt.theta > 0.0 && opt.theta <= 1.0)) throw ArgumentError("theta must lie in (0, 1]");
  if (!(opt.max_dofs > 0.0)) throw ArgumentError("max_dofs must be positive");
  if (!(opt.eta_rel_tol >= 0.0)) throw ArgumentError("eta_rel_tol must be nonnegative");
  if (opt.inner_cap < 1) throw ArgumentError("inner_cap must be >= 1");
}

// Bookkeeping shared by the loops.
class Recorder {
 public:
  explicit Recorder(History& h) : h_(h) {}
  Record& push(Record r) {
    cost_ += r.n_elem;
    r.cum_cost = cost_;
    h_.records.push_back(r);
    return h_.records.back();
  }

 private:
  History& h_;
  long long cost_ = 0;
};

bool finished(const RunOptions& opt, const History& h, int ell) {
  const Record& last = h.records.back();
  return last.n_dof >= opt.max_dofs || last.eta <= opt.eta_tol ||
         last.eta <= opt.eta_rel_tol * h.records.front().eta || last.eta == 0.0 ||
         ell + 1 >= opt.max_levels;
}

// Marks and refines; records timings on the level-final record.
MeshPtr mark_and_refine(const MeshPtr& mesh, const Indicators& ind, const RunOptions& opt,
                        Record& rec, std::vector<int>* marked_out) {
  auto t0 = Clock::now();
  MarkResult mr = doerfler_mark(ind, opt.theta);
  rec.t_mark = seconds_since(t0);
  t0 = Clock::now();
  MeshPtr next = refine(mesh, mr.marked);
  rec.t_refine = seconds_since(t0);
  if (marked_out) *marked_out = std::move(mr.marked);
  return next;
}

double zarantonello_bound_or_nan(const ProblemDef& prob, double delta) {
  auto mb = prob.monotonicity();
  if (!mb) return kNaN;
  if (!(delta > 0.0 && delta < 2.0 * mb->alpha / (mb->lipschitz * mb->lipschitz))) return kNaN;
  return zarantonello_contraction_bound(mb->alpha, mb->lipschitz, delta);
}

}  // namespace

int History::n_levels() const { return records.empty() ? 0 : records.back().ell + 1; }

std::vector<int> History::k_bar() const {
  std::vector<int> kb(n_levels(), 0);
  for (const auto& r : records) kb[r.ell] = std::max(kb[r.ell], std::max(r.k, 1));
  return kb;
}

std::vector<std::vector<int>> History::j_bar() const {
  std::vector<std::vector<int>> jb(n_levels());
  for (const auto& r : records) {
    if (r.k < 1 || r.j < 1) continue;
    auto& row = jb[r.ell];
    if (static_cast<int>(row.size()) < r.k) row.resize(r.k, 0);
    row[r.k - 1] = std::max(row[r.k - 1], r.j);
  }
  return jb;
}

std::vector<int> History::final_records() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(records.size()); ++i)
    if (records[i].level_final) out.push_back(i);
  return out;
}

History run_exact(const ProblemDef& prob, const MeshPtr& mesh0, const RunOptions& opt) {
  validate(opt);
  History h;
  h.algorithm = "exact";
  h.problem = prob.name;
  h.options = opt;
  Recorder rec(h);
  MeshPtr mesh = mesh0;
  for (int ell = 0;; ++ell) {
    auto t0 = Clock::now();
    auto space = std::make_shared<const Space>(mesh, opt.p);
    DiscreteFunction u = solve_galerkin_exact(space, prob);
    Record r;
    r.ell = ell;
    r.n_elem = mesh->n_elements();
    r.n_dof = space->n_dofs();
    r.t_solve = seconds_since(t0);
    t0 = Clock::now();
    Indicators ind = compute_indicators(u, prob, opt.estimator);
    r.t_estimate = seconds_since(t0);
    r.eta = std::sqrt(ind.total2);
    r.stop_outer = true;
    r.level_final = true;
    if (opt.verification && prob.exact) r.err_exact = energy_error(u, prob);
    Record& last = rec.push(r);
    bool done = finished(opt, h, ell);
    if (last.eta == 0.0) h.converged = true;
    std::vector<int> marked;
    MeshPtr next;
    if (!done) next = mark_and_refine(mesh, ind, opt, last, &marked);
    if (opt.keep_levels) h.levels.push_back({space, u.coeffs, u.coeffs, ind, marked});
    if (done) break;
    mesh = next;
  }
  return h;
}

History run_uniform(const ProblemDef& prob, const MeshPtr& mesh0, const RunOptions& opt) {
  validate(opt);
  History h;
  h.algorithm = "uniform";
  h.problem = prob.name;
  h.options = opt;
  Recorder rec(h);
  MeshPtr mesh = mesh0;
  for (int ell = 0;; ++ell) {
    auto t0 = Clock::now();
    auto space = std::make_shared<const Space>(mesh, opt.p);
    DiscreteFunction u = solve_galerkin_exact(space, prob);
    Record r;
    r.ell = ell;
    r.n_elem = mesh->n_elements();
    r.n_dof = space->n_dofs();
    r.t_solve = seconds_since(t0);
    t0 = Clock::now();
    Indicators ind = compute_indicators(u, prob, opt.estimator);
    r.t_estimate = seconds_since(t0);
    r.eta = std::sqrt(ind.total2);
    r.stop_outer = true;
    r.level_final = true;
    if (opt.verification && prob.exact) r.err_exact = energy_error(u, prob);
    Record& last = rec.push(r);
    if (opt.keep_levels) h.levels.push_back({space, u.coeffs, u.coeffs, ind, {}});
    if (finished(opt, h, ell)) break;
    t0 = Clock::now();
    mesh = uniform_refine(mesh);
    last.t_refine = seconds_since(t0);
  }
  return h;
}

namespace {

// Shared driver for Algorithms 2 and 3.
History run_iterative(const ProblemDef& prob, const MeshPtr& mesh0, const RunOptions& opt,
                      bool nested) {
  validate(opt);
  const bool direct = opt.solver == SolverKind::direct;
  if (!nested && !direct && !prob.is_symmetric_energy())
    throw ArgumentError("run_single: problem '" + prob.name +
                        "' is not symmetric; use the direct solver or run_nested");
  if (nested && !(opt.zarantonello.delta > 0.0))
    throw ArgumentError("run_nested: delta must be positive");
  History h;
  h.algorithm = nested ? "nested" : "single";
  h.problem = prob.name;
  h.options = opt;
  if (nested) h.q_sym_star = zarantonello_bound_or_nan(prob, opt.zarantonello.delta);
  Recorder rec(h);
  SolverState solver(opt.solver, opt.multigrid);
  MeshPtr mesh = mesh0;
  SpacePtr prev_space;
  Vector prev_u;  // final iterate of the previous level (full)
  const ZarantonelloConfig& cfg = opt.zarantonello;

  for (int ell = 0;; ++ell) {
    auto t_setup = Clock::now();
    LevelSystem L = setup_level(mesh, prob, opt.p, nested);
    const Space& S = *L.space;
    Vector u_f;
    if (ell == 0) {
      u_f = Vector::Zero(S.n_free());
      if (!direct || nested) solver.add_level(L.space, L.Aff);
    } else {
      SparseMatrix P = prolongation_matrix(*prev_space, S);
      u_f = free_part(S, P * prev_u);
      if (!direct || nested) solver.add_level(L.space, L.Aff);
    }
    // single loop with b = a: fixed right-hand side of the Galerkin system
    Vector rhs_single;
    if (!nested) rhs_single = free_part(S, L.F - L.A * L.lift);
    double setup_time = seconds_since(t_setup);

    if (!direct && opt.certify_trials > 0 && S.n_free() > 0) {
      auto tc = Clock::now();
      double q = certify_contraction(solver, opt.certify_trials, opt.seed + ell);
      h.t_certify += seconds_since(tc);
      h.q_alg_levels.push_back(q);
      h.q_alg = std::max(h.q_alg, q);
      if (opt.solver == SolverKind::local_multigrid && q > opt.q_alg_ceiling)
        throw SolverError("local multigrid contraction " + std::to_string(q) + " on level " +
                          std::to_string(ell) + " exceeds the ceiling " +
                          std::to_string(opt.q_alg_ceiling));
    }

    // exact discrete references (verification only)
    const bool verify = opt.verification && S.n_dofs() <= opt.verification_max_dofs;
    Vector ustar_f;
    if (verify || (direct && !nested)) {
      ustar_f = free_part(S, solve_galerkin_exact(L.space, prob).coeffs);
    }

    auto full = [&](const Vector& vf) { return with_free(S, L.lift, vf); };
    auto estimate = [&](const Vector& vf, Record& r, Indicators& ind) {
      auto te = Clock::now();
      ind = compute_indicators(DiscreteFunction(L.space, full(vf)), prob, opt.estimator);
      r.t_estimate = seconds_since(te);
      r.eta = std::sqrt(ind.total2);
    };

    Indicators ind;
    Record* last = nullptr;
    bool first_record = true;
    if (!nested) {
      for (int k = 1;; ++k) {
        Record r;
        r.ell = ell;
        r.k = k;
        r.n_elem = mesh->n_elements();
        r.n_dof = S.n_dofs();
        auto ts = Clock::now();
        Vector u_new = direct ? ustar_f : solver.step(rhs_single, u_f);
        r.t_solve = seconds_since(ts) + (first_record ? setup_time : 0.0);
        first_record = false;
        estimate(u_new, r, ind);
        r.increment = free_norm(L.Aff, u_new - u_f);
        r.stop_outer = outer_stop(r.increment, r.eta, opt.lambda);
        if (verify) r.err_galerkin = free_norm(L.Aff, ustar_f - u_new);
        u_f = std::move(u_new);
        last = &rec.push(r);
        if (r.stop_outer) break;
        if (k >= opt.inner_cap)
          throw SolverError("run_single: no termination after " + std::to_string(k) +
                            " solver steps on level " + std::to_string(ell));
      }
    } else {
      for (int k = 1;; ++k) {
        auto tr = Clock::now();
        Vector rhs = zarantonello_rhs(S, prob, cfg.delta, full(u_f), L.A, L.F,
                                      prob.is_nonlinear() ? nullptr : &L.B);
        double rhs_time = seconds_since(tr);
        const Vector u_outer_prev = u_f;
        Vector uks_f;
        if (verify) uks_f = solver.solve_direct(rhs);
        Vector u_cur = u_f;
        bool outer_done = false;
        for (int j = 1;; ++j) {
          Record r;
          r.ell = ell;
          r.k = k;
          r.j = j;
          r.n_elem = mesh->n_elements();
          r.n_dof = S.n_dofs();
          auto ts = Clock::now();
          Vector u_new = solver.step(rhs, u_cur);
          r.t_solve = seconds_since(ts) + (j == 1 ? rhs_time : 0.0) +
                      (first_record ? setup_time : 0.0);
          first_record = false;
          estimate(u_new, r, ind);
          r.increment = free_norm(L.Aff, u_new - u_cur);
          r.outer_increment = free_norm(L.Aff, u_new - u_outer_prev);
          r.stop_inner = inner_stop(r.increment, r.eta, r.outer_increment, cfg);
          r.stop_outer = r.stop_inner && outer_stop(r.outer_increment, r.eta, cfg.lambda_sym);
          if (verify) {
            r.err_galerkin = free_norm(L.Aff, ustar_f - u_new);
            r.err_sym = free_norm(L.Aff, uks_f - u_new);
          }
          u_cur = std::move(u_new);
          last = &rec.push(r);
          if (r.stop_inner) {
            outer_done = r.stop_outer;
            break;
          }
          if (j >= opt.inner_cap)
            throw SolverError("run_nested: inner loop did not terminate after " +
                              std::to_string(j) + " steps on level " + std::to_string(ell));
        }
        u_f = std::move(u_cur);
        if (outer_done) break;
        if (k >= opt.inner_cap)
          throw SolverError("run_nested: outer loop did not terminate after " +
                            std::to_string(k) + " steps on level " + std::to_string(ell));
      }
    }

    last->level_final = true;
    Vector u_full = full(u_f);
    if (verify && prob.exact) last->err_exact = energy_error(DiscreteFunction(L.space, u_full), prob);
    bool done = finished(opt, h, ell);
    if (last->eta == 0.0) h.converged = true;
    std::vector<int> marked;
    MeshPtr next;
    if (!done) next = mark_and_refine(mesh, ind, opt, *last, &marked);
    if (opt.keep_levels) {
      Vector ug = verify ? full(ustar_f) : Vector();
      h.levels.push_back({L.space, u_full, ug, ind, marked});
    }
    if (done) break;
    prev_space = L.space;
    prev_u = std::move(u_full);
    mesh = next;
  }
  return h;
}

}  // namespace

History run_single(const ProblemDef& prob, const MeshPtr& mesh0, const RunOptions& opt) {
  return run_iterative(prob, mesh0, opt, false);
}

History run_nested(const ProblemDef& prob, const MeshPtr& mesh0, const RunOptions& opt) {
  return run_iterative(prob, mesh0, opt, true);
}

void write_csv(std::ostream& os, const History& h) {
  os << kCsvHeader << '\n';
  char buf[512];
  auto num = [](double v) -> std::string {
    if (std::isnan(v)) return "";
    char b[32];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
  };
  const bool exact = h.algorithm == "exact" || h.algorithm == "uniform";
  const bool nested = h.algorithm == "nested";
  for (const auto& r : h.records) {
    std::string k = r.k >= 0 ? std::to_string(r.k) : "";
    std::string j = r.j >= 0 ? std::to_string(r.j) : "";
    std::string inner = nested ? (r.stop_inner ? "1" : "0") : "";
    std::snprintf(buf, sizeof buf, "%d,%s,%s,%d,%d,%s,%s,%d,%s,%s,%s,%s,%s,%lld", r.ell,
                  k.c_str(), j.c_str(), r.n_elem, r.n_dof, num(r.eta).c_str(),
                  exact ? "" : num(r.increment).c_str(), r.stop_outer ? 1 : 0, inner.c_str(),
                  num(r.t_solve).c_str(), num(r.t_estimate).c_str(), num(r.t_mark).c_str(),
                  num(r.t_refine).c_str(), r.cum_cost);
    os << buf << '\n';
  }
}

CostTable weighted_cost_table(const std::vector<SweepEntry>& entries, double eta_stop_factor) {
  if (!(eta_stop_factor > 0.0)) throw ArgumentError("weighted_cost_table: factor must be positive");
  CostTable table;
  auto index_of = [](std::vector<double>& axis, double v) {
    for (std::size_t i = 0; i < axis.size(); ++i)
      if (axis[i] == v) return static_cast<int>(i);
    axis.push_back(v);
    return static_cast<int>(axis.size() - 1);
  };
  for (const auto& e : entries) {
    index_of(table.rows, e.row);
    index_of(table.cols, e.col);
  }
  std::sort(table.rows.begin(), table.rows.end());
  std::sort(table.cols.begin(), table.cols.end());
  table.cells.assign(table.rows.size(), std::vector<CostCell>(table.cols.size()));
  for (const auto& e : entries) {
    if (!e.history) throw ArgumentError("weighted_cost_table: null history");
    int ri = index_of(table.rows, e.row), ci = index_of(table.cols, e.col);
    CostCell& cell = table.cells[ri][ci];
    const auto& recs = e.history->records;
    if (recs.empty()) continue;
    const double goal = eta_stop_factor * recs.front().eta;
    double time = 0.0;
    for (int i = 0; i < static_cast<int>(recs.size()); ++i) {
      const auto& r = recs[i];
      time += r.t_solve + r.t_estimate + r.t_mark + r.t_refine;
      if (r.level_final && r.eta <= goal) {
        cell.complete = true;
        cell.record = i;
        cell.time_weighted = r.eta * time;
        cell.dof_weighted = r.eta * static_cast<double>(r.cum_cost);
        break;
      }
    }
  }
  auto flag = [&](auto value, auto row_flag, auto col_flag) {
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      int best = -1;
      for (std::size_t j = 0; j < table.cols.size(); ++j) {
        const auto& c = table.cells[i][j];
        if (c.complete && (best < 0 || value(c) < value(table.cells[i][best]))) best = static_cast<int>(j);
      }
      if (best >= 0) table.cells[i][best].*row_flag = true;
    }
    for (std::size_t j = 0; j < table.cols.size(); ++j) {
      int best = -1;
      for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& c = table.cells[i][j];
        if (c.complete && (best < 0 || value(c) < value(table.cells[best][j]))) best = static_cast<int>(i);
      }
      if (best >= 0) table.cells[best][j].*col_flag = true;
    }
  };
  flag([](const CostCell& c) { return c.time_weighted; }, &CostCell::time_row_min,
       &CostCell::time_col_min);
  flag([](const CostCell& c) { return c.dof_weighted; }, &CostCell::dof_row_min,
       &CostCell::dof_col_min);
  return table;
}

void write_cost_table(std::ostream& os, const CostTable& table, bool header,
                      const std::string& block_label, double block) {
  const bool blocked = !block_label.empty();
  if (header) {
    if (blocked) os << block_label << ',';
    os << table.row_label << ',' << table.col_label
       << ",status,time_weighted,dof_weighted,time_min,dof_min\n";
  }
  auto mark = [](bool row, bool col) -> const char* {
    if (row && col) return "row+col";
    if (row) return "row";
    if (col) return "col";
    return "";
  };
  char buf[256];
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (std::size_t j = 0; j < table.cols.size(); ++j) {
      const auto& c = table.cells[i][j];
      if (blocked) {
        std::snprintf(buf, sizeof buf, "%g,", block);
        os << buf;
      }
      if (c.complete) {
        std::snprintf(buf, sizeof buf, "%g,%g,complete,%.6g,%.6g,%s,%s", table.rows[i],
                      table.cols[j], c.time_weighted, c.dof_weighted,
                      mark(c.time_row_min, c.time_col_min), mark(c.dof_row_min, c.dof_col_min));
      } else {
        std::snprintf(buf, sizeof buf, "%g,%g,incomplete,,,,", table.rows[i], table.cols[j]);
      }
      os << buf << '\n';
    }
  }
}

}  // namespace afem
