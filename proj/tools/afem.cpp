// afem: adaptive FEM experiments from the command line.
#include "afem/analysis.hpp"
#include "afem/driver.hpp"
#include "afem/errors.hpp"
#include "afem/iteration.hpp"
#include "afem/problems.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

namespace {

using namespace afem;

struct RunArgs {
  std::string problem;
  std::string algo;
  int p = 1;
  std::optional<double> theta;
  double lambda = 0.01;
  std::optional<std::string> solver;
  double max_dofs = 5e4;
  double eta_tol = 0.0;
  std::optional<double> delta;
  double lambda_sym = 0.7;
  double lambda_alg = 0.7;
  std::uint64_t seed = 1;
  bool verify = false;
  MultigridOptions mg;
  std::string axioms;
  std::string out;
};

void add_common(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("--problem", a.problem, "kellogg | lshape-convection | zshape-nonlinear")
      ->required()
      ->check(CLI::IsMember(benchmark_names()));
  cmd->add_option("--p", a.p, "polynomial degree")->check(CLI::Range(1, 4));
  cmd->add_option("--solver", a.solver, "local-mg | richardson | direct")
      ->check(CLI::IsMember({"local-mg", "richardson", "direct"}));
  cmd->add_option("--max-dofs", a.max_dofs, "stop after the first level with this many dofs");
  cmd->add_option("--delta", a.delta, "Zarantonello damping (default 0.5, or 1/L if known)");
  cmd->add_option("--seed", a.seed, "seed for solver certification");
  cmd->add_option("--mg-cg-steps", a.mg.cg_steps,
                  "CG iterations per multigrid step (0: plain V-cycle)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--mg-sweeps", a.mg.sweeps, "Gauss-Seidel sweeps per V-cycle half")
      ->check(CLI::PositiveNumber);
}

RunOptions make_options(const RunArgs& a, const Benchmark& bm) {
  RunOptions o;
  o.p = a.p;
  o.theta = a.theta.value_or(bm.problem.name == "kellogg" ? 0.5 : 0.3);
  o.lambda = a.lambda;
  o.solver = parse_solver_kind(a.solver.value_or(a.p == 1 ? "local-mg" : "direct"));
  o.max_dofs = a.max_dofs;
  o.eta_tol = a.eta_tol;
  o.seed = a.seed;
  o.verification = a.verify;
  o.multigrid = a.mg;
  o.keep_levels = !a.axioms.empty();
  o.zarantonello.lambda_sym = a.lambda_sym;
  o.zarantonello.lambda_alg = a.lambda_alg;
  double delta = 0.5;
  if (bm.problem.is_nonlinear()) delta = 1.0 / bm.problem.nonlinearity->lipschitz;
  o.zarantonello.delta = a.delta.value_or(delta);
  return o;
}

std::string default_algo(const ProblemDef& prob) {
  return prob.is_symmetric_energy() ? "single" : "nested";
}

History execute(const std::string& algo, const Benchmark& bm, const RunOptions& o) {
  if (algo == "exact") return run_exact(bm.problem, bm.mesh, o);
  if (algo == "single") return run_single(bm.problem, bm.mesh, o);
  if (algo == "nested") return run_nested(bm.problem, bm.mesh, o);
  if (algo == "uniform") return run_uniform(bm.problem, bm.mesh, o);
  throw ArgumentError("unknown algorithm '" + algo + "'");
}

void print_summary(std::ostream& os, const History& h) {
  std::vector<double> dofs, cost, eta;
  for (int i : h.final_records()) {
    const Record& r = h.records[i];
    dofs.push_back(r.n_dof);
    cost.push_back(static_cast<double>(r.cum_cost));
    eta.push_back(r.eta);
  }
  const Record& last = h.records.back();
  char buf[256];
  std::snprintf(buf, sizeof buf, "problem=%s algo=%s levels=%d records=%zu dofs=%d eta=%.6e\n",
                h.problem.c_str(), h.algorithm.c_str(), h.n_levels(), h.records.size(),
                last.n_dof, last.eta);
  os << buf;
  if (dofs.size() >= 3) {
    std::snprintf(buf, sizeof buf, "rate_dofs=%.4f rate_cost=%.4f\n", fit_rate_loglog(dofs, eta),
                  fit_rate_loglog(cost, eta));
    os << buf;
  }
  if (h.q_alg > 0.0) {
    std::snprintf(buf, sizeof buf, "q_alg=%.4f\n", h.q_alg);
    os << buf;
  }
  if (std::isfinite(h.q_sym_star)) {
    std::snprintf(buf, sizeof buf, "q_sym_star=%.4f\n", h.q_sym_star);
    os << buf;
  }
}

int cmd_run(const RunArgs& a) {
  Benchmark bm = make_benchmark(a.problem);
  RunOptions o = make_options(a, bm);
  const std::string algo = a.algo.empty() ? default_algo(bm.problem) : a.algo;
  History h = execute(algo, bm, o);
  if (a.out.empty() || a.out == "-") {
    write_csv(std::cout, h);
  } else {
    std::ofstream f(a.out);
    if (!f) throw ArgumentError("cannot open '" + a.out + "' for writing");
    write_csv(f, h);
  }
  print_summary(std::cerr, h);
  if (!a.axioms.empty()) {
    AxiomReport r = verify_axioms(h, bm.problem);
    std::ofstream f(a.axioms);
    if (!f) throw ArgumentError("cannot open '" + a.axioms + "' for writing");
    char buf[1024];
    std::snprintf(buf, sizeof buf,
                  "levels=%d\nstability=%.6g\nreduction_ratio2=%.6g\nreduction_ok=%d\n"
                  "reliability=%.6g\nquasi_monotonicity=%.6g\npythagoras_residual=%.6g\n"
                  "orthogonality_ratio=%.6g\northogonality_ok=%d\n",
                  r.n_levels, r.stability, r.reduction_ratio2, int(r.reduction_ok), r.reliability,
                  r.quasi_monotonicity, r.pythagoras_residual, r.orthogonality_ratio,
                  int(r.orthogonality_ok));
    f << buf;
    std::cerr << "axiom_report=" << a.axioms << '\n';
  }
  return 0;
}

struct SweepArgs {
  RunArgs run;
  std::vector<double> thetas{0.3, 0.5, 0.7};
  std::vector<double> lambdas{0.1, 0.5, 0.9};
  std::vector<double> lambda_syms{0.1, 0.5, 0.9};
  std::optional<double> eta_factor;
  int jobs = 1;
};

int job_limit(int requested) {
  int jobs = std::max(1, requested);
  if (const char* env = std::getenv("AFEM_LAB_THREADS")) {
    int cap = std::atoi(env);
    if (cap > 0) jobs = std::min(jobs, cap);
  }
  return jobs;
}

int cmd_sweep(const SweepArgs& s) {
  Benchmark bm = make_benchmark(s.run.problem);
  const std::string algo = s.run.algo.empty() ? default_algo(bm.problem) : s.run.algo;
  if (algo != "single" && algo != "nested")
    throw ArgumentError("sweep supports --algo single or nested");
  const bool nested = algo == "nested";

  struct Job {
    double theta, x, y;  // single: x = lambda; nested: x = lambda_sym, y = lambda_alg
    History h;
    std::string error;
  };
  std::vector<Job> jobs;
  for (double t : s.thetas) {
    if (nested) {
      for (double ls : s.lambda_syms)
        for (double la : s.lambdas) jobs.push_back({t, ls, la, {}, {}});
    } else {
      for (double l : s.lambdas) jobs.push_back({t, l, 0.0, {}, {}});
    }
  }
  std::atomic<std::size_t> next{0};
  const double factor = s.eta_factor.value_or(bm.problem.name == "kellogg" ? 1e-2 : 5e-2);
  auto worker = [&] {
    for (std::size_t i; (i = next++) < jobs.size();) {
      Job& j = jobs[i];
      RunArgs a = s.run;
      a.theta = j.theta;
      if (nested) {
        a.lambda_sym = j.x;
        a.lambda_alg = j.y;
      } else {
        a.lambda = j.x;
      }
      try {
        RunOptions o = make_options(a, bm);
        o.eta_rel_tol = factor;
        j.h = execute(algo, bm, o);
      } catch (const std::exception& e) {
        j.error = e.what();
      }
    }
  };
  const int n_threads = std::min<int>(job_limit(s.jobs), static_cast<int>(jobs.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (const Job& j : jobs)
    if (!j.error.empty()) std::cerr << "theta=" << j.theta << " run failed: " << j.error << '\n';

  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!s.run.out.empty() && s.run.out != "-") {
    file.open(s.run.out);
    if (!file) throw ArgumentError("cannot open '" + s.run.out + "' for writing");
    os = &file;
  }
  if (!nested) {
    std::vector<SweepEntry> entries;
    for (const Job& j : jobs)
      entries.push_back({j.theta, j.x, j.error.empty() ? &j.h : nullptr});
    entries.erase(std::remove_if(entries.begin(), entries.end(),
                                 [](const SweepEntry& e) { return !e.history; }),
                  entries.end());
    CostTable table = weighted_cost_table(entries, factor);
    write_cost_table(*os, table);
  } else {
    bool header = true;
    for (double t : s.thetas) {
      std::vector<SweepEntry> entries;
      for (const Job& j : jobs)
        if (j.theta == t && j.error.empty()) entries.push_back({j.x, j.y, &j.h});
      CostTable table = weighted_cost_table(entries, factor);
      table.row_label = "lambda_sym";
      table.col_label = "lambda_alg";
      write_cost_table(*os, table, header, "theta", t);
      header = false;
    }
  }
  return 0;
}

struct VerifyArgs {
  std::uint64_t seed = 1;
  double max_dofs = 3000;
  int sequences = 100;
  int zarantonello_starts = 100;
  bool mutate_estimator = false;
};

int cmd_verify(const VerifyArgs& v) {
  bool all_ok = true;
  char buf[512];
  auto line = [&](const char* name, bool ok, const std::string& detail) {
    all_ok = all_ok && ok;
    std::snprintf(buf, sizeof buf, "%-28s %s  %s\n", name, ok ? "PASS" : "FAIL", detail.c_str());
    std::cout << buf;
  };
  auto fmt = [&](const char* f, auto... xs) {
    std::snprintf(buf, sizeof buf, f, xs...);
    return std::string(buf);
  };

  // axioms on a small Kellogg run
  {
    Benchmark bm = kellogg();
    RunOptions o;
    o.max_dofs = v.max_dofs;
    o.keep_levels = true;
    o.seed = v.seed;
    if (v.mutate_estimator) o.estimator.jump_weight_exponent = 0.0;
    History h = run_exact(bm.problem, bm.mesh, o);
    AxiomOptions ao;
    ao.seed = v.seed;
    AxiomReport r = verify_axioms(h, bm.problem, ao);
    line("A2 reduction", r.reduction_ok, fmt("max ratio^2 %.4f (bound %.4f)", r.reduction_ratio2,
                                             ao.q_red * ao.q_red));
    line("Pythagoras", r.pythagoras_residual <= 1e-9, fmt("residual %.3e", r.pythagoras_residual));
    line("A4 quasi-orthogonality", r.orthogonality_ok,
         fmt("ratio %.4f (C = %.2f)", r.orthogonality_ratio, ao.orthogonality_constant));
    line("A1 stability (recorded)", true, fmt("%.4f", r.stability));
    line("A3 reliability (recorded)", true, fmt("%.4f", r.reliability));
    line("QM (recorded)", true, fmt("%.4f", r.quasi_monotonicity));
  }

  // sequence lemmas
  {
    std::mt19937_64 rng(v.seed);
    int bad_crit = 0, bad_tail = 0;
    for (int i = 0; i < v.sequences; ++i) {
      CriterionInstance c = random_criterion_instance(rng());
      auto k = rlinear_constants_from_criterion(c.a, c.b, c.q, c.C1, c.C2, c.delta);
      if (!(k.fit.max_violation <= 1.0 + 1e-9 && k.fit.q_lin < 1.0)) ++bad_crit;
      if (!tailsum_rlinear_equivalence(c.a).verified) ++bad_tail;
    }
    line("tail-summability criterion", bad_crit == 0, fmt("%d/%d violations", bad_crit, v.sequences));
    line("tail-sum equivalence", bad_tail == 0, fmt("%d/%d violations", bad_tail, v.sequences));
  }

  // Zarantonello contraction on the nonlinear problem
  {
    Benchmark bm = zshape_nonlinear();
    MeshPtr m = bm.mesh;
    for (int i = 0; i < 4; ++i) m = uniform_refine(m);
    auto S = std::make_shared<const Space>(m, 1);
    const double L = bm.problem.nonlinearity->lipschitz, delta = 1.0 / L;
    const double q = zarantonello_contraction_bound(bm.problem.nonlinearity->alpha, L, delta);
    DiscreteFunction us = solve_galerkin_exact(S, bm.problem);
    SparseMatrix A = assemble_a(*S, bm.problem);
    std::mt19937_64 rng(v.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < v.zarantonello_starts; ++t) {
      Vector u = Vector::Zero(S->n_dofs());
      for (int d : S->free_dofs()) u[d] = U(rng);
      Vector phi = zarantonello_step(*S, bm.problem, delta, u);
      worst = std::max(worst, energy_norm(A, us.coeffs - phi) / energy_norm(A, us.coeffs - u));
    }
    line("Zarantonello contraction", worst <= q * (1.0 + 1e-6),
         fmt("max ratio %.4f (q* = %.4f)", worst, q));
  }
  return all_ok ? 0 : 1;
}

int cmd_mesh(const std::string& problem, int refinements, bool uniform, const std::string& out) {
  Benchmark bm = make_benchmark(problem);
  MeshPtr m = bm.mesh;
  for (int i = 0; i < refinements; ++i) m = uniform ? uniform_refine(m) : refine(m, std::vector<int>{0});
  std::string reason;
  if (!check_conforming(*m, &reason)) throw std::runtime_error("mesh not conforming: " + reason);
  if (out.empty() || out == "-") {
    m->write(std::cout);
  } else {
    std::ofstream f(out);
    if (!f) throw ArgumentError("cannot open '" + out + "' for writing");
    m->write(f);
  }
  return 0;
}

// Replaces `--config FILE` by the `--key value` pairs of FILE whose keys are
// not given on the command line. Lines: `key = value`, `#` comments,
// booleans as true/false.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  auto it = std::find(args.begin(), args.end(), "--config");
  if (it == args.end()) return args;
  if (it + 1 == args.end()) throw CLI::ArgumentMismatch("--config needs a file name");
  const std::string path = *(it + 1);
  args.erase(it, it + 2);
  std::ifstream f(path);
  if (!f) throw CLI::FileError::Missing(path);
  std::string line;
  while (std::getline(f, line)) {
    line = line.substr(0, line.find('#'));
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string x) {
      const char* ws = " \t\r";
      x.erase(0, x.find_first_not_of(ws));
      x.erase(x.find_last_not_of(ws) + 1);
      return x;
    };
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    const std::string flag = "--" + key;
    bool given = false;
    for (const auto& a : args) given = given || a == flag || a.rfind(flag + "=", 0) == 0;
    if (given) continue;
    if (value == "true") {
      args.push_back(flag);
    } else if (value != "false") {
      args.push_back(flag);
      std::istringstream words(value);
      for (std::string w; words >> w;) args.push_back(w);
    }
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive FEM with contractive and nested iterative solvers", "afem"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "run one adaptive loop and write its history as CSV");
  std::string config_path;  // consumed by expand_config before parsing
  run->add_option("--config", config_path, "key=value file; command-line flags take precedence");
  add_common(run, run_args);
  run->add_option("--algo", run_args.algo, "exact | single | nested | uniform")
      ->check(CLI::IsMember({"exact", "single", "nested", "uniform"}));
  run->add_option("--theta", run_args.theta, "Doerfler parameter");
  run->add_option("--lambda", run_args.lambda, "solver stopping parameter (single loop)");
  run->add_option("--lambda-sym", run_args.lambda_sym, "outer stopping parameter (nested)");
  run->add_option("--lambda-alg", run_args.lambda_alg, "inner stopping parameter (nested)");
  run->add_option("--eta-tol", run_args.eta_tol, "stop once the estimator drops below this");
  run->add_flag("--verify", run_args.verify, "record exact discrete errors on small levels");
  run->add_option("--axioms", run_args.axioms, "write an axiom report (key=value) to this path");
  run->add_option("--out", run_args.out, "CSV path (default stdout)");

  SweepArgs sweep_args;
  sweep_args.run.max_dofs = 1e6;  // runs stop at the estimator threshold
  auto* sweep = app.add_subcommand("sweep", "weighted-cost table over a parameter grid");
  sweep->add_option("--config", config_path, "key=value file; command-line flags take precedence");
  add_common(sweep, sweep_args.run);
  sweep->add_option("--algo", sweep_args.run.algo, "single | nested")
      ->check(CLI::IsMember({"single", "nested"}));
  sweep->add_option("--thetas", sweep_args.thetas, "marking parameters")->delimiter(',');
  sweep->add_option("--lambdas", sweep_args.lambdas, "lambda (single) or lambda_alg (nested)")
      ->delimiter(',');
  sweep->add_option("--lambda-syms", sweep_args.lambda_syms, "lambda_sym values (nested)")
      ->delimiter(',');
  sweep->add_option("--eta-factor", sweep_args.eta_factor,
                    "stop at eta <= factor * eta_0 (default 1e-2 kellogg, 5e-2 otherwise)");
  sweep->add_option("--jobs", sweep_args.jobs, "parallel runs (capped by AFEM_LAB_THREADS)");
  sweep->add_option("--out", sweep_args.run.out, "CSV path (default stdout)");

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "axiom, sequence-lemma and contraction checks");
  verify->add_option("--seed", verify_args.seed);
  verify->add_option("--max-dofs", verify_args.max_dofs, "size of the Kellogg axiom run");
  verify->add_option("--sequences", verify_args.sequences, "random sequence-lemma instances");
  verify->add_flag("--mutate-estimator", verify_args.mutate_estimator,
                   "drop the |T|^{1/2} jump weight (the A2 check must fail)");

  std::string mesh_problem, mesh_out;
  int mesh_refinements = 0;
  bool mesh_uniform = false;
  auto* mesh = app.add_subcommand("mesh", "dump an initial or refined benchmark mesh");
  mesh->add_option("--problem", mesh_problem)->required()->check(CLI::IsMember(benchmark_names()));
  mesh->add_option("--refine", mesh_refinements, "number of refinement steps");
  mesh->add_flag("--uniform", mesh_uniform, "uniform refinement instead of refining element 0");
  mesh->add_option("--out", mesh_out);

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*sweep) return cmd_sweep(sweep_args);
    if (*verify) return cmd_verify(verify_args);
    if (*mesh) return cmd_mesh(mesh_problem, mesh_refinements, mesh_uniform, mesh_out);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
