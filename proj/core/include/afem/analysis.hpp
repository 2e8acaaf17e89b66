#pragma once

#include "afem/driver.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace afem {

/// a_{m+n} <= C_lin q_lin^n a_m for all recorded pairs.
struct RLinearFit {
  double C_lin = 1.0;
  double q_lin = 0.0;
  /// max over pairs of a_{m+n} / (C_lin q_lin^n a_m); 0 if all ratios vanish.
  double max_violation = 0.0;
};

/// Worst ratio a_{m+n} / (C q^n a_m) over all m, n >= 0. O(n) in log space.
double rlinear_max_violation(std::span<const double> a, double C, double q);

/// Smallest C with a_{m+n} <= C q^n a_m for the given q (infinite if some
/// a_m = 0 is followed by a positive entry).
double rlinear_constant(std::span<const double> a, double q);

/// Fits (C_lin, q_lin) by minimizing C/(1-q) over a q-grid in (0, 1).
RLinearFit fit_rlinear(std::span<const double> a);

/// Intermediate quantities of the constructive tail-summability pipeline.
struct CriterionConstants {
  double epsilon = 0.0;
  double kappa = 0.0;
  double C3 = 0.0;
  long long n0 = 0;
  double q0 = 0.0;
  /// Constants of the bound for a^2: a_{l+n}^2 <= C_sq q_sq^n a_l^2.
  double C_sq = 0.0;
  double q_sq = 0.0;
  /// Bound for a itself: C_lin = sqrt(C_sq), q_lin = sqrt(q_sq), verified.
  RLinearFit fit;
};

/// Validates the hypotheses
///   a_{l+1} <= q a_l + b_l,  b_{l+N} <= C1 a_l,
///   sum_{l'=l}^{l+N} b_{l'}^2 <= C2 (N+1)^{1-delta} a_l^2
/// on the finite sequences; throws HypothesisError at the first failure.
void check_criterion_hypotheses(std::span<const double> a, std::span<const double> b, double q,
                                double C1, double C2, double delta);

/// Constructive R-linear constants from the tail-summability criterion.
CriterionConstants rlinear_constants_from_criterion(std::span<const double> a,
                                                    std::span<const double> b, double q,
                                                    double C1, double C2, double delta);

/// D_N and M_n of the pipeline (exposed for tests).
double criterion_D(long long N, double kappa, double epsilon, double C2, double delta);

/// max_l sum_{l'>l} a_{l'}^m / a_l^m over indices with a_l > 0.
double tail_sum_constant(std::span<const double> a, double m = 1.0);

/// A random finite instance satisfying the criterion hypotheses, with C1 and
/// C2 set to the smallest admissible values for the generated sequences.
struct CriterionInstance {
  std::vector<double> a, b;
  double q = 0.5, C1 = 1.0, C2 = 1.0, delta = 1.0;
};
CriterionInstance random_criterion_instance(std::uint64_t seed);

/// Tail constant C1 (for m = 1) to R-linear constants (1 + C1, (1/C1 + 1)^{-1}).
RLinearFit rlinear_from_tail_constant(double C1);
/// R-linear constants to the tail constant C q / (1 - q).
double tail_constant_from_rlinear(double C, double q);

struct TailSumEquivalence {
  double C_m = 0.0;        // measured tail constant of a^m
  RLinearFit fit;          // (i) -> (ii) for a, verified
  double C_m_back = 0.0;   // (ii) -> (i) from `fit`
  double max_tail_ratio = 0.0;  // measured tail ratio / C_m_back (<= 1 when verified)
  bool verified = false;
};

/// Both directions of the tail summability / R-linear equivalence for a^m.
TailSumEquivalence tailsum_rlinear_equivalence(std::span<const double> a, double m = 1.0);

/// Quasi-error per record. With `use_true` the verification columns are
/// used; otherwise the solver-increment surrogate.
std::vector<double> quasi_error(const History& h, bool use_true = false);

struct ComplexityResult {
  double M_dofs = 0.0;         // sup t_r^s a_r
  double M_cost = 0.0;         // sup (sum_{r'<=r} t_{r'})^s a_r
  double M_cost_double = 0.0;  // sup (sum_{r'<=r} sum_{r''<=r'} t_{r''})^s a_r
  double ratio = 0.0;          // M_cost / M_dofs
  double ratio_double = 0.0;   // M_cost_double / M_dofs
  RLinearFit fit;              // fit minimizing C_cost(s)
  double C_cost = 0.0;
  double C2 = 0.0;             // max t_{r+1} / t_r
  double s0 = 0.0;             // log(1/q_lin) / log(C2), infinite if C2 <= 1
};

/// (C^{1/s} / (1 - q^{1/s}))^{2s}.
double complexity_constant(double C, double q, double s);

ComplexityResult rates_equals_complexity(std::span<const double> a, std::span<const double> t,
                                         double s);
/// Uses the surrogate quasi-error and t = #T per record.
ComplexityResult rates_equals_complexity(const History& h, double s);

/// Least-squares slope of log y against log x over the trailing `window`
/// fraction of the points (at least 3).
double fit_rate_loglog(std::span<const double> x, std::span<const double> y, double window = 0.5);

struct Thresholds {
  double theta_star = 0.0;
  double lambda_star = 0.0;
  double C_alg = 0.0;
  double lambda_sym_star = 0.0;
};

Thresholds threshold_helpers(double q_alg, double C_stab, double C_drel, double q_sym_star,
                             double lambda_alg_star);

struct AxiomOptions {
  std::uint64_t seed = 1;
  /// Random coarse functions per level pair for the Pythagoras check.
  int pythagoras_trials = 3;
  double q_red = 0.8408964152537145;  // 2^{-1/4}
  double orthogonality_constant = 1.05;
  /// Compute the A4 reference on uniform_refine of the final mesh.
  bool quasi_orthogonality = true;
};

struct AxiomReport {
  int n_levels = 0;
  /// A1: max |eta_h(S, u_h) - eta_h(S, P u_H)| / |||u_h - P u_H||| on unrefined elements S.
  double stability = 0.0;
  /// A2: max eta_h(refined children, v_H)^2 / eta_H(refined, v_H)^2.
  double reduction_ratio2 = 0.0;
  bool reduction_ok = true;
  int reduction_first_failure = -1;
  /// A3: max |||u - u_l||| / eta_l (needs the exact solution, else NaN).
  double reliability = kNaN;
  /// QM: max eta_{l+1} / eta_l of Galerkin solutions.
  double quasi_monotonicity = 0.0;
  /// Pythagoras: max relative residual (NaN unless b = a).
  double pythagoras_residual = kNaN;
  /// A4: max partial sum / |||u_ref - u_l|||^2 (NaN when skipped).
  double orthogonality_ratio = kNaN;
  bool orthogonality_ok = true;
  bool ok() const { return reduction_ok && orthogonality_ok; }
};

/// Empirical axiom checks on a run with keep_levels set.
AxiomReport verify_axioms(const History& h, const ProblemDef& prob, const AxiomOptions& opt = {});

}  // namespace afem
