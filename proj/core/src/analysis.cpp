#include "afem/analysis.hpp"

#include "afem/errors.hpp"
#include "afem/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace afem {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite_nonneg(std::span<const double> a, const char* who) {
  for (double x : a)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw ArgumentError(std::string(who) + ": entries must be finite and nonnegative");
}

// q-grid minimizer of objective(C(q), q)
template <class Obj>
RLinearFit fit_on_grid(std::span<const double> a, Obj objective) {
  RLinearFit best;
  double best_val = kInf;
  auto consider = [&](double q) {
    double C = rlinear_constant(a, q);
    if (!std::isfinite(C)) return;
    double v = objective(C, q);
    if (v < best_val) {
      best_val = v;
      best.C_lin = C;
      best.q_lin = q;
    }
  };
  const int n = 1000;
  for (int i = 1; i < n; ++i) consider(static_cast<double>(i) / n);
  // local refinement around the coarse optimum
  const double q0 = best.q_lin;
  for (int i = -100; i <= 100; ++i) {
    double q = q0 + i * 1e-5;
    if (q > 0.0 && q < 1.0) consider(q);
  }
  if (!std::isfinite(best_val)) {
    best.C_lin = kInf;
    best.q_lin = 1.0;
    best.max_violation = kInf;
    return best;
  }
  best.max_violation = rlinear_max_violation(a, best.C_lin, best.q_lin);
  return best;
}

}  // namespace

double rlinear_max_violation(std::span<const double> a, double C, double q) {
  if (!(C > 0.0) || !(q >= 0.0)) throw ArgumentError("rlinear_max_violation: need C > 0, q >= 0");
  const int n = static_cast<int>(a.size());
  if (q == 0.0) {
    // only n = 0 pairs are finite
    double worst = 0.0;
    bool seen = false;
    for (int r = 0; r < n; ++r) {
      if (a[r] > 0.0) {
        if (seen) return kInf;
        worst = std::max(worst, 1.0 / C);
      }
      seen = true;
    }
    return worst;
  }
  const double lq = std::log(q);
  double best = -kInf;  // max over m <= r, a_m > 0, of m log q - log a_m
  double worst = -kInf;
  bool zero_before = false;
  for (int r = 0; r < n; ++r) {
    if (a[r] > 0.0) {
      if (zero_before) return kInf;
      const double g = std::log(a[r]) - r * lq;
      best = std::max(best, -g);
      worst = std::max(worst, g + best);
    } else {
      zero_before = true;
    }
  }
  return worst == -kInf ? 0.0 : std::exp(worst) / C;
}

double rlinear_constant(std::span<const double> a, double q) {
  return rlinear_max_violation(a, 1.0, q);
}

RLinearFit fit_rlinear(std::span<const double> a) {
  require_finite_nonneg(a, "fit_rlinear");
  return fit_on_grid(a, [](double C, double q) { return C / (1.0 - q); });
}

void check_criterion_hypotheses(std::span<const double> a, std::span<const double> b, double q,
                                double C1, double C2, double delta) {
  if (!(q > 0.0 && q < 1.0)) throw ArgumentError("criterion: q must lie in (0, 1)");
  if (!(C1 > 0.0 && C2 > 0.0)) throw ArgumentError("criterion: C1, C2 must be positive");
  if (!(delta > 0.0 && delta <= 1.0)) throw ArgumentError("criterion: delta must lie in (0, 1]");
  if (a.size() != b.size()) throw ArgumentError("criterion: a and b differ in length");
  require_finite_nonneg(a, "criterion");
  require_finite_nonneg(b, "criterion");
  const int n = static_cast<int>(a.size());
  constexpr double rel = 1e-12;
  for (int l = 0; l + 1 < n; ++l) {
    double rhs = q * a[l] + b[l];
    if (a[l + 1] > rhs * (1.0 + rel))
      throw HypothesisError("criterion: a_{l+1} <= q a_l + b_l fails at l = " + std::to_string(l), l);
  }
  double amin = kInf;
  for (int m = 0; m < n; ++m) {
    amin = std::min(amin, a[m]);
    if (b[m] > C1 * amin * (1.0 + rel))
      throw HypothesisError("criterion: b_{l+N} <= C1 a_l fails at index " + std::to_string(m), m);
  }
  for (int l = 0; l < n; ++l) {
    double s = 0.0;
    const double a2 = a[l] * a[l];
    for (int N = 0; l + N < n; ++N) {
      s += b[l + N] * b[l + N];
      if (s > C2 * std::pow(N + 1.0, 1.0 - delta) * a2 * (1.0 + rel))
        throw HypothesisError("criterion: b summability fails at l = " + std::to_string(l) +
                                  ", N = " + std::to_string(N),
                              l);
    }
  }
}

double criterion_D(long long N, double kappa, double epsilon, double C2, double delta) {
  return 1.0 + (kappa + (1.0 + 1.0 / epsilon) * C2 * std::pow(static_cast<double>(N), 1.0 - delta)) /
                   (1.0 - kappa);
}

CriterionConstants rlinear_constants_from_criterion(std::span<const double> a,
                                                    std::span<const double> b, double q,
                                                    double C1, double C2, double delta) {
  check_criterion_hypotheses(a, b, q, C1, C2, delta);
  CriterionConstants c;
  c.epsilon = 0.5;
  while ((1.0 + c.epsilon) * q * q >= 1.0) c.epsilon *= 0.5;
  c.kappa = (1.0 + c.epsilon) * q * q;
  c.C3 = 1.0 + C1 / (1.0 - q);

  constexpr long long cap = 200000000LL;
  double sum_log = 0.0;
  long long n0 = 0;
  double M = 0.0;
  for (long long j = 1; j <= cap; ++j) {
    const double D = criterion_D(j, c.kappa, c.epsilon, C2, delta);
    sum_log += std::log1p(-1.0 / D);
    M = sum_log + std::log(D);
    if (M < 0.0) {
      n0 = j;
      break;
    }
  }
  if (n0 == 0) throw ArgumentError("criterion: no n0 with M_n0 < 0 below the iteration cap");
  c.n0 = n0;
  c.q0 = std::exp(M);
  c.C_sq = c.C3 * c.C3 / c.q0;
  c.q_sq = std::pow(c.q0, 1.0 / static_cast<double>(n0));
  c.fit.C_lin = std::sqrt(c.C_sq);
  c.fit.q_lin = std::sqrt(c.q_sq);
  c.fit.max_violation = rlinear_max_violation(a, c.fit.C_lin, c.fit.q_lin);
  return c;
}

CriterionInstance random_criterion_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  CriterionInstance c;
  c.q = 0.2 + 0.6 * U(rng);
  c.delta = 0.5 + 0.5 * U(rng);
  const int n = 20 + static_cast<int>(180 * U(rng));
  const double scale = 0.3 * (1.0 - c.q) * U(rng);
  c.a.resize(n);
  c.b.resize(n);
  c.a[0] = std::exp(4.0 * (U(rng) - 0.5));
  double amin = c.a[0];
  for (int l = 0; l < n; ++l) {
    amin = std::min(amin, c.a[l]);
    c.b[l] = U(rng) < 0.2 ? 0.0 : scale * U(rng) * amin;
    if (l + 1 < n) c.a[l + 1] = (0.5 + 0.5 * U(rng)) * (c.q * c.a[l] + c.b[l]);
  }
  // tightest constants for the generated data
  double C1 = 0.0, C2 = 0.0;
  amin = kInf;
  for (int m = 0; m < n; ++m) {
    amin = std::min(amin, c.a[m]);
    if (amin > 0.0) C1 = std::max(C1, c.b[m] / amin);
  }
  for (int l = 0; l < n; ++l) {
    double s = 0.0;
    for (int N = 0; l + N < n; ++N) {
      s += c.b[l + N] * c.b[l + N];
      C2 = std::max(C2, s / (std::pow(N + 1.0, 1.0 - c.delta) * c.a[l] * c.a[l]));
    }
  }
  c.C1 = std::max(C1, 1e-3);
  c.C2 = std::max(C2, 1e-3);
  return c;
}

double tail_sum_constant(std::span<const double> a, double m) {
  if (!(m > 0.0)) throw ArgumentError("tail_sum_constant: m must be positive");
  require_finite_nonneg(a, "tail_sum_constant");
  const int n = static_cast<int>(a.size());
  double tail = 0.0, worst = 0.0;
  for (int l = n - 1; l >= 0; --l) {
    const double am = std::pow(a[l], m);
    if (am > 0.0) worst = std::max(worst, tail / am);
    else if (tail > 0.0) return kInf;
    tail += am;
  }
  return worst;
}

RLinearFit rlinear_from_tail_constant(double C1) {
  if (!(C1 >= 0.0)) throw ArgumentError("rlinear_from_tail_constant: C1 must be nonnegative");
  RLinearFit f;
  f.C_lin = 1.0 + C1;
  f.q_lin = C1 > 0.0 ? 1.0 / (1.0 / C1 + 1.0) : 0.0;
  return f;
}

double tail_constant_from_rlinear(double C, double q) {
  if (!(C > 0.0) || !(q >= 0.0 && q < 1.0))
    throw ArgumentError("tail_constant_from_rlinear: need C > 0 and 0 <= q < 1");
  return C * q / (1.0 - q);
}

TailSumEquivalence tailsum_rlinear_equivalence(std::span<const double> a, double m) {
  TailSumEquivalence r;
  r.C_m = tail_sum_constant(a, m);
  if (!std::isfinite(r.C_m)) return r;
  RLinearFit fm = rlinear_from_tail_constant(r.C_m);  // for a^m
  r.fit.C_lin = std::pow(fm.C_lin, 1.0 / m);
  r.fit.q_lin = std::pow(fm.q_lin, 1.0 / m);
  r.fit.max_violation = rlinear_max_violation(a, r.fit.C_lin, r.fit.q_lin);
  r.C_m_back = tail_constant_from_rlinear(fm.C_lin, fm.q_lin);
  r.max_tail_ratio = r.C_m_back > 0.0 ? r.C_m / r.C_m_back : (r.C_m > 0.0 ? kInf : 0.0);
  r.verified = r.fit.max_violation <= 1.0 + 1e-9 && r.max_tail_ratio <= 1.0 + 1e-12;
  return r;
}

std::vector<double> quasi_error(const History& h, bool use_true) {
  std::vector<double> H(h.records.size());
  const bool single = h.algorithm == "single", nested = h.algorithm == "nested";
  if (nested && !use_true && !std::isfinite(h.q_sym_star))
    throw ArgumentError("quasi_error: nested surrogate needs the Zarantonello bound q_sym*");
  const double qs = h.q_sym_star;
  for (std::size_t i = 0; i < h.records.size(); ++i) {
    const Record& r = h.records[i];
    const double qa = r.ell < static_cast<int>(h.q_alg_levels.size()) ? h.q_alg_levels[r.ell]
                                                                       : h.q_alg;
    const double inc = std::isfinite(r.increment) ? r.increment : 0.0;
    const double e_alg = qa / (1.0 - qa) * inc;
    if (single) {
      H[i] = use_true ? r.err_galerkin + r.eta : e_alg + r.eta;
    } else if (nested) {
      if (use_true) {
        H[i] = r.err_galerkin + r.err_sym + r.eta;
      } else {
        const double outer = std::isfinite(r.outer_increment) ? r.outer_increment : 0.0;
        const double e_sym = qs / (1.0 - qs) * (outer + e_alg);
        H[i] = e_sym + 2.0 * e_alg + r.eta;
      }
    } else {
      H[i] = r.eta;
    }
    if (use_true && !std::isfinite(H[i]))
      throw ArgumentError("quasi_error: verification columns missing at record " +
                          std::to_string(i));
  }
  return H;
}

double complexity_constant(double C, double q, double s) {
  if (!(s > 0.0)) throw ArgumentError("complexity_constant: s must be positive");
  return std::pow(std::pow(C, 1.0 / s) / (1.0 - std::pow(q, 1.0 / s)), 2.0 * s);
}

ComplexityResult rates_equals_complexity(std::span<const double> a, std::span<const double> t,
                                         double s) {
  if (!(s > 0.0)) throw ArgumentError("rates_equals_complexity: s must be positive");
  if (a.empty() || a.size() != t.size())
    throw ArgumentError("rates_equals_complexity: need equal-length nonempty sequences");
  require_finite_nonneg(a, "rates_equals_complexity");
  require_finite_nonneg(t, "rates_equals_complexity");
  ComplexityResult res;
  double cum = 0.0, cum2 = 0.0;
  res.C2 = 1.0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    cum += t[r];
    cum2 += cum;
    res.M_dofs = std::max(res.M_dofs, std::pow(t[r], s) * a[r]);
    res.M_cost = std::max(res.M_cost, std::pow(cum, s) * a[r]);
    res.M_cost_double = std::max(res.M_cost_double, std::pow(cum2, s) * a[r]);
    if (r > 0 && t[r - 1] > 0.0) res.C2 = std::max(res.C2, t[r] / t[r - 1]);
  }
  res.ratio = res.M_dofs > 0.0 ? res.M_cost / res.M_dofs : 1.0;
  res.ratio_double = res.M_dofs > 0.0 ? res.M_cost_double / res.M_dofs : 1.0;
  res.fit = fit_on_grid(a, [s](double C, double q) { return complexity_constant(C, q, s); });
  res.C_cost = complexity_constant(res.fit.C_lin, res.fit.q_lin, s);
  res.s0 = res.C2 > 1.0 ? std::log(1.0 / res.fit.q_lin) / std::log(res.C2) : kInf;
  return res;
}

ComplexityResult rates_equals_complexity(const History& h, double s) {
  std::vector<double> a = quasi_error(h, false), t;
  t.reserve(h.records.size());
  for (const auto& r : h.records) t.push_back(r.n_elem);
  return rates_equals_complexity(a, t, s);
}

double fit_rate_loglog(std::span<const double> x, std::span<const double> y, double window) {
  if (x.size() != y.size()) throw ArgumentError("fit_rate_loglog: x and y differ in length");
  if (!(window > 0.0 && window <= 1.0)) throw ArgumentError("fit_rate_loglog: window must be in (0, 1]");
  const int n = static_cast<int>(x.size());
  if (n < 3) throw ArgumentError("fit_rate_loglog: need at least 3 points");
  int m = std::min(n, std::max(3, static_cast<int>(std::ceil(window * n))));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = n - m; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ArgumentError("fit_rate_loglog: data must be positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = m * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) throw ArgumentError("fit_rate_loglog: x values are all equal");
  return (m * sxy - sx * sy) / den;
}

Thresholds threshold_helpers(double q_alg, double C_stab, double C_drel, double q_sym_star,
                             double lambda_alg_star) {
  if (!(q_alg >= 0.0 && q_alg < 1.0) || !(C_stab > 0.0) || !(C_drel > 0.0) ||
      !(q_sym_star >= 0.0 && q_sym_star < 1.0) || !(lambda_alg_star >= 0.0))
    throw ArgumentError("threshold_helpers: invalid input range");
  Thresholds t;
  t.theta_star = 1.0 / (1.0 + C_stab * C_stab * C_drel * C_drel);
  t.lambda_star = q_alg > 0.0 ? std::min(1.0, (1.0 - q_alg) / q_alg / C_stab) : 1.0;
  t.C_alg = (2.0 * q_alg / (1.0 - q_alg) * lambda_alg_star + q_sym_star) / (1.0 - q_sym_star);
  t.lambda_sym_star = t.C_alg > 0.0 ? std::min(1.0, 1.0 / (C_stab * t.C_alg)) : 1.0;
  return t;
}

AxiomReport verify_axioms(const History& h, const ProblemDef& prob, const AxiomOptions& opt) {
  if (h.levels.empty()) throw ArgumentError("verify_axioms: run has no stored levels (keep_levels)");
  AxiomReport rep;
  const int L = static_cast<int>(h.levels.size());
  rep.n_levels = L;
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);

  std::vector<DiscreteFunction> ustar(L);
  std::vector<SparseMatrix> A(L);
  std::vector<Indicators> ind(L);
  for (int l = 0; l < L; ++l) {
    const LevelData& lv = h.levels[l];
    if (lv.u_galerkin.size() == lv.space->n_dofs())
      ustar[l] = DiscreteFunction(lv.space, lv.u_galerkin);
    else if (h.algorithm == "exact")
      ustar[l] = DiscreteFunction(lv.space, lv.u);
    else
      ustar[l] = solve_galerkin_exact(lv.space, prob);
    A[l] = assemble_a(*lv.space, prob);
    ind[l] = compute_indicators(ustar[l], prob, h.options.estimator);
  }

  const double q2 = opt.q_red * opt.q_red;
  const bool symmetric = prob.is_symmetric_energy();
  double pyth = 0.0;
  for (int l = 0; l + 1 < L; ++l) {
    const Space& Sc = *h.levels[l].space;
    const SpacePtr& Sf = h.levels[l + 1].space;
    const Mesh& mc = Sc.mesh();
    const Mesh& mf = Sf->mesh();
    SparseMatrix P = prolongation_matrix(Sc, *Sf);
    DiscreteFunction Pu(Sf, P * ustar[l].coeffs);
    Indicators indP = compute_indicators(Pu, prob, h.options.estimator);

    std::vector<int> anc = mf.ancestor_map(mc);
    std::vector<int> n_children(mc.n_elements(), 0);
    for (int t = 0; t < mf.n_elements(); ++t) ++n_children[anc[t]];

    // A1 on unrefined elements, A2 on refined ones
    double s_h = 0.0, s_hP = 0.0, fine_ref = 0.0, coarse_ref = 0.0;
    for (int t = 0; t < mf.n_elements(); ++t) {
      if (n_children[anc[t]] == 1) {
        s_h += ind[l + 1].per_element[t];
        s_hP += indP.per_element[t];
      } else {
        fine_ref += indP.per_element[t];
      }
    }
    for (int T = 0; T < mc.n_elements(); ++T)
      if (n_children[T] > 1) coarse_ref += ind[l].per_element[T];
    const double diff = energy_norm(A[l + 1], ustar[l + 1].coeffs - Pu.coeffs);
    if (diff > 0.0)
      rep.stability = std::max(rep.stability, std::abs(std::sqrt(s_h) - std::sqrt(s_hP)) / diff);
    const double ratio = coarse_ref > 0.0 ? fine_ref / coarse_ref : (fine_ref > 0.0 ? kInf : 0.0);
    rep.reduction_ratio2 = std::max(rep.reduction_ratio2, ratio);
    if (ratio > q2 * (1.0 + 1e-9) && rep.reduction_ok) {
      rep.reduction_ok = false;
      rep.reduction_first_failure = l;
    }

    const double eta_c = std::sqrt(ind[l].total2), eta_f = std::sqrt(ind[l + 1].total2);
    if (eta_c > 0.0) rep.quasi_monotonicity = std::max(rep.quasi_monotonicity, eta_f / eta_c);

    if (symmetric) {
      for (int trial = 0; trial < opt.pythagoras_trials; ++trial) {
        Vector w = Vector::Zero(Sc.n_dofs());
        for (int d : Sc.free_dofs()) w[d] = U(rng);
        Vector vH = ustar[l].coeffs + w;
        Vector PvH = P * vH, Pw = P * w;
        const Vector& uh = ustar[l + 1].coeffs;
        double lhs = std::pow(energy_norm(A[l + 1], uh - PvH), 2);
        double rhs = std::pow(energy_norm(A[l + 1], uh - Pu.coeffs), 2) +
                     std::pow(energy_norm(A[l + 1], Pw), 2);
        if (lhs > 0.0) pyth = std::max(pyth, std::abs(lhs - rhs) / lhs);
      }
    }
  }
  if (symmetric && L > 1) rep.pythagoras_residual = pyth;

  if (prob.exact) {
    rep.reliability = 0.0;
    for (int l = 0; l < L; ++l) {
      const double eta = std::sqrt(ind[l].total2);
      if (eta > 0.0) rep.reliability = std::max(rep.reliability, energy_error(ustar[l], prob) / eta);
    }
  }

  if (opt.quasi_orthogonality) {
    auto ref_space = std::make_shared<const Space>(uniform_refine(h.levels.back().space->mesh_ptr()),
                                                   h.levels.back().space->degree());
    DiscreteFunction uref = solve_galerkin_exact(ref_space, prob);
    SparseMatrix Aref = assemble_a(*ref_space, prob);
    std::vector<double> step2(L, 0.0);  // |||u_{l+1} - u_l|||^2
    for (int l = 0; l + 1 < L; ++l) {
      SparseMatrix P = prolongation_matrix(*h.levels[l].space, *h.levels[l + 1].space);
      step2[l] = std::pow(energy_norm(A[l + 1], ustar[l + 1].coeffs - P * ustar[l].coeffs), 2);
    }
    double C = opt.orthogonality_constant;
    if (auto mb = prob.monotonicity(); prob.is_nonlinear() && mb) C = 1.1 * mb->lipschitz / mb->alpha;
    double worst = 0.0, partial = 0.0;
    for (int l = L - 1; l >= 0; --l) {
      partial += step2[l];
      SparseMatrix P = prolongation_matrix(*h.levels[l].space, *ref_space);
      double ref2 = std::pow(energy_norm(Aref, uref.coeffs - P * ustar[l].coeffs), 2);
      if (ref2 > 0.0) worst = std::max(worst, partial / ref2);
      else if (partial > 0.0) worst = kInf;
    }
    rep.orthogonality_ratio = worst;
    if (symmetric || prob.is_nonlinear()) rep.orthogonality_ok = worst <= C;
  }
  return rep;
}

}  // namespace afem
