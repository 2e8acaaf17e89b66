#include "afem/iteration.hpp"

#include "afem/errors.hpp"
#include "afem/solvers.hpp"

#include <cmath>

namespace afem {

Vector zarantonello_rhs(const Space& space, const ProblemDef& prob, double delta,
                        const Vector& u, const SparseMatrix& A, const Vector& F,
                        const SparseMatrix* B) {
  if (u.size() != space.n_dofs()) throw ArgumentError("zarantonello_rhs: length mismatch");
  Vector Bu;
  if (prob.is_nonlinear()) {
    Bu = apply_nonlinear(space, prob, u);
  } else {
    if (!B) throw ArgumentError("zarantonello_rhs: linear problem needs b(.,.)");
    Bu = (*B) * u;
  }
  // the Dirichlet part of A u moves to the right-hand side with the lift
  Vector g = Vector::Zero(space.n_dofs());
  for (int d : space.dirichlet_dofs()) g[d] = u[d];
  Vector full = A * (u - g) + delta * (F - Bu);
  return free_part(space, full);
}

Vector zarantonello_rhs(const Space& space, const ProblemDef& prob, double delta,
                        const DiscreteFunction& u) {
  if (u.space.get() != &space) throw ArgumentError("zarantonello_rhs: function space mismatch");
  SparseMatrix A = assemble_a(space, prob);
  Vector F = assemble_load(space, prob);
  if (prob.is_nonlinear()) return zarantonello_rhs(space, prob, delta, u.coeffs, A, F, nullptr);
  SparseMatrix B = assemble_b(space, prob);
  return zarantonello_rhs(space, prob, delta, u.coeffs, A, F, &B);
}

Vector zarantonello_step(const Space& space, const ProblemDef& prob, double delta,
                         const Vector& u) {
  SparseMatrix A = assemble_a(space, prob);
  Vector F = assemble_load(space, prob);
  Vector rhs;
  if (prob.is_nonlinear()) {
    rhs = zarantonello_rhs(space, prob, delta, u, A, F, nullptr);
  } else {
    SparseMatrix B = assemble_b(space, prob);
    rhs = zarantonello_rhs(space, prob, delta, u, A, F, &B);
  }
  return with_free(space, u, solve_direct(free_block(space, A), rhs));
}

double zarantonello_contraction_bound(double alpha, double L, double delta) {
  if (!(alpha > 0.0) || !(L >= alpha))
    throw ArgumentError("zarantonello_contraction_bound: need 0 < alpha <= L");
  if (!(delta > 0.0) || !(delta < 2.0 * alpha / (L * L)))
    throw ArgumentError("zarantonello_contraction_bound: delta must lie in (0, 2 alpha / L^2)");
  return std::sqrt(std::max(0.0, 1.0 - delta * (2.0 * alpha - delta * L * L)));
}

bool inner_stop(double increment, double eta, double last_outer_increment,
                const ZarantonelloConfig& cfg) {
  return increment <= cfg.lambda_alg * (cfg.lambda_sym * eta + last_outer_increment);
}

bool outer_stop(double increment, double eta, double lambda) { return increment <= lambda * eta; }

LambdaCheck check_lambda_constraint(const ZarantonelloConfig& cfg, double q_sym_star,
                                    double q_alg, double q_th, double C_stab) {
  LambdaCheck res;
  if (cfg.lambda_alg == 0.0 || q_alg == 0.0) {
    res.q_sym = q_sym_star;
    res.ok = q_sym_star < 1.0;
    return res;
  }
  const double f = 2.0 * q_alg * cfg.lambda_alg / (1.0 - q_alg);
  res.q_sym = f < 1.0 ? (q_sym_star + f) / (1.0 - f) : INFINITY;
  const double bound =
      (1.0 - q_alg) * (1.0 - q_sym_star) * (1.0 - q_th) / (8.0 * q_alg * C_stab);
  res.ok = res.q_sym < 1.0 && cfg.lambda_alg * cfg.lambda_sym < bound;
  return res;
}

double q_theta(double theta) {
  const double qred2 = std::pow(2.0, -0.5);
  return std::sqrt(1.0 - (1.0 - qred2) * theta);
}

}  // namespace afem
