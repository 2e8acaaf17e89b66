#pragma once

#include "afem/fem.hpp"

namespace afem {

struct ZarantonelloConfig {
  double delta = 0.5;
  double lambda_sym = 0.7;
  double lambda_alg = 0.7;
};

/// Load vector (free dofs) of the SPD system whose solution is the
/// Zarantonello update Phi(delta; u):
///   a(Phi, v) = a(u, v) + delta [F(v) - b(u, v)]   (linear)
///   a(Phi, v) = a(u, v) + delta [F(v) - <A(u), v>] (quasi-linear).
/// `A` is the full a(.,.) matrix, `F` the full load vector; `B` the full
/// b(.,.) matrix for linear problems (ignored otherwise).
Vector zarantonello_rhs(const Space& space, const ProblemDef& prob, double delta,
                        const Vector& u, const SparseMatrix& A, const Vector& F,
                        const SparseMatrix* B);
/// Convenience overload that assembles everything itself.
Vector zarantonello_rhs(const Space& space, const ProblemDef& prob, double delta,
                        const DiscreteFunction& u);

/// Exact Zarantonello update Phi(delta; u) (full vector; Dirichlet values of u kept).
Vector zarantonello_step(const Space& space, const ProblemDef& prob, double delta,
                         const Vector& u);

/// q_sym* = sqrt(1 - delta (2 alpha - delta L^2)); requires 0 < delta < 2 alpha / L^2.
double zarantonello_contraction_bound(double alpha, double L, double delta);

/// |||u^{k,j} - u^{k,j-1}||| <= lambda_alg [lambda_sym eta + |||u^{k,j} - u^{k-1,jbar}|||]
bool inner_stop(double increment, double eta, double last_outer_increment,
                const ZarantonelloConfig& cfg);
/// |||u^k - u^{k-1}||| <= lambda eta
bool outer_stop(double increment, double eta, double lambda);

struct LambdaCheck {
  double q_sym = 0.0;
  bool ok = false;
};

/// Advisory check of the joint (lambda_alg, lambda_sym) constraint.
LambdaCheck check_lambda_constraint(const ZarantonelloConfig& cfg, double q_sym_star,
                                    double q_alg, double q_theta, double C_stab = 1.0);

/// q_theta = sqrt(1 - (1 - q_red^2) theta) with q_red^2 = 2^{-1/2}.
double q_theta(double theta);

}  // namespace afem
