#pragma once

// Helpers shared by the element loops of fem.cpp and estimator.cpp.

#include "afem/fem.hpp"

namespace afem::detail {

inline Matrix2 diffusion_at(const ProblemDef& prob, const Point& x) {
  return prob.diffusion ? prob.diffusion(x) : Matrix2::Identity();
}

// Per-element A: either evaluated once at the centroid or per point.
struct DiffusionEval {
  const ProblemDef& prob;
  bool constant;
  Matrix2 fixed;
  DiffusionEval(const ProblemDef& p, const ElementGeometry& g, bool force_identity)
      : prob(p), constant(force_identity || !p.diffusion || p.diffusion_elementwise_constant) {
    if (force_identity || !p.diffusion) fixed = Matrix2::Identity();
    else if (constant) fixed = p.diffusion((g.x0 + g.x1 + g.x2) / 3.0);
  }
  Matrix2 operator()(const Point& x) const { return constant ? fixed : prob.diffusion(x); }
};

// physical gradients of all basis functions at quadrature point q
inline void basis_gradients(const Tabulation& tab, int q, const ElementGeometry& g,
                     Eigen::Matrix<double, 2, Eigen::Dynamic>& grads) {
  const int nb = tab.n_basis;
  for (int n = 0; n < nb; ++n) {
    const double* d = &tab.d1[(q * nb + n) * 3];
    grads.col(n) = g.grad_bary.col(0) * d[0] + g.grad_bary.col(1) * d[1] +
                   g.grad_bary.col(2) * d[2];
  }
}

}  // namespace afem::detail
