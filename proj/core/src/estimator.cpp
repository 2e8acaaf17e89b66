#include "afem/estimator.hpp"

#include "afem/errors.hpp"
#include "afem/quadrature.hpp"
#include "element_eval.hpp"

#include <cmath>

namespace afem {

namespace {

int local_index(const Mesh& m, int t, int e) {
  for (int i = 0; i < 3; ++i)
    if (m.element_edge(t, i) == e) return i;
  return -1;
}

// normalized Legendre polynomials on [0, 1], orthonormal in L2(0, 1)
void legendre01(int n, double s, double* out) {
  double x = 2.0 * s - 1.0, p0 = 1.0, p1 = x;
  for (int k = 0; k < n; ++k) {
    double pk;
    if (k == 0) pk = 1.0;
    else if (k == 1) pk = x;
    else {
      pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    out[k] = std::sqrt(2.0 * k + 1.0) * pk;
  }
}

// Flux A(grad v) - f_vec at the points of `tab` on element t.
struct SideFlux {
  std::vector<Point> flux;
};

SideFlux side_flux(const DiscreteFunction& v, const ProblemDef& prob, int t,
                   const Tabulation& tab) {
  const Space& S = *v.space;
  const int nb = S.n_local();
  ElementGeometry g = element_geometry(S.mesh(), t);
  detail::DiffusionEval A(prob, g, prob.is_nonlinear());
  auto dofs = S.dofs(t);
  Eigen::Matrix<double, 2, Eigen::Dynamic> grads(2, nb);
  SideFlux out;
  out.flux.resize(tab.n_points);
  for (int q = 0; q < tab.n_points; ++q) {
    detail::basis_gradients(tab, q, g, grads);
    Point du = Point::Zero();
    for (int n = 0; n < nb; ++n) du += v.coeffs[dofs[n]] * grads.col(n);
    const Point x = g.map(tab.bary[q]);
    Point f = prob.is_nonlinear() ? Point(prob.nonlinearity->a(du.squaredNorm()) * du)
                                  : Point(A(x) * du);
    if (prob.flux_load) f -= prob.flux_load(x);
    out.flux[q] = f;
  }
  return out;
}

}  // namespace

Indicators compute_indicators(const DiscreteFunction& v, const ProblemDef& prob,
                              const EstimatorOptions& opt) {
  if (!v.space || v.coeffs.size() != v.space->n_dofs())
    throw ArgumentError("compute_indicators: function does not match its space");
  const Space& S = *v.space;
  const Mesh& mesh = S.mesh();
  const int p = S.degree(), nb = S.n_local();
  Indicators ind;
  ind.per_element.assign(mesh.n_elements(), 0.0);

  // volume residual |T| * ||-div(A grad v - f_vec) + b.grad v + c v - f||^2
  const Tabulation& tab = tabulate(p, 2 * p + 2);
  Eigen::Matrix<double, 2, Eigen::Dynamic> grads(2, nb);
  for (int t = 0; t < mesh.n_elements(); ++t) {
    ElementGeometry g = element_geometry(mesh, t);
    detail::DiffusionEval A(prob, g, prob.is_nonlinear());
    auto dofs = S.dofs(t);
    double vol = 0.0;
    for (int q = 0; q < tab.n_points; ++q) {
      detail::basis_gradients(tab, q, g, grads);
      const double* phi = &tab.val[q * nb];
      Point du = Point::Zero();
      double u = 0.0;
      Matrix2 H = Matrix2::Zero();
      for (int n = 0; n < nb; ++n) {
        du += v.coeffs[dofs[n]] * grads.col(n);
        u += v.coeffs[dofs[n]] * phi[n];
      }
      if (p >= 2) {
        Eigen::Matrix3d D = Eigen::Matrix3d::Zero();
        for (int n = 0; n < nb; ++n) {
          const double* d2 = &tab.d2[(q * nb + n) * 9];
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) D(a, b) += v.coeffs[dofs[n]] * d2[3 * a + b];
        }
        H = g.grad_bary * D * g.grad_bary.transpose();
      }
      const Point x = g.map(tab.bary[q]);
      double div_flux;
      if (prob.is_nonlinear()) {
        const auto& nl = *prob.nonlinearity;
        double s = du.squaredNorm();
        div_flux = nl.a(s) * H.trace() + 2.0 * nl.a_prime(s) * du.dot(H * du);
      } else {
        div_flux = (A(x).cwiseProduct(H)).sum();
        if (prob.diffusion_div && !prob.diffusion_elementwise_constant)
          div_flux += prob.diffusion_div(x).dot(du);
      }
      if (prob.flux_load_div) div_flux -= prob.flux_load_div(x);
      double r = -div_flux;
      if (prob.convection) r += prob.convection(x).dot(du);
      if (prob.reaction) r += prob.reaction(x) * u;
      if (prob.load) r -= prob.load(x);
      vol += tab.weights[q] * r * r;
    }
    ind.per_element[t] = g.area * g.area * vol;
  }

  // normal-flux jumps across interior edges
  const int edge_order = 2 * p + 2;
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const auto& adj = mesh.edge_elements(e);
    if (adj[1] < 0) continue;
    const int t1 = adj[0], t2 = adj[1];
    const int i1 = local_index(mesh, t1, e), i2 = local_index(mesh, t2, e);
    const auto& el1 = mesh.element(t1);
    const auto& el2 = mesh.element(t2);
    const int a1 = el1[(i1 + 1) % 3], b1 = el1[(i1 + 2) % 3];
    const bool same_dir = el2[(i2 + 1) % 3] == a1;
    const Tabulation& tab1 = tabulate_edge(p, edge_order, i1);
    const Tabulation& tab2 = tabulate_edge(p, edge_order, i2);
    SideFlux f1 = side_flux(v, prob, t1, tab1);
    SideFlux f2 = side_flux(v, prob, t2, tab2);
    Point tau = mesh.vertex(b1) - mesh.vertex(a1);
    const double h = tau.norm();
    Point nrm(tau.y() / h, -tau.x() / h);
    const int nq = tab1.n_points;
    double J = 0.0;
    for (int q = 0; q < nq; ++q) {
      int q2 = same_dir ? q : nq - 1 - q;
      double jump = (f1.flux[q] - f2.flux[q2]).dot(nrm);
      J += tab1.weights[q] * jump * jump;
    }
    J *= h;
    ind.per_element[t1] += std::pow(mesh.area(t1), opt.jump_weight_exponent) * J;
    ind.per_element[t2] += std::pow(mesh.area(t2), opt.jump_weight_exponent) * J;
  }

  // boundary-data oscillation |T|^{1/2} ||(1 - Pi^{p-1}) du_D/ds||^2 on Dirichlet edges
  if (opt.boundary_oscillation && prob.dirichlet && prob.dirichlet_gradient) {
    LineRule rule = gauss_legendre(p + 5);
    const int nq = static_cast<int>(rule.points.size());
    std::vector<double> leg(p);
    std::vector<double> gval(nq);
    for (int e = 0; e < mesh.n_edges(); ++e) {
      if (!mesh.is_boundary_edge(e)) continue;
      const int t = mesh.edge_elements(e)[0];
      const auto& ed = mesh.edge(e);
      const Point xa = mesh.vertex(ed[0]), xb = mesh.vertex(ed[1]);
      Point tau = xb - xa;
      const double h = tau.norm();
      tau /= h;
      std::vector<double> coef(p, 0.0);
      for (int q = 0; q < nq; ++q) {
        const double s = rule.points[q];
        gval[q] = prob.dirichlet_gradient((1.0 - s) * xa + s * xb).dot(tau);
        legendre01(p, s, leg.data());
        for (int k = 0; k < p; ++k) coef[k] += rule.weights[q] * gval[q] * leg[k];
      }
      double osc = 0.0;
      for (int q = 0; q < nq; ++q) {
        legendre01(p, rule.points[q], leg.data());
        double proj = 0.0;
        for (int k = 0; k < p; ++k) proj += coef[k] * leg[k];
        osc += rule.weights[q] * (gval[q] - proj) * (gval[q] - proj);
      }
      ind.per_element[t] += std::sqrt(mesh.area(t)) * h * osc;
    }
  }

  for (double x : ind.per_element) ind.total2 += x;
  return ind;
}

double estimator_total(const Indicators& ind, std::optional<std::span<const int>> subset) {
  if (!subset) return std::sqrt(ind.total2);
  double s = 0.0;
  const int n = static_cast<int>(ind.per_element.size());
  for (int t : *subset) {
    if (t < 0 || t >= n) throw ArgumentError("estimator_total: element index out of range");
    s += ind.per_element[t];
  }
  return std::sqrt(s);
}

}  // namespace afem
