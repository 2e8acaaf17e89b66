#include "doctest.h"
#include "helpers.hpp"

#include "afem/errors.hpp"
#include "afem/problems.hpp"

#include <cmath>

using namespace afem;
using testing::unit_square;

namespace {

SpacePtr space_of(MeshPtr m, int p = 1) { return std::make_shared<const Space>(std::move(m), p); }

Vector interpolate(const Space& s, const std::function<double(const Point&)>& f) {
  Vector v(s.n_dofs());
  for (int d = 0; d < s.n_dofs(); ++d) v[d] = f(s.dof_point(d));
  return v;
}

}  // namespace

TEST_CASE("P1 Laplace stiffness on the two-triangle square") {
  auto S = space_of(unit_square());
  Eigen::MatrixXd K = Eigen::MatrixXd(assemble_a(*S, testing::poisson()));
  Eigen::Matrix4d expected;
  expected << 1, -0.5, 0, -0.5,
             -0.5, 1, -0.5, 0,
              0, -0.5, 1, -0.5,
             -0.5, 0, -0.5, 1;
  CHECK((K - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("stiffness is exactly symmetric and deterministic") {
  Benchmark bm = kellogg();
  for (int p = 1; p <= 3; ++p) {
    auto S = space_of(testing::refine_randomly(bm.mesh, 3, 1), p);
    SparseMatrix A = assemble_a(*S, bm.problem);
    SparseMatrix At = A.transpose();
    CHECK((A - At).norm() == 0.0);
    SparseMatrix A2 = assemble_a(*S, bm.problem);
    CHECK((A - A2).norm() == 0.0);
  }
}

TEST_CASE("Kellogg coefficient scales the energy per quadrant") {
  Benchmark bm = kellogg();
  auto S = space_of(bm.mesh);
  SparseMatrix A = assemble_a(*S, bm.problem);
  Vector x = interpolate(*S, [](const Point& p) { return p.x(); });
  // |grad x| = 1; two quadrants of area 1 carry R, two carry 1
  CHECK(energy_inner(A, x, x) == doctest::Approx(2 * kellogg_data::R + 2).epsilon(1e-13));
}

TEST_CASE("energy of a P1 hat") {
  // interior hat of the uniformly refined square: 4 right angles and 4
  // 45-degree corners meet at the centre
  auto S = space_of(uniform_refine(unit_square()));
  SparseMatrix A = assemble_a(*S, testing::poisson());
  REQUIRE(S->n_free() == 1);
  Vector h = Vector::Zero(S->n_dofs());
  h[S->free_dofs()[0]] = 1.0;
  CHECK(energy_norm(A, h) == doctest::Approx(2.0));
}

TEST_CASE("convection form: skew part matches the analytic one") {
  Benchmark bm = lshape_convection();
  auto S = space_of(testing::refine_randomly(bm.mesh, 2, 4));
  SparseMatrix B = assemble_b(*S, bm.problem);
  SparseMatrix A = assemble_a(*S, bm.problem);
  SparseMatrix Bt = B.transpose();
  CHECK((B - Bt).norm() > 1e-3);
  // for v, w vanishing on the boundary, <x.grad v, w> + <x.grad w, v> = -2 <v, w>,
  // which cancels the reaction c = 1: sym(B) = A on free dofs
  SparseMatrix sym = free_block(*S, SparseMatrix(0.5 * (B + Bt)));
  SparseMatrix Af = free_block(*S, A);
  CHECK((sym - Af).norm() < 1e-13 * Af.norm());
}

TEST_CASE("assemble_b rejects quasi-linear problems") {
  Benchmark bm = zshape_nonlinear();
  auto S = space_of(bm.mesh);
  CHECK_THROWS_AS(assemble_b(*S, bm.problem), UnsupportedFormError);
}

TEST_CASE("unit load gives a third of the patch area") {
  MeshPtr m = testing::refine_randomly(uniform_refine(unit_square()), 3, 2);
  auto S = space_of(m);
  Vector F = assemble_rhs(*S, testing::poisson(1.0));
  Vector patch = Vector::Zero(S->n_dofs());
  for (int t = 0; t < m->n_elements(); ++t)
    for (int v : m->element(t)) patch[v] += m->area(t);
  for (int d : S->free_dofs()) CHECK(F[d] == doctest::Approx(patch[d] / 3).epsilon(1e-13));
  CHECK(assemble_rhs(*S, testing::poisson(0.0)).norm() == 0.0);
}

TEST_CASE("degenerate elements are rejected") {
  std::vector<Point> v = {{0, 0}, {1, 0}, {2, 0}};
  Mesh m(v, {{0, 1, 2}}, {{0, 1, 0}, {1, 2, 0}, {2, 0, 0}});
  auto S = std::make_shared<const Space>(std::make_shared<const Mesh>(m), 1);
  CHECK_THROWS_AS(assemble_a(*S, testing::poisson()), AssemblyError);
}

TEST_CASE("Kellogg Galerkin solution keeps the nodal boundary data") {
  Benchmark bm = kellogg();
  for (int p : {1, 2}) {
    auto S = space_of(testing::refine_randomly(bm.mesh, 2, 8), p);
    DiscreteFunction u = solve_galerkin_exact(S, bm.problem);
    for (int d : S->dirichlet_dofs())
      CHECK(u.coeffs[d] == doctest::Approx(bm.problem.dirichlet(S->dof_point(d))).epsilon(1e-14));
  }
}

TEST_CASE("Galerkin orthogonality") {
  for (const char* name : {"kellogg", "lshape-convection"}) {
    Benchmark bm = make_benchmark(name);
    auto S = space_of(testing::refine_randomly(bm.mesh, 3, 5), 2);
    DiscreteFunction u = solve_galerkin_exact(S, bm.problem);
    SparseMatrix B = assemble_b(*S, bm.problem);
    Vector F = assemble_load(*S, bm.problem);
    Vector res = free_part(*S, B * u.coeffs - F);
    CHECK(res.norm() <= 1e-10 * (1 + free_part(*S, F).norm()));
  }
}

TEST_CASE("quasi-linear Galerkin residual") {
  Benchmark bm = zshape_nonlinear();
  auto S = space_of(testing::refine_randomly(bm.mesh, 3, 5));
  DiscreteFunction u = solve_galerkin_exact(S, bm.problem);
  Vector res = free_part(*S, apply_nonlinear(*S, bm.problem, u.coeffs) - assemble_load(*S, bm.problem));
  CHECK(res.norm() <= 1e-9);
}

TEST_CASE("energy error decreases on Kellogg refinement") {
  Benchmark bm = kellogg();
  MeshPtr m = bm.mesh;
  double prev = INFINITY;
  for (int i = 0; i < 3; ++i) {
    m = uniform_refine(m);
    auto S = space_of(m);
    double e = energy_error(solve_galerkin_exact(S, bm.problem), bm.problem);
    CHECK(e <= prev * (1 + 1e-6));
    prev = e;
  }
}

TEST_CASE("Pythagoras on nested spaces") {
  Benchmark bm = kellogg();
  MeshPtr mH = testing::refine_randomly(bm.mesh, 3, 6);
  MeshPtr mh = testing::refine_randomly(mH, 2, 7);
  auto SH = space_of(mH), Sh = space_of(mh);
  DiscreteFunction uH = solve_galerkin_exact(SH, bm.problem);
  DiscreteFunction uh = solve_galerkin_exact(Sh, bm.problem);
  SparseMatrix A = assemble_a(*Sh, bm.problem);
  SparseMatrix P = prolongation_matrix(*SH, *Sh);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    Vector vH = uH.coeffs + testing::random_free(*SH, rng);
    Vector a = uh.coeffs - P * vH, b = uh.coeffs - P * uH.coeffs, c = P * (uH.coeffs - vH);
    double lhs = energy_inner(A, a, a), rhs = energy_inner(A, b, b) + energy_inner(A, c, c);
    CHECK(std::abs(lhs - rhs) <= 1e-9 * lhs);
  }
}

TEST_CASE("prolongation is an exact embedding") {
  Benchmark bm = lshape_convection();
  for (int p : {1, 2, 3}) {
    MeshPtr mH = testing::refine_randomly(bm.mesh, 2, 3);
    MeshPtr mh = testing::refine_randomly(mH, 3, 4);
    auto SH = space_of(mH, p), Sh = space_of(mh, p);
    std::mt19937_64 rng(p);
    DiscreteFunction vH(SH, testing::random_free(*SH, rng));
    DiscreteFunction vh = prolongate(vH, Sh);
    double nH = energy_norm(*SH, bm.problem, vH), nh = energy_norm(*Sh, bm.problem, vh);
    CHECK(std::abs(nH - nh) <= 1e-13 * nH);
    std::uniform_real_distribution<double> U(-1, 1);
    int checked = 0;
    while (checked < 100) {
      Point x(U(rng), U(rng));
      if (x.x() > 0 && x.y() < 0) continue;
      CHECK(std::abs(vH(x) - vh(x)) <= 1e-12);
      ++checked;
    }
    DiscreteFunction one(SH, Vector::Ones(SH->n_dofs()));
    CHECK((prolongate(one, Sh).coeffs.array() - 1.0).abs().maxCoeff() <= 1e-13);
  }
}

TEST_CASE("prolongation needs a descendant mesh") {
  auto S1 = space_of(unit_square());
  auto S2 = space_of(make_benchmark("kellogg").mesh);
  DiscreteFunction v(S1, Vector::Zero(S1->n_dofs()));
  CHECK_THROWS_AS(prolongate(v, S2), ArgumentError);
}

TEST_CASE("energy inner product properties") {
  Benchmark bm = kellogg();
  auto S = space_of(testing::refine_randomly(bm.mesh, 2, 1), 2);
  SparseMatrix A = assemble_a(*S, bm.problem);
  CHECK(energy_norm(A, Vector::Zero(S->n_dofs())) == 0.0);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    Vector v = testing::random_free(*S, rng), w = testing::random_free(*S, rng);
    CHECK(std::abs(energy_inner(A, v, w)) <= energy_norm(A, v) * energy_norm(A, w));
    double lhs = std::pow(energy_norm(A, v + w), 2) + std::pow(energy_norm(A, v - w), 2);
    double rhs = 2 * std::pow(energy_norm(A, v), 2) + 2 * std::pow(energy_norm(A, w), 2);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * rhs);
  }
}

TEST_CASE("quasi-linear operator: monotonicity, boundedness and energy") {
  // the Z-shape operator without its reaction term is the plain quasi-linear
  // model, for which alpha and L are stated
  ProblemDef prob = zshape_nonlinear().problem;
  prob.reaction = nullptr;
  const double alpha = prob.nonlinearity->alpha, L = prob.nonlinearity->lipschitz;
  MeshPtr mH = testing::refine_randomly(zshape_nonlinear().mesh, 3, 2);
  auto S = space_of(mH);
  SparseMatrix A = assemble_a(*S, prob);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    const double scale = std::pow(10.0, i % 4 - 1);
    Vector u = testing::random_free(*S, rng, scale), v = testing::random_free(*S, rng, scale);
    Vector d = u - v;
    double pairing = (apply_nonlinear(*S, prob, u) - apply_nonlinear(*S, prob, v)).dot(d);
    double n2 = energy_inner(A, d, d);
    CHECK(pairing >= alpha * n2 * (1 - 1e-9));
    CHECK(pairing <= L * n2 * (1 + 1e-9));
  }

  DiscreteFunction uH = solve_galerkin_exact(S, prob);
  const double EH = nonlinear_energy(*S, prob, uH.coeffs);
  for (int i = 0; i < 5; ++i) {
    Vector w = uH.coeffs + testing::random_free(*S, rng, 0.1);
    double gap = nonlinear_energy(*S, prob, w) - EH;
    double n2 = std::pow(energy_norm(A, w - uH.coeffs), 2);
    CHECK(gap >= alpha / 2 * n2 * (1 - 1e-6));
    CHECK(gap <= L / 2 * n2 * (1 + 1e-6));
  }
  auto Sh = space_of(testing::refine_randomly(mH, 2, 3));
  DiscreteFunction uh = solve_galerkin_exact(Sh, prob);
  CHECK(nonlinear_energy(*Sh, prob, uh.coeffs) <= EH + 1e-12);
}
