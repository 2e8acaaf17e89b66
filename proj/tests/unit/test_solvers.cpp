#include "doctest.h"
#include "helpers.hpp"

#include "afem/errors.hpp"
#include "afem/marking.hpp"
#include "afem/problems.hpp"
#include "afem/solvers.hpp"

#include <cmath>

using namespace afem;

namespace {

// Adaptive Kellogg hierarchy of `levels` meshes with exact solves.
SolverState kellogg_hierarchy(int levels, const MultigridOptions& mg = {}) {
  Benchmark bm = kellogg();
  SolverState st(SolverKind::local_multigrid, mg);
  MeshPtr m = bm.mesh;
  for (int l = 0; l < levels; ++l) {
    auto S = std::make_shared<const Space>(m, 1);
    st.add_level(S, free_block(*S, assemble_a(*S, bm.problem)));
    if (l + 1 == levels) break;
    DiscreteFunction u = solve_galerkin_exact(S, bm.problem);
    m = refine(m, doerfler_mark(compute_indicators(u, bm.problem), 0.5).marked);
  }
  return st;
}

Vector random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = N(rng);
  return v;
}

}  // namespace

TEST_CASE("solver kinds parse") {
  CHECK(parse_solver_kind("direct") == SolverKind::direct);
  CHECK(parse_solver_kind("local-mg") == SolverKind::local_multigrid);
  CHECK(parse_solver_kind("richardson") == SolverKind::damped_richardson);
  CHECK_THROWS_AS(parse_solver_kind("gmres"), ArgumentError);
}

TEST_CASE("solve_direct small systems") {
  SparseMatrix I(3, 3);
  I.setIdentity();
  Vector b(3);
  b << 1, -2, 3;
  CHECK((solve_direct(I, b) - b).norm() == 0.0);
  SparseMatrix two(1, 1);
  two.insert(0, 0) = 2.0;
  CHECK(solve_direct(two, Vector::Constant(1, 4.0))[0] == doctest::Approx(2.0));
  SparseMatrix zero(2, 2);
  zero.insert(0, 0) = 1.0;
  CHECK_THROWS_AS(solve_direct(zero, Vector::Ones(2)), SolverError);
}

TEST_CASE("direct kind certifies to zero") {
  SolverState st(SolverKind::direct);
  auto S = std::make_shared<const Space>(kellogg().mesh, 1);
  st.add_level(S, free_block(*S, assemble_a(*S, kellogg().problem)));
  CHECK(certify_contraction(st, 3) == 0.0);
}

TEST_CASE("Richardson is exact on a single interior dof") {
  auto S = std::make_shared<const Space>(uniform_refine(testing::unit_square()), 1);
  REQUIRE(S->n_free() == 1);
  SolverState st(SolverKind::damped_richardson);
  st.add_level(S, free_block(*S, assemble_a(*S, testing::poisson())));
  CHECK(st.omega() == doctest::Approx(1.0));
  Vector b = Vector::Constant(1, 0.7), x = Vector::Constant(1, -3.0);
  CHECK(st.step(b, x)[0] == doctest::Approx(0.7 / 4.0));
  CHECK(certify_contraction(st, 2) <= 1e-14);
}

TEST_CASE("local multigrid contracts on an adaptive Kellogg hierarchy") {
  for (int cg : {0, 2}) {
    MultigridOptions mg;
    mg.cg_steps = cg;
    SolverState st = kellogg_hierarchy(8, mg);
    const SparseMatrix& A = st.matrix();
    const int n = static_cast<int>(A.rows());
    const double q = certify_contraction(st, 3);
    CHECK(q > 0.0);
    CHECK(q < 1.0);

    std::mt19937_64 rng(cg + 1);
    for (int trial = 0; trial < 50; ++trial) {
      Vector b = random_vector(n, rng), x = random_vector(n, rng);
      Vector xs = st.solve_direct(b);
      double e0 = energy_norm(A, xs - x);
      Vector x1 = st.step(b, x);
      double e1 = energy_norm(A, xs - x1);
      double e2 = energy_norm(A, xs - st.step(b, x1));
      CHECK(e1 <= q * e0);
      CHECK(e2 <= q * q * e0);
    }
    Vector b = random_vector(n, rng);
    Vector xs = st.solve_direct(b);
    CHECK((st.step(b, xs) - xs).norm() <= 1e-13 * xs.norm());

    Vector x = Vector::Zero(n);
    for (int it = 0; it < 200; ++it) x = st.step(b, x);
    CHECK((x - xs).norm() <= 1e-8 * xs.norm());
  }
}

TEST_CASE("bare V-cycle step is affine") {
  MultigridOptions mg;
  mg.cg_steps = 0;
  SolverState st = kellogg_hierarchy(6, mg);
  const int n = static_cast<int>(st.matrix().rows());
  std::mt19937_64 rng(9);
  Vector b1 = random_vector(n, rng), b2 = random_vector(n, rng);
  Vector x1 = random_vector(n, rng), x2 = random_vector(n, rng);
  const double s = 0.3;
  Vector lhs = st.step(s * b1 + (1 - s) * b2, s * x1 + (1 - s) * x2);
  Vector rhs = s * st.step(b1, x1) + (1 - s) * st.step(b2, x2);
  CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
}

TEST_CASE("smoothing sets stay local") {
  SolverState st = kellogg_hierarchy(10);
  for (int l = 1; l < st.n_levels(); ++l) {
    CHECK_FALSE(st.smoothing_set(l).empty());
  }
  const int last = st.n_levels() - 1;
  CHECK(static_cast<int>(st.smoothing_set(last).size()) < st.matrix().rows());
}

TEST_CASE("invalid multigrid options are rejected") {
  MultigridOptions mg;
  mg.sweeps = 0;
  CHECK_THROWS_AS(SolverState(SolverKind::local_multigrid, mg), ArgumentError);
  mg.sweeps = 1;
  mg.cg_steps = -1;
  CHECK_THROWS_AS(SolverState(SolverKind::local_multigrid, mg), ArgumentError);
}

TEST_CASE("mismatched vector lengths are rejected") {
  SolverState st = kellogg_hierarchy(2);
  CHECK_THROWS_AS(st.step(Vector::Zero(1), Vector::Zero(1)), ArgumentError);
}
