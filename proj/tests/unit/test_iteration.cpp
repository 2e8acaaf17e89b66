#include "doctest.h"
#include "helpers.hpp"

#include "afem/errors.hpp"
#include "afem/iteration.hpp"
#include "afem/problems.hpp"

#include <cmath>

using namespace afem;

TEST_CASE("Zarantonello contraction bound") {
  CHECK(zarantonello_contraction_bound(1.0, 1.0, 1.0) == doctest::Approx(0.0));
  const double a = zshape_data::alpha, L = zshape_data::lipschitz;
  CHECK(zarantonello_contraction_bound(a, L, 1.0 / L) == doctest::Approx(0.870).epsilon(0.001 / 0.870));
  double prev = 0.0;
  for (double d : {0.5, 0.1, 1e-2, 1e-4, 1e-8}) {
    double q = zarantonello_contraction_bound(a, L, d);
    CHECK(q > prev);
    CHECK(q < 1.0);
    prev = q;
  }
  CHECK(prev > 1.0 - 1e-7);
  CHECK_THROWS_AS(zarantonello_contraction_bound(a, L, 0.0), ArgumentError);
  CHECK_THROWS_AS(zarantonello_contraction_bound(a, L, 2 * a / (L * L)), ArgumentError);
}

TEST_CASE("stopping predicates") {
  ZarantonelloConfig cfg{0.5, 0.2, 0.5};
  CHECK(inner_stop(0.0, 0.0, 0.0, cfg));
  CHECK_FALSE(inner_stop(1.0, 0.0, 0.0, ZarantonelloConfig{0.5, 1e12, 1e12}));
  CHECK_FALSE(inner_stop(0.1, 0.4, 0.1, cfg));  // 0.1 > 0.5 (0.08 + 0.1)
  CHECK(inner_stop(0.09, 0.4, 0.1, cfg));
  CHECK(outer_stop(0.0, 1.0, 0.1));
  CHECK_FALSE(outer_stop(1e-3, 0.0, 0.1));
  CHECK(outer_stop(0.05, 0.6, 0.1));
}

TEST_CASE("lambda constraint arithmetic") {
  const double qth = q_theta(0.5);
  auto r0 = check_lambda_constraint(ZarantonelloConfig{0.5, 5.0, 0.0}, 0.8, 0.5, qth);
  CHECK(r0.q_sym == doctest::Approx(0.8));
  CHECK(r0.ok);
  auto r1 = check_lambda_constraint(ZarantonelloConfig{0.5, 0.1, 0.05}, 0.8, 0.5, qth);
  CHECK(r1.q_sym == doctest::Approx(1.0));
  CHECK_FALSE(r1.ok);
  auto r2 = check_lambda_constraint(ZarantonelloConfig{0.5, 0.01, 0.05}, 0.5, 0.5, qth);
  CHECK(r2.q_sym == doctest::Approx(0.6 / 0.9));
}

TEST_CASE("q_theta") {
  CHECK(q_theta(1.0) == doctest::Approx(std::sqrt(std::sqrt(0.5))));
  CHECK(q_theta(0.5) == doctest::Approx(std::sqrt(1 - 0.5 * (1 - std::sqrt(0.5)))));
}

TEST_CASE("Zarantonello map: fixed point, zero damping, symmetric one-step solve") {
  std::mt19937_64 rng(3);
  for (const char* name : {"lshape-convection", "zshape-nonlinear"}) {
    Benchmark bm = make_benchmark(name);
    auto S = std::make_shared<const Space>(testing::refine_randomly(bm.mesh, 3, 1), 1);
    DiscreteFunction us = solve_galerkin_exact(S, bm.problem);
    Vector phi = zarantonello_step(*S, bm.problem, 0.5, us.coeffs);
    CHECK((phi - us.coeffs).norm() <= 1e-10 * us.coeffs.norm());
    Vector u = testing::random_free(*S, rng);
    CHECK((zarantonello_step(*S, bm.problem, 0.0, u) - u).norm() <= 1e-12 * u.norm());
  }
  Benchmark k = kellogg();
  auto S = std::make_shared<const Space>(testing::refine_randomly(k.mesh, 3, 2), 1);
  DiscreteFunction us = solve_galerkin_exact(S, k.problem);
  Vector u = us.coeffs + testing::random_free(*S, rng);
  CHECK((zarantonello_step(*S, k.problem, 1.0, u) - us.coeffs).norm() <= 1e-10 * us.coeffs.norm());
}

TEST_CASE("Zarantonello rhs agrees with the convenience overload") {
  Benchmark bm = lshape_convection();
  auto S = std::make_shared<const Space>(testing::refine_randomly(bm.mesh, 2, 4), 2);
  std::mt19937_64 rng(8);
  DiscreteFunction u(S, testing::random_free(*S, rng));
  SparseMatrix A = assemble_a(*S, bm.problem), B = assemble_b(*S, bm.problem);
  Vector F = assemble_load(*S, bm.problem);
  Vector r1 = zarantonello_rhs(*S, bm.problem, 0.5, u.coeffs, A, F, &B);
  Vector r2 = zarantonello_rhs(*S, bm.problem, 0.5, u);
  CHECK((r1 - r2).norm() <= 1e-13 * r1.norm());
}

TEST_CASE("exact Zarantonello contraction on random starts") {
  std::mt19937_64 rng(17);
  for (const char* name : {"lshape-convection", "zshape-nonlinear"}) {
    Benchmark bm = make_benchmark(name);
    auto mono = bm.problem.monotonicity();
    REQUIRE(mono.has_value());
    const double delta = bm.problem.is_nonlinear() ? 1.0 / mono->lipschitz : 0.5;
    const double q = zarantonello_contraction_bound(mono->alpha, mono->lipschitz, delta);
    auto S = std::make_shared<const Space>(testing::refine_randomly(bm.mesh, 4, 5), 1);
    DiscreteFunction us = solve_galerkin_exact(S, bm.problem);
    SparseMatrix A = assemble_a(*S, bm.problem);
    for (int t = 0; t < 20; ++t) {
      Vector u = testing::random_free(*S, rng, std::pow(10.0, t % 4 - 2));
      Vector phi = zarantonello_step(*S, bm.problem, delta, u);
      CHECK(energy_norm(A, us.coeffs - phi) <= q * (1 + 1e-6) * energy_norm(A, us.coeffs - u));
    }
  }
}
