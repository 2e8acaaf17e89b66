#include "doctest.h"
#include "helpers.hpp"

#include "afem/errors.hpp"
#include "afem/problems.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

using namespace afem;
using testing::unit_square;

TEST_CASE("initial square picks the diagonal as reference edge") {
  MeshPtr m = unit_square();
  REQUIRE(m->n_elements() == 2);
  for (int t = 0; t < 2; ++t) {
    const auto& e = m->element(t);
    std::array<int, 2> ref = {std::min(e[0], e[1]), std::max(e[0], e[1])};
    CHECK(ref == std::array<int, 2>{0, 2});
    CHECK(m->signed_area(t) == doctest::Approx(0.5));
  }
  CHECK(check_conforming(*m));
}

TEST_CASE("refining both square triangles gives four without closure") {
  MeshPtr m = unit_square();
  MeshPtr r = refine(m, std::vector<int>{0, 1});
  CHECK(r->n_elements() == 4);
  CHECK(r->n_vertices() == 5);
  CHECK(check_conforming(*r));
  for (int g : r->generation()) CHECK(g == 1);
}

TEST_CASE("refining one square triangle forces its neighbour") {
  MeshPtr r = refine(unit_square(), std::vector<int>{0});
  CHECK(r->n_elements() == 4);
  CHECK(check_conforming(*r));
}

TEST_CASE("empty marking is a no-op") {
  MeshPtr m = make_benchmark("kellogg").mesh;
  MeshPtr r = refine(m, std::vector<int>{});
  CHECK(r->same_geometry(*m));
}

TEST_CASE("out of range marks are rejected") {
  MeshPtr m = unit_square();
  CHECK_THROWS_AS(refine(m, std::vector<int>{2}), ArgumentError);
  CHECK_THROWS_AS(refine(m, std::vector<int>{-1}), ArgumentError);
}

TEST_CASE("uniform refinement of the square") {
  MeshPtr m = unit_square();
  MeshPtr u = uniform_refine(m);
  CHECK(u->n_elements() == 8);
  CHECK(check_conforming(*u));
  for (int g : u->generation()) CHECK(g == 2);
  MeshPtr k = make_benchmark("kellogg").mesh;
  for (int i = 0; i < 3; ++i) {
    MeshPtr next = uniform_refine(k);
    double growth = double(next->n_elements()) / k->n_elements();
    CHECK(growth >= 2.0);
    CHECK(growth <= 4.0);
    k = next;
  }
}

TEST_CASE("check_conforming detects a hanging vertex") {
  std::vector<Point> v = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
  std::vector<Mesh::Element> t = {{0, 1, 3}, {1, 2, 4}, {2, 3, 4}};
  std::vector<BoundaryEdge> b = {{0, 1, 0}, {1, 2, 0}, {2, 3, 0}, {3, 0, 0}};
  Mesh m(v, t, b);
  std::string why;
  CHECK_FALSE(check_conforming(m, &why));
  CHECK_FALSE(why.empty());
}

TEST_CASE("check_conforming detects negative orientation") {
  std::vector<Point> v = {{0, 0}, {1, 0}, {0, 1}};
  std::vector<Mesh::Element> t = {{0, 2, 1}};
  std::vector<BoundaryEdge> b = {{0, 1, 0}, {1, 2, 0}, {2, 0, 0}};
  Mesh m(v, t, b);
  CHECK_FALSE(check_conforming(m));
}

TEST_CASE("random refinements stay conforming, nested and shape regular") {
  for (const auto& name : benchmark_names()) {
    MeshPtr m0 = make_benchmark(name).mesh;
    const double angle0 = m0->min_angle();
    MeshPtr m = m0;
    for (int s = 0; s < 12; ++s) {
      MeshPtr r = testing::refine_randomly(m, 1, 100 * s + 7, 0.3);
      REQUIRE(check_conforming(*r));
      std::vector<int> anc = r->ancestor_map(*m);
      // each child lies inside its ancestor: centroid test
      for (int t = 0; t < r->n_elements(); ++t) {
        Eigen::Vector3d l;
        const auto& e = m->element(anc[t]);
        Point c = r->centroid(t);
        Eigen::Matrix2d J;
        J.col(0) = m->vertex(e[1]) - m->vertex(e[0]);
        J.col(1) = m->vertex(e[2]) - m->vertex(e[0]);
        Eigen::Vector2d xi = J.inverse() * (c - m->vertex(e[0]));
        CHECK(xi.minCoeff() >= -1e-12);
        CHECK(xi.sum() <= 1 + 1e-12);
      }
      m = r;
    }
    CHECK(m->is_descendant_of(*m0));
    // NVB on a 2D mesh halves the minimal angle at most twice over
    CHECK(m->min_angle() >= angle0 / 4);
  }
}

TEST_CASE("refinement is monotone in the marked set") {
  MeshPtr m = testing::refine_randomly(make_benchmark("lshape-convection").mesh, 4, 3);
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> A, B;
    std::bernoulli_distribution pa(0.3), pb(0.5);
    for (int t = 0; t < m->n_elements(); ++t)
      if (pa(rng)) {
        A.push_back(t);
        if (pb(rng)) B.push_back(t);
      }
    CHECK(refine(m, A)->n_elements() >= refine(m, B)->n_elements());
  }
}

TEST_CASE("every marked element is bisected") {
  MeshPtr m = testing::refine_randomly(make_benchmark("zshape-nonlinear").mesh, 3, 5);
  std::vector<int> marked = {0, m->n_elements() / 2, m->n_elements() - 1};
  MeshPtr r = refine(m, marked);
  std::vector<int> anc = r->ancestor_map(*m);
  for (int t : marked) CHECK(std::count(anc.begin(), anc.end(), t) >= 2);
}

TEST_CASE("mesh dump round trip") {
  MeshPtr m = testing::refine_randomly(make_benchmark("kellogg").mesh, 3, 9);
  std::stringstream ss;
  m->write(ss);
  CHECK(ss.str().rfind("afem-mesh v1", 0) == 0);
  MeshPtr back = Mesh::read(ss);
  CHECK(back->same_geometry(*m));
  CHECK(back->generation() == m->generation());
  CHECK(check_conforming(*back));
}
