#pragma once

#include "afem/fem.hpp"
#include "afem/mesh.hpp"

#include <random>
#include <vector>

namespace testing {

using namespace afem;

// Unit square split along the diagonal (0,0)-(1,1).
inline MeshPtr unit_square() {
  std::vector<Point> v = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  std::vector<Mesh::Element> t = {{0, 1, 2}, {0, 2, 3}};
  std::vector<BoundaryEdge> b = {{0, 1, 0}, {1, 2, 0}, {2, 3, 0}, {3, 0, 0}};
  return Mesh::make_initial(v, t, b);
}

inline ProblemDef poisson(double f = 1.0) {
  ProblemDef p;
  p.name = "poisson";
  if (f != 0.0) p.load = [f](const Point&) { return f; };
  return p;
}

inline MeshPtr refine_randomly(MeshPtr m, int steps, std::uint64_t seed, double fraction = 0.2) {
  std::mt19937_64 rng(seed);
  for (int s = 0; s < steps; ++s) {
    std::vector<int> marked;
    std::bernoulli_distribution pick(fraction);
    for (int t = 0; t < m->n_elements(); ++t)
      if (pick(rng)) marked.push_back(t);
    if (marked.empty()) marked.push_back(0);
    m = refine(m, marked);
  }
  return m;
}

inline Vector random_free(const Space& s, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> N(0.0, scale);
  Vector v = Vector::Zero(s.n_dofs());
  for (int d : s.free_dofs()) v[d] = N(rng);
  return v;
}

}  // namespace testing
