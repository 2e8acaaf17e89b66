#pragma once

#include "afem/fem.hpp"

#include <string>
#include <vector>

namespace afem {

struct Benchmark {
  ProblemDef problem;
  MeshPtr mesh;
};

/// Interface problem on (-1, 1)^2 with piecewise constant coefficient and
/// singular exact solution r^0.1 mu(phi). 16 initial triangles.
Benchmark kellogg();

/// -Laplace u + x . grad u + u = 1 on the L-shaped domain, u = 0 on the
/// boundary. 12 initial triangles.
Benchmark lshape_convection();

/// -div(a(|grad u|^2) grad u) + u = 1 on the Z-shaped domain with
/// a(t) = 1 + log(1 + t) / (1 + t), u = 0 on the boundary. 13 initial triangles.
Benchmark zshape_nonlinear();

/// "kellogg", "lshape-convection" or "zshape-nonlinear".
Benchmark make_benchmark(const std::string& name);
const std::vector<std::string>& benchmark_names();

namespace kellogg_data {
constexpr double R = 161.4476387975881;
constexpr double alpha = 0.1;
constexpr double beta = -14.92256510455152;
constexpr double delta = 0.7853981633974483;  // pi / 4
/// Angular factor and its derivative, phi in [0, 2 pi).
double mu(double phi);
double mu_prime(double phi);
}  // namespace kellogg_data

namespace zshape_data {
constexpr double alpha = 0.9582898017;
constexpr double lipschitz = 1.542343818;
}  // namespace zshape_data

}  // namespace afem
