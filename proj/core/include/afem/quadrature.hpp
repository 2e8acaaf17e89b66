#pragma once

#include <Eigen/Core>

#include <vector>

namespace afem {

/// Quadrature rule on [0, 1]; weights sum to 1.
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
};

/// Quadrature rule on the reference triangle (0,0), (1,0), (0,1) in
/// barycentric form. Weights sum to 1, so `|T| * sum w_i f(x_i)` integrates
/// over a physical triangle T.
struct TriangleRule {
  std::vector<Eigen::Vector3d> bary;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule mapped to [0, 1] (exact to degree 2n-1).
LineRule gauss_legendre(int n);

/// Gauss rule on [0, 1] exact for polynomials of the given degree.
LineRule line_rule(int order);

/// Conical-product (collapsed Gauss) rule exact for polynomials of the
/// given total degree.
TriangleRule triangle_rule(int order);

}  // namespace afem
