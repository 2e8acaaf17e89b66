#pragma once

#include "afem/fem.hpp"

#include <optional>
#include <span>
#include <vector>

namespace afem {

/// Squared refinement indicators eta_H(T, v_H)^2, one per element.
struct Indicators {
  std::vector<double> per_element;
  double total2 = 0.0;
};

struct EstimatorOptions {
  /// Exponent of |T| in front of the jump term (1/d = 0.5 for d = 2).
  /// Exposed only for mutation testing.
  double jump_weight_exponent = 0.5;
  /// Include the boundary-data oscillation when u_D is present.
  bool boundary_oscillation = true;
};

/// Residual indicators: volume residual, normal-flux jumps (each interior
/// edge computed once and added to both neighbours) and, for inhomogeneous
/// Dirichlet data, the oscillation of the tangential derivative of u_D.
Indicators compute_indicators(const DiscreteFunction& v, const ProblemDef& prob,
                              const EstimatorOptions& opt = {});

/// sqrt of the indicator sum over `subset` (all elements when omitted).
double estimator_total(const Indicators& ind,
                       std::optional<std::span<const int>> subset = std::nullopt);

}  // namespace afem
