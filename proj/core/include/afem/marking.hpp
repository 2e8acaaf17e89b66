#pragma once

#include "afem/estimator.hpp"

#include <vector>

namespace afem {

struct MarkResult {
  std::vector<int> marked;  // ascending by indicator rank (largest first)
  bool converged = false;   // total indicator is zero; nothing to mark
};

/// Dörfler marking with minimal cardinality: the shortest prefix of the
/// indicators sorted by (value descending, index ascending) whose sum reaches
/// theta * total. Throws ArgumentError unless 0 < theta <= 1.
MarkResult doerfler_mark(const std::vector<double>& per_element, double theta);
MarkResult doerfler_mark(const Indicators& ind, double theta);

}  // namespace afem
