#include "afem/marking.hpp"

#include "afem/errors.hpp"

#include <algorithm>
#include <numeric>

namespace afem {

MarkResult doerfler_mark(const std::vector<double>& per_element, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw ArgumentError("doerfler_mark: theta must lie in (0, 1]");
  MarkResult res;
  double total = 0.0;
  for (double v : per_element) {
    if (v < 0.0) throw ArgumentError("doerfler_mark: negative indicator");
    total += v;
  }
  if (total <= 0.0) {
    res.converged = true;
    return res;
  }
  std::vector<int> order(per_element.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (per_element[a] != per_element[b]) return per_element[a] > per_element[b];
    return a < b;
  });
  if (theta == 1.0) {
    // every nonzero contribution is needed; avoids rounding in the prefix sum
    for (int t : order)
      if (per_element[t] > 0.0) res.marked.push_back(t);
    return res;
  }
  const double goal = theta * total;
  double acc = 0.0;
  for (int t : order) {
    res.marked.push_back(t);
    acc += per_element[t];
    if (acc >= goal) break;
  }
  return res;
}

MarkResult doerfler_mark(const Indicators& ind, double theta) {
  return doerfler_mark(ind.per_element, theta);
}

}  // namespace afem
