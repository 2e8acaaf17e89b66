#include "afem/quadrature.hpp"

#include "afem/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace afem {

LineRule gauss_legendre(int n) {
  if (n < 1) throw ArgumentError("gauss_legendre: need at least one point");
  static std::mutex mtx;
  static std::map<int, LineRule> cache;
  std::lock_guard lock(mtx);
  if (auto it = cache.find(n); it != cache.end()) return it->second;

  LineRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[n - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  cache.emplace(n, rule);
  return rule;
}

LineRule line_rule(int order) {
  return gauss_legendre(std::max(1, (order + 2) / 2));
}

TriangleRule triangle_rule(int order) {
  if (order < 0) throw ArgumentError("triangle_rule: negative order");
  static std::mutex mtx;
  static std::map<int, TriangleRule> cache;
  {
    std::lock_guard lock(mtx);
    if (auto it = cache.find(order); it != cache.end()) return it->second;
  }
  // the Jacobian (1 - u) raises the degree in u by one
  const int n = (order + 3) / 2;
  LineRule g = gauss_legendre(n);
  TriangleRule rule;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double u = g.points[i], v = g.points[j];
      double x = u, y = v * (1.0 - u);
      rule.bary.emplace_back(1.0 - x - y, x, y);
      rule.weights.push_back(2.0 * g.weights[i] * g.weights[j] * (1.0 - u));
    }
  }
  std::lock_guard lock(mtx);
  cache.emplace(order, rule);
  return rule;
}

}  // namespace afem
