#include "afem/lagrange.hpp"

#include "afem/errors.hpp"
#include "afem/quadrature.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace afem {

LagrangeBasis::LagrangeBasis(int p) : p_(p) {
  if (p < 1) throw ArgumentError("LagrangeBasis: degree must be >= 1");
  index_.push_back({p, 0, 0});
  index_.push_back({0, p, 0});
  index_.push_back({0, 0, p});
  for (int e = 0; e < 3; ++e) {
    int a = (e + 1) % 3, b = (e + 2) % 3;
    for (int t = 1; t < p; ++t) {
      std::array<int, 3> m{0, 0, 0};
      m[a] = p - t;
      m[b] = t;
      index_.push_back(m);
    }
  }
  for (int i = 1; i < p; ++i)
    for (int j = 1; i + j < p; ++j) index_.push_back({i, j, p - i - j});
}

Eigen::Vector3d LagrangeBasis::node(int n) const {
  const auto& m = index_[n];
  return Eigen::Vector3d(m[0], m[1], m[2]) / p_;
}

void LagrangeBasis::factor(int i, double t, double& v, double& d, double& dd) const {
  v = 1.0;
  d = 0.0;
  dd = 0.0;
  for (int m = 0; m < i; ++m) {
    double c = 1.0 / (m + 1);
    double f = (p_ * t - m) * c, fd = p_ * c;
    dd = dd * f + 2.0 * d * fd;
    d = d * f + v * fd;
    v = v * f;
  }
}

void LagrangeBasis::eval(const Eigen::Vector3d& l, double* val) const {
  for (int n = 0; n < size(); ++n) {
    double r = 1.0, d, dd;
    for (int a = 0; a < 3; ++a) {
      double v;
      factor(index_[n][a], l[a], v, d, dd);
      r *= v;
    }
    val[n] = r;
  }
}

void LagrangeBasis::eval_d1(const Eigen::Vector3d& l, double* val, double* d1) const {
  for (int n = 0; n < size(); ++n) {
    double v[3], d[3], dd;
    for (int a = 0; a < 3; ++a) factor(index_[n][a], l[a], v[a], d[a], dd);
    val[n] = v[0] * v[1] * v[2];
    d1[3 * n + 0] = d[0] * v[1] * v[2];
    d1[3 * n + 1] = v[0] * d[1] * v[2];
    d1[3 * n + 2] = v[0] * v[1] * d[2];
  }
}

void LagrangeBasis::eval_d2(const Eigen::Vector3d& l, double* d2) const {
  for (int n = 0; n < size(); ++n) {
    double v[3], d[3], dd[3];
    for (int a = 0; a < 3; ++a) factor(index_[n][a], l[a], v[a], d[a], dd[a]);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        double r = 1.0;
        for (int c = 0; c < 3; ++c) {
          if (a == b && c == a) r *= dd[c];
          else if (c == a || c == b) r *= d[c];
          else r *= v[c];
        }
        d2[9 * n + 3 * a + b] = r;
      }
    }
  }
}

namespace {

Tabulation build(int p, const std::vector<Eigen::Vector3d>& bary,
                 const std::vector<double>& weights) {
  const LagrangeBasis& B = lagrange_basis(p);
  Tabulation tab;
  tab.n_basis = B.size();
  tab.n_points = static_cast<int>(bary.size());
  tab.bary = bary;
  tab.weights = weights;
  const int nb = tab.n_basis, nq = tab.n_points;
  tab.val.resize(nq * nb);
  tab.d1.resize(nq * nb * 3);
  tab.d2.resize(nq * nb * 9);
  for (int q = 0; q < nq; ++q) {
    B.eval_d1(bary[q], &tab.val[q * nb], &tab.d1[q * nb * 3]);
    B.eval_d2(bary[q], &tab.d2[q * nb * 9]);
  }
  return tab;
}

std::mutex cache_mutex;

}  // namespace

const LagrangeBasis& lagrange_basis(int p) {
  static std::map<int, std::unique_ptr<LagrangeBasis>> cache;
  static std::mutex mtx;
  std::lock_guard lock(mtx);
  auto& slot = cache[p];
  if (!slot) slot = std::make_unique<LagrangeBasis>(p);
  return *slot;
}

const Tabulation& tabulate(int p, int order) {
  static std::map<std::pair<int, int>, std::unique_ptr<Tabulation>> cache;
  {
    std::lock_guard lock(cache_mutex);
    auto it = cache.find({p, order});
    if (it != cache.end()) return *it->second;
  }
  TriangleRule rule = triangle_rule(order);
  auto tab = std::make_unique<Tabulation>(build(p, rule.bary, rule.weights));
  std::lock_guard lock(cache_mutex);
  auto& slot = cache[{p, order}];
  if (!slot) slot = std::move(tab);
  return *slot;
}

const Tabulation& tabulate_edge(int p, int order, int local_edge) {
  static std::map<std::tuple<int, int, int>, std::unique_ptr<Tabulation>> cache;
  {
    std::lock_guard lock(cache_mutex);
    auto it = cache.find({p, order, local_edge});
    if (it != cache.end()) return *it->second;
  }
  LineRule rule = line_rule(order);
  std::vector<Eigen::Vector3d> bary;
  const int a = (local_edge + 1) % 3, b = (local_edge + 2) % 3;
  for (double s : rule.points) {
    Eigen::Vector3d l = Eigen::Vector3d::Zero();
    l[a] = 1.0 - s;
    l[b] = s;
    bary.push_back(l);
  }
  auto tab = std::make_unique<Tabulation>(build(p, bary, rule.weights));
  std::lock_guard lock(cache_mutex);
  auto& slot = cache[{p, order, local_edge}];
  if (!slot) slot = std::move(tab);
  return *slot;
}

}  // namespace afem
