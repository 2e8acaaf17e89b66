#include "afem/problems.hpp"

#include "afem/errors.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <utility>

namespace afem {

namespace {

constexpr double kPi = std::numbers::pi;

// Unit squares split at their centres, plus extra triangles. Boundary edges
// are the edges with a single adjacent triangle.
class MeshBuilder {
 public:
  int vertex(double x, double y) {
    auto key = std::make_pair(std::lround(x * 1e6), std::lround(y * 1e6));
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(verts_.size());
    verts_.emplace_back(x, y);
    index_.emplace(key, id);
    return id;
  }
  void square(double x0, double y0) {
    int a = vertex(x0, y0), b = vertex(x0 + 1, y0), c = vertex(x0 + 1, y0 + 1),
        d = vertex(x0, y0 + 1), m = vertex(x0 + 0.5, y0 + 0.5);
    tris_.push_back({a, b, m});
    tris_.push_back({b, c, m});
    tris_.push_back({c, d, m});
    tris_.push_back({d, a, m});
  }
  void triangle(Point p, Point q, Point r) {
    tris_.push_back({vertex(p.x(), p.y()), vertex(q.x(), q.y()), vertex(r.x(), r.y())});
  }
  MeshPtr build() {
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : tris_)
      for (int i = 0; i < 3; ++i) {
        int a = t[i], b = t[(i + 1) % 3];
        ++count[{std::min(a, b), std::max(a, b)}];
      }
    std::vector<BoundaryEdge> bnd;
    for (const auto& [e, n] : count)
      if (n == 1) bnd.push_back({e.first, e.second, 0});
    return Mesh::make_initial(verts_, tris_, bnd);
  }

 private:
  std::vector<Point> verts_;
  std::vector<Mesh::Element> tris_;
  std::map<std::pair<long, long>, int> index_;
};

double polar_angle(const Point& x) {
  double phi = std::atan2(x.y(), x.x());
  if (phi < 0.0) phi += 2.0 * kPi;
  return phi;
}

}  // namespace

namespace kellogg_data {

namespace {
// mu(phi) = c cos((phi - s) alpha) on each quarter
void branch(double phi, double& c, double& s) {
  if (phi < kPi / 2) {
    c = std::cos((kPi / 2 - beta) * alpha);
    s = kPi / 2 - delta;
  } else if (phi < kPi) {
    c = std::cos(delta * alpha);
    s = kPi - beta;
  } else if (phi < 3 * kPi / 2) {
    c = std::cos(beta * alpha);
    s = kPi + delta;
  } else {
    c = std::cos((kPi / 2 - delta) * alpha);
    s = 3 * kPi / 2 + beta;
  }
}
}  // namespace

double mu(double phi) {
  double c, s;
  branch(phi, c, s);
  return c * std::cos((phi - s) * alpha);
}

double mu_prime(double phi) {
  double c, s;
  branch(phi, c, s);
  return -alpha * c * std::sin((phi - s) * alpha);
}

}  // namespace kellogg_data

Benchmark kellogg() {
  using namespace kellogg_data;
  MeshBuilder mb;
  mb.square(-1, -1);
  mb.square(0, -1);
  mb.square(-1, 0);
  mb.square(0, 0);

  ProblemDef p;
  p.name = "kellogg";
  p.diffusion = [](const Point& x) -> Matrix2 {
    return (x.x() * x.y() > 0.0 ? R : 1.0) * Matrix2::Identity();
  };
  p.diffusion_elementwise_constant = true;
  auto value = [](const Point& x) {
    double r = x.norm();
    if (r == 0.0) return 0.0;
    return std::pow(r, alpha) * mu(polar_angle(x));
  };
  auto gradient = [](const Point& x) -> Point {
    double r = x.norm();
    if (r == 0.0) return Point(std::nan(""), std::nan(""));
    double phi = polar_angle(x);
    double ra = std::pow(r, alpha - 1.0);
    Point er = x / r, ephi(-er.y(), er.x());
    return ra * (alpha * mu(phi) * er + mu_prime(phi) * ephi);
  };
  p.dirichlet = value;
  p.dirichlet_gradient = gradient;
  p.exact = ExactSolution{value, gradient};
  return {std::move(p), mb.build()};
}

Benchmark lshape_convection() {
  MeshBuilder mb;
  mb.square(-1, 0);
  mb.square(0, 0);
  mb.square(-1, -1);

  ProblemDef p;
  p.name = "lshape-convection";
  p.convection = [](const Point& x) -> Point { return x; };
  p.reaction = [](const Point&) { return 1.0; };
  p.load = [](const Point&) { return 1.0; };
  // b(v, v) = |||v|||^2 since div b = 2 = 2c; continuity with |b| <= sqrt(2)
  // and the Friedrichs constant 1/sqrt(lambda_1) of the L-shape
  const double CF = 1.0 / std::sqrt(9.6397238);
  p.bounds = MonotonicityBounds{1.0, 1.0 + std::sqrt(2.0) * CF + CF * CF};
  return {std::move(p), mb.build()};
}

Benchmark zshape_nonlinear() {
  MeshBuilder mb;
  mb.square(-1, 0);
  mb.square(0, 0);
  mb.square(0, -1);
  mb.triangle(Point(-1, -1), Point(0, -1), Point(0, 0));

  ProblemDef p;
  p.name = "zshape-nonlinear";
  Nonlinearity nl;
  nl.a = [](double t) { return 1.0 + std::log1p(t) / (1.0 + t); };
  nl.a_prime = [](double t) { return (1.0 - std::log1p(t)) / ((1.0 + t) * (1.0 + t)); };
  nl.psi = [](double s) {
    double l = std::log1p(s);
    return s + 0.5 * l * l;
  };
  nl.alpha = zshape_data::alpha;
  nl.lipschitz = zshape_data::lipschitz;
  p.nonlinearity = nl;
  p.reaction = [](const Point&) { return 1.0; };
  p.load = [](const Point&) { return 1.0; };
  return {std::move(p), mb.build()};
}

const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names{"kellogg", "lshape-convection", "zshape-nonlinear"};
  return names;
}

Benchmark make_benchmark(const std::string& name) {
  if (name == "kellogg") return kellogg();
  if (name == "lshape-convection") return lshape_convection();
  if (name == "zshape-nonlinear") return zshape_nonlinear();
  throw ArgumentError("unknown problem '" + name +
                      "' (expected kellogg, lshape-convection, zshape-nonlinear)");
}

}  // namespace afem
