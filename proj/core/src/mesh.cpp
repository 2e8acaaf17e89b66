#include "afem/mesh.hpp"

#include "afem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <tuple>

namespace afem {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

double cross(const Point& o, const Point& p, const Point& q) {
  return (p - o).x() * (q - o).y() - (p - o).y() * (q - o).x();
}

// local edge i of {v0,v1,v2}: the two vertices other than vi
std::array<int, 2> local_edge(const Mesh::Element& el, int i) {
  return {el[(i + 1) % 3], el[(i + 2) % 3]};
}

}  // namespace

Mesh::Mesh(std::vector<Point> vertices, std::vector<Element> elements,
           std::vector<BoundaryEdge> boundary, std::vector<int> generation)
    : vertices_(std::move(vertices)),
      elements_(std::move(elements)),
      boundary_(std::move(boundary)),
      generation_(std::move(generation)) {
  if (generation_.empty()) generation_.assign(elements_.size(), 0);
  if (generation_.size() != elements_.size())
    throw ArgumentError("Mesh: generation size does not match element count");
  for (const auto& el : elements_)
    for (int v : el)
      if (v < 0 || v >= n_vertices()) throw ArgumentError("Mesh: vertex index out of range");
  build_edges();
}

void Mesh::build_edges() {
  const int ne = n_elements();
  edge_index_.clear();
  edge_index_.reserve(static_cast<std::size_t>(ne) * 2 + 16);
  edges_.clear();
  edge_elements_.clear();
  element_edges_.assign(ne, {-1, -1, -1});
  for (int t = 0; t < ne; ++t) {
    for (int i = 0; i < 3; ++i) {
      auto [a, b] = local_edge(elements_[t], i);
      auto [it, inserted] = edge_index_.try_emplace(edge_key(a, b), n_edges());
      if (inserted) {
        edges_.push_back({std::min(a, b), std::max(a, b)});
        edge_elements_.push_back({t, -1});
      } else {
        // third and later neighbours are dropped; check_conforming reports them
        auto& adj = edge_elements_[it->second];
        if (adj[1] < 0) adj[1] = t;
      }
      element_edges_[t][i] = it->second;
    }
  }
  edge_segment_.assign(edges_.size(), -1);
  unmatched_boundary_ = 0;
  for (const auto& be : boundary_) {
    auto it = edge_index_.find(edge_key(be.a, be.b));
    if (it == edge_index_.end()) {
      ++unmatched_boundary_;
      continue;
    }
    edge_segment_[it->second] = be.segment;
  }
}

int Mesh::find_edge(int a, int b) const {
  auto it = edge_index_.find(edge_key(a, b));
  return it == edge_index_.end() ? -1 : it->second;
}

double Mesh::signed_area(int t) const {
  const auto& el = elements_[t];
  return 0.5 * cross(vertices_[el[0]], vertices_[el[1]], vertices_[el[2]]);
}

Point Mesh::centroid(int t) const {
  const auto& el = elements_[t];
  return (vertices_[el[0]] + vertices_[el[1]] + vertices_[el[2]]) / 3.0;
}

std::shared_ptr<const Mesh> Mesh::make_initial(std::vector<Point> vertices,
                                               std::vector<Element> triangles,
                                               std::vector<BoundaryEdge> boundary) {
  for (auto& tri : triangles) {
    for (int v : tri)
      if (v < 0 || v >= static_cast<int>(vertices.size()))
        throw ArgumentError("make_initial: vertex index out of range");
    if (cross(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) < 0)
      std::swap(tri[0], tri[1]);
    // longest edge; ties go to the smallest opposite vertex index
    int best = 0;
    double best_len = -1.0;
    for (int i = 0; i < 3; ++i) {
      auto [a, b] = local_edge(tri, i);
      double len = (vertices[a] - vertices[b]).squaredNorm();
      bool longer = len > best_len * (1.0 + 1e-12);
      bool tie = std::abs(len - best_len) <= 1e-12 * std::max(len, best_len);
      if (longer || (tie && tri[i] < tri[best])) {
        best = i;
        best_len = std::max(len, best_len);
      }
    }
    tri = {tri[(best + 1) % 3], tri[(best + 2) % 3], tri[best]};
  }
  return std::make_shared<const Mesh>(std::move(vertices), std::move(triangles),
                                      std::move(boundary));
}

std::vector<int> Mesh::ancestor_map(const Mesh& coarse) const {
  std::vector<int> map(elements_.size());
  for (int t = 0; t < n_elements(); ++t) map[t] = t;
  const Mesh* cur = this;
  while (cur != &coarse) {
    if (!cur->parent_) throw ArgumentError("ancestor_map: mesh is not a descendant");
    const auto& pe = cur->parent_element_;
    for (int& m : map) m = pe[m];
    cur = cur->parent_.get();
  }
  return map;
}

bool Mesh::is_descendant_of(const Mesh& coarse) const {
  for (const Mesh* cur = this; cur; cur = cur->parent_.get())
    if (cur == &coarse) return true;
  return false;
}

double Mesh::min_angle() const {
  double best = std::numbers::pi;
  for (const auto& el : elements_) {
    for (int i = 0; i < 3; ++i) {
      Point u = vertices_[el[(i + 1) % 3]] - vertices_[el[i]];
      Point w = vertices_[el[(i + 2) % 3]] - vertices_[el[i]];
      double c = u.dot(w) / (u.norm() * w.norm());
      best = std::min(best, std::acos(std::clamp(c, -1.0, 1.0)));
    }
  }
  return best;
}

void Mesh::write(std::ostream& os) const {
  os << "afem-mesh v1\n"
     << n_vertices() << ' ' << n_elements() << ' ' << boundary_.size() << '\n';
  auto old = os.precision(17);
  for (const auto& p : vertices_) os << p.x() << ' ' << p.y() << '\n';
  os.precision(old);
  for (int t = 0; t < n_elements(); ++t) {
    const auto& el = elements_[t];
    os << el[0] << ' ' << el[1] << ' ' << el[2] << " 2 " << generation_[t] << '\n';
  }
  for (const auto& be : boundary_) os << be.a << ' ' << be.b << ' ' << be.segment << '\n';
}

std::shared_ptr<const Mesh> Mesh::read(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("afem-mesh v1", 0) != 0)
    throw ArgumentError("Mesh::read: missing 'afem-mesh v1' header");
  long nv = -1, ne = -1, nb = -1;
  if (!(is >> nv >> ne >> nb) || nv < 0 || ne < 0 || nb < 0)
    throw ArgumentError("Mesh::read: bad counts line");
  std::vector<Point> verts(nv);
  for (auto& p : verts)
    if (!(is >> p.x() >> p.y())) throw ArgumentError("Mesh::read: truncated vertex block");
  std::vector<Element> els(ne);
  std::vector<int> gen(ne);
  for (long t = 0; t < ne; ++t) {
    Element raw;
    int ref = 0;
    if (!(is >> raw[0] >> raw[1] >> raw[2] >> ref >> gen[t]))
      throw ArgumentError("Mesh::read: truncated element block");
    if (ref < 0 || ref > 2) throw ArgumentError("Mesh::read: reference edge must be 0, 1 or 2");
    els[t] = {raw[(ref + 1) % 3], raw[(ref + 2) % 3], raw[ref]};
  }
  std::vector<BoundaryEdge> bnd(nb);
  for (auto& be : bnd)
    if (!(is >> be.a >> be.b >> be.segment))
      throw ArgumentError("Mesh::read: truncated boundary block");
  return std::make_shared<const Mesh>(std::move(verts), std::move(els), std::move(bnd),
                                      std::move(gen));
}

bool Mesh::same_geometry(const Mesh& other) const {
  using Key = std::array<double, 6>;
  auto keys = [](const Mesh& m) {
    std::vector<Key> out;
    out.reserve(m.elements_.size());
    for (const auto& el : m.elements_) {
      std::array<std::pair<double, double>, 3> c;
      for (int i = 0; i < 3; ++i) c[i] = {m.vertices_[el[i]].x(), m.vertices_[el[i]].y()};
      std::sort(c.begin(), c.end());
      out.push_back({c[0].first, c[0].second, c[1].first, c[1].second, c[2].first, c[2].second});
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  return n_elements() == other.n_elements() && keys(*this) == keys(other);
}

namespace detail {

MeshPtr refine_edges(const MeshPtr& mesh, std::vector<char> edge_marked) {
  const Mesh& m = *mesh;
  const int ne = m.n_elements();

  // closure: a marked edge forces the reference edge of each neighbour
  std::deque<int> work;
  for (int e = 0; e < m.n_edges(); ++e)
    if (edge_marked[e]) work.push_back(e);
  while (!work.empty()) {
    int e = work.front();
    work.pop_front();
    for (int t : m.edge_elements(e)) {
      if (t < 0) continue;
      int r = m.element_edge(t, 2);
      if (!edge_marked[r]) {
        edge_marked[r] = 1;
        work.push_back(r);
      }
    }
  }

  std::vector<Point> verts = m.vertices();
  std::vector<int> midpoint(m.n_edges(), -1);
  std::vector<std::array<int, 2>> new_parents;
  for (int e = 0; e < m.n_edges(); ++e) {
    if (!edge_marked[e]) continue;
    auto [a, b] = m.edge(e);
    midpoint[e] = static_cast<int>(verts.size());
    verts.push_back(0.5 * (m.vertex(a) + m.vertex(b)));
    new_parents.push_back({a, b});
  }
  auto mid_of = [&](int a, int b) {
    int e = m.find_edge(a, b);
    return e < 0 ? -1 : midpoint[e];
  };

  std::vector<Mesh::Element> els;
  std::vector<int> gen, parent;
  els.reserve(ne * 2);
  gen.reserve(ne * 2);
  parent.reserve(ne * 2);
  auto bisect = [&](auto&& self, const Mesh::Element& el, int g, int origin) -> void {
    int mid = mid_of(el[0], el[1]);
    if (mid < 0) {
      els.push_back(el);
      gen.push_back(g);
      parent.push_back(origin);
      return;
    }
    self(self, {el[2], el[0], mid}, g + 1, origin);
    self(self, {el[1], el[2], mid}, g + 1, origin);
  };
  for (int t = 0; t < ne; ++t) bisect(bisect, m.element(t), m.generation()[t], t);

  std::vector<BoundaryEdge> bnd;
  bnd.reserve(m.boundary().size());
  for (const auto& be : m.boundary()) {
    int mid = mid_of(be.a, be.b);
    if (mid < 0) {
      bnd.push_back(be);
    } else {
      bnd.push_back({be.a, mid, be.segment});
      bnd.push_back({mid, be.b, be.segment});
    }
  }

  auto out = std::make_shared<Mesh>(std::move(verts), std::move(els), std::move(bnd),
                                    std::move(gen));
  out->parent_ = mesh;
  out->parent_element_ = std::move(parent);
  out->new_vertex_parents_ = std::move(new_parents);
  return out;
}

}  // namespace detail

MeshPtr refine(const MeshPtr& mesh, std::span<const int> marked) {
  if (!mesh) throw ArgumentError("refine: null mesh");
  std::vector<char> edge_marked(mesh->n_edges(), 0);
  for (int t : marked) {
    if (t < 0 || t >= mesh->n_elements())
      throw ArgumentError("refine: marked element " + std::to_string(t) + " out of range");
    edge_marked[mesh->element_edge(t, 2)] = 1;
  }
  return detail::refine_edges(mesh, std::move(edge_marked));
}

MeshPtr uniform_refine(const MeshPtr& mesh) {
  if (!mesh) throw ArgumentError("uniform_refine: null mesh");
  // every edge split: each element yields four children two generations down
  return detail::refine_edges(mesh, std::vector<char>(mesh->n_edges(), 1));
}

bool check_conforming(const Mesh& mesh, std::string* reason) {
  auto fail = [&](const std::string& why) {
    if (reason) *reason = why;
    return false;
  };
  const int nv = mesh.n_vertices();
  struct Use {
    int count = 0;
    int a = -1, b = -1;  // directed occurrence of the first element
  };
  std::map<std::pair<int, int>, Use> uses;
  for (int t = 0; t < mesh.n_elements(); ++t) {
    const auto& el = mesh.element(t);
    for (int v : el)
      if (v < 0 || v >= nv) return fail("element " + std::to_string(t) + ": bad vertex index");
    if (el[0] == el[1] || el[1] == el[2] || el[0] == el[2])
      return fail("element " + std::to_string(t) + ": repeated vertex");
    if (!(mesh.signed_area(t) > 0.0))
      return fail("element " + std::to_string(t) + ": non-positive orientation");
    for (int i = 0; i < 3; ++i) {
      auto [a, b] = local_edge(el, i);
      auto& u = uses[{std::min(a, b), std::max(a, b)}];
      if (u.count == 1 && u.a == a)
        return fail("element " + std::to_string(t) + ": overlaps a neighbour");
      if (u.count == 0) {
        u.a = a;
        u.b = b;
      }
      if (++u.count > 2) return fail("edge shared by more than two elements");
    }
  }
  std::map<std::pair<int, int>, int> listed;
  for (const auto& be : mesh.boundary()) {
    auto key = std::make_pair(std::min(be.a, be.b), std::max(be.a, be.b));
    auto it = uses.find(key);
    if (it == uses.end() || it->second.count != 1)
      return fail("boundary edge (" + std::to_string(be.a) + "," + std::to_string(be.b) +
                  ") is not a single-element edge");
    ++listed[key];
  }
  std::vector<std::pair<int, int>> single;
  for (const auto& [key, u] : uses) {
    if (u.count != 1) continue;
    if (!listed.count(key))
      return fail("edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                  ") has one element but is not on the boundary");
    single.push_back(key);
  }
  // a vertex strictly inside a boundary edge is a hanging vertex
  std::vector<int> bverts;
  for (auto [a, b] : single) {
    bverts.push_back(a);
    bverts.push_back(b);
  }
  std::sort(bverts.begin(), bverts.end());
  bverts.erase(std::unique(bverts.begin(), bverts.end()), bverts.end());
  for (auto [a, b] : single) {
    const Point& pa = mesh.vertex(a);
    const Point& pb = mesh.vertex(b);
    Point lo = pa.cwiseMin(pb), hi = pa.cwiseMax(pb);
    double len2 = (pb - pa).squaredNorm();
    for (int v : bverts) {
      if (v == a || v == b) continue;
      const Point& pv = mesh.vertex(v);
      if ((pv.array() < lo.array()).any() || (pv.array() > hi.array()).any()) continue;
      double s = (pv - pa).dot(pb - pa) / len2;
      if (s <= 0.0 || s >= 1.0) continue;
      if (std::abs(cross(pa, pb, pv)) <= 1e-12 * len2)
        return fail("hanging vertex " + std::to_string(v));
    }
  }
  return true;
}

}  // namespace afem
