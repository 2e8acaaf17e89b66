#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace afem {

class Mesh;

namespace detail {
/// Bisects along every marked edge of `mesh` plus the NVB closure.
std::shared_ptr<const Mesh> refine_edges(const std::shared_ptr<const Mesh>& mesh,
                                         std::vector<char> edge_marked);
}  // namespace detail

using Point = Eigen::Vector2d;

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  int segment = 0;
};

/// Conforming triangulation with newest-vertex-bisection data.
///
/// Local convention: element `{v0, v1, v2}` is positively oriented, `v2` is
/// the newest vertex and the reference edge is `(v0, v1)`. Local edge `i` is
/// the edge opposite local vertex `i`, so the reference edge is local edge 2.
///
/// Meshes are immutable. `refine` returns a new mesh that keeps a pointer to
/// its parent together with the child-to-parent element map; vertex indices
/// of the parent are preserved and new vertices are appended.
class Mesh {
 public:
  using Element = std::array<int, 3>;

  /// Takes elements as given (newest vertex in slot 2). No reorientation.
  Mesh(std::vector<Point> vertices, std::vector<Element> elements,
       std::vector<BoundaryEdge> boundary, std::vector<int> generation = {});

  /// Builds an initial mesh from arbitrary triangles: orients them
  /// positively and picks the longest edge as reference edge (ties go to the
  /// edge whose opposite vertex has the smallest index).
  static std::shared_ptr<const Mesh> make_initial(std::vector<Point> vertices,
                                                  std::vector<Element> triangles,
                                                  std::vector<BoundaryEdge> boundary);

  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  int n_elements() const { return static_cast<int>(elements_.size()); }
  int n_edges() const { return static_cast<int>(edges_.size()); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<Element>& elements() const { return elements_; }
  const std::vector<BoundaryEdge>& boundary() const { return boundary_; }
  const std::vector<int>& generation() const { return generation_; }

  const Point& vertex(int i) const { return vertices_[i]; }
  const Element& element(int t) const { return elements_[t]; }

  /// Signed area of element t.
  double signed_area(int t) const;
  double area(int t) const { return signed_area(t); }
  Point centroid(int t) const;

  /// Edge table, built once at construction. Edges are stored with the
  /// smaller vertex index first.
  const std::array<int, 2>& edge(int e) const { return edges_[e]; }
  /// Global index of local edge i (opposite local vertex i) of element t.
  int element_edge(int t, int i) const { return element_edges_[t][i]; }
  /// Elements adjacent to edge e; second entry is -1 on the boundary.
  const std::array<int, 2>& edge_elements(int e) const { return edge_elements_[e]; }
  /// Boundary segment id of edge e, or -1 for edges not on the listed boundary.
  int edge_segment(int e) const { return edge_segment_[e]; }
  bool is_boundary_edge(int e) const { return edge_segment_[e] >= 0; }
  /// Listed boundary edges that are not edges of any element.
  int unmatched_boundary_edges() const { return unmatched_boundary_; }
  /// Edge index for a vertex pair, or -1.
  int find_edge(int a, int b) const;

  /// Refinement lineage. Empty for initial meshes.
  const std::shared_ptr<const Mesh>& parent() const { return parent_; }
  const std::vector<int>& parent_element() const { return parent_element_; }
  /// For vertices appended by the refinement that produced this mesh: the
  /// endpoints of the bisected parent edge. Indexed by `v - parent().n_vertices()`.
  const std::vector<std::array<int, 2>>& new_vertex_parents() const { return new_vertex_parents_; }

  /// Element map from this mesh to an ancestor: for every element, the index
  /// of the ancestor element containing it. Throws ArgumentError if `coarse`
  /// is not this mesh or one of its ancestors.
  std::vector<int> ancestor_map(const Mesh& coarse) const;
  bool is_descendant_of(const Mesh& coarse) const;

  /// Minimal interior angle over all elements (radians).
  double min_angle() const;

  /// Plain-text dump (`afem-mesh v1`). See README for the exact layout.
  void write(std::ostream& os) const;
  static std::shared_ptr<const Mesh> read(std::istream& is);

  bool same_geometry(const Mesh& other) const;

 private:
  friend std::shared_ptr<const Mesh> detail::refine_edges(const std::shared_ptr<const Mesh>&,
                                                          std::vector<char>);
  void build_edges();

  std::vector<Point> vertices_;
  std::vector<Element> elements_;
  std::vector<BoundaryEdge> boundary_;
  std::vector<int> generation_;

  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 3>> element_edges_;
  std::vector<std::array<int, 2>> edge_elements_;
  std::vector<int> edge_segment_;
  std::unordered_map<std::uint64_t, int> edge_index_;
  int unmatched_boundary_ = 0;

  std::shared_ptr<const Mesh> parent_;
  std::vector<int> parent_element_;
  std::vector<std::array<int, 2>> new_vertex_parents_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Coarsest conforming NVB refinement in which every marked element is
/// bisected at least once. Marked indices must be valid element indices.
MeshPtr refine(const MeshPtr& mesh, std::span<const int> marked);

/// Every element bisected twice (four children per element where the
/// reference edges allow it), conforming.
MeshPtr uniform_refine(const MeshPtr& mesh);

/// True iff the mesh is conforming, positively oriented, has valid
/// reference edges and every unmatched edge is a listed boundary edge.
bool check_conforming(const Mesh& mesh, std::string* reason = nullptr);

}  // namespace afem
