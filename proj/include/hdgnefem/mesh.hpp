#pragma once

#include "hdgnefem/common.hpp"
#include "hdgnefem/nurbs.hpp"

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hdgnefem {

enum class BoundaryTag { Dirichlet = 1, Neumann = 2 };

/// A mesh edge. For interior faces v0 < v1; boundary faces keep the
/// orientation given when the mesh was built, so that a curved face's v0 sits
/// at C(lambda_a) and v1 at C(lambda_b).
struct Face {
  int v0 = -1;
  int v1 = -1;
  int left = -1;
  int left_edge = -1;
  int right = -1;
  int right_edge = -1;

  bool is_boundary() const { return right < 0; }
};

/// Boundary edge description, as read from a mesh file.
struct BoundarySegment {
  int v_start = -1;
  int v_end = -1;
  BoundaryTag tag = BoundaryTag::Dirichlet;
  std::optional<ParamInterval> interval;
};

struct BoundaryData {
  BoundaryTag tag = BoundaryTag::Dirichlet;
  std::optional<ParamInterval> interval;
};

using Triangle = std::array<int, 3>;

/// Faces of a CCW triangle list, ordered by (min vertex, max vertex).
/// Local edge j of an element joins its vertices j and (j+1) mod 3.
/// Throws TopologyError on non-manifold edges.
std::vector<Face> build_connectivity(const std::vector<Triangle>& elements);

/// Triangulation with curved-boundary metadata.
class TriMesh {
 public:
  TriMesh(std::vector<Vec2> vertices, std::vector<Triangle> elements,
          const std::vector<BoundarySegment>& boundary,
          std::shared_ptr<const CurveSet> curves = nullptr);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<Triangle>& elements() const { return elements_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::shared_ptr<const CurveSet>& curves() const { return curves_; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_elements() const { return static_cast<int>(elements_.size()); }
  int num_faces() const { return static_cast<int>(faces_.size()); }

  /// Face ids of element e, indexed by local edge.
  const std::array<int, 3>& element_faces(int e) const { return element_faces_[e]; }
  /// Boundary data of face f; empty for interior faces.
  const std::optional<BoundaryData>& boundary(int f) const { return boundary_[f]; }
  bool is_curved(int f) const { return boundary_[f] && boundary_[f]->interval.has_value(); }
  /// Local edge of e lying on a curved boundary, or -1.
  int curved_edge(int e) const;

  bool has_neumann() const;

  double domain_diameter() const { return diameter_; }
  /// Signed area of the straight triangle through the element's vertices.
  double chord_area(int e) const;
  double max_edge_length(int e) const;

  /// Mesh-file boundary list reconstructed from the faces.
  std::vector<BoundarySegment> boundary_segments() const;

 private:
  std::vector<Vec2> vertices_;
  std::vector<Triangle> elements_;
  std::vector<Face> faces_;
  std::vector<std::array<int, 3>> element_faces_;
  std::vector<std::optional<BoundaryData>> boundary_;
  std::shared_ptr<const CurveSet> curves_;
  double diameter_ = 0.0;
};

/// 1-to-4 split by edge midpoints; curved edges are split at the parametric
/// midpoint and the new vertex is placed on the curve. Children of element e
/// are 4e .. 4e + 3; child 4e + 3 is the centre child, which has the parent's
/// centroid and orientation.
TriMesh nested_refine(const TriMesh& mesh);

/// Characteristic size h_e = (longest chord edge) / (domain diameter).
/// Throws GeometryError on a zero-area element.
double element_size(const TriMesh& mesh, int e);

/// Mesh file:
///
///     VERTICES <n>      then n lines "x y"
///     ELEMENTS <n>      then n lines "v1 v2 v3" (0-based, CCW)
///     BOUNDARY <n>      then n lines "v_start v_end tag [curve_id lambda_a lambda_b]"
///
/// Tags: 1 = Dirichlet, 2 = Neumann.
void write_mesh(std::ostream& out, const TriMesh& mesh);
TriMesh read_mesh(std::istream& in, std::shared_ptr<const CurveSet> curves);
void write_mesh_file(const std::string& path, const TriMesh& mesh);
TriMesh read_mesh_file(const std::string& path, std::shared_ptr<const CurveSet> curves);

}  // namespace hdgnefem
