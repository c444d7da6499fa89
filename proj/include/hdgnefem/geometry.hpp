#pragma once

#include "hdgnefem/basis.hpp"
#include "hdgnefem/chart.hpp"
#include "hdgnefem/common.hpp"
#include "hdgnefem/mesh.hpp"
#include "hdgnefem/quadrature.hpp"

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hdgnefem {

/// How curved boundary elements are represented while degrees change.
struct GeometryStrategy {
  enum class Kind { IsoFixed, IsoRegen, Nefem };
  Kind kind = Kind::Nefem;
  int q = 1;  ///< fixed geometric degree for IsoFixed

  static GeometryStrategy iso_fixed(int q) { return {Kind::IsoFixed, q}; }
  static GeometryStrategy iso_regen() { return {Kind::IsoRegen, 1}; }
  static GeometryStrategy nefem() { return {Kind::Nefem, 1}; }

  /// "iso-fixed:<q>", "iso-regen" or "nefem".
  static GeometryStrategy parse(const std::string& text);
  std::string name() const;
};

struct QuadratureOptions {
  /// Extra exactness added to 2k on straight and isoparametric elements.
  int extra_degree = 2;
  NefemRuleOptions nefem{};
};

/// Quadrature data for one local edge of an element.
struct FaceTable {
  int face = -1;
  int local_edge = -1;
  /// Face coordinate in [0, 1] measured from the face's v0 towards v1.
  std::vector<double> s;
  Eigen::VectorXd w;              ///< weights including the length Jacobian
  std::vector<Vec2> x;            ///< computational points
  std::vector<Vec2> normal;       ///< outward unit normal of the computational element
  std::vector<Vec2> data_x;       ///< where boundary data is sampled (exact boundary)
  std::vector<Vec2> data_normal;  ///< exact outward normal at data_x
  Eigen::MatrixXd basis;          ///< element basis values, row = point
};

/// Everything element assembly needs: physical quadrature, basis values and
/// Cartesian gradients at the points, and per-edge face data.
struct ElementTables {
  int element = -1;
  int k = 0;
  std::vector<Vec2> x;
  Eigen::VectorXd w;
  BasisTable basis;
  int k_post = 0;
  std::optional<BasisTable> post_basis;  ///< degree k_post basis at the same points
  std::array<FaceTable, 3> faces;

  int size() const { return static_cast<int>(basis.values.cols()); }
  double area() const { return w.sum(); }
};

enum class ElementKind { Straight, Isoparametric, Nefem };

/// Geometric representation of every element under a strategy: affine maps
/// for straight elements, degree-q nodal maps for isoparametric curved
/// elements and NURBS charts for NEFEM curved elements.
class GeometryBackend {
 public:
  GeometryBackend(const TriMesh& mesh, GeometryStrategy strategy, std::span<const int> degrees,
                  QuadratureOptions quadrature = {});

  /// Applies the strategy's geometry update for new element degrees.
  void update(std::span<const int> degrees);

  const TriMesh& mesh() const { return *mesh_; }
  const GeometryStrategy& strategy() const { return strategy_; }
  const QuadratureOptions& quadrature() const { return quadrature_; }

  ElementKind kind(int e) const { return shapes_[e].kind; }
  int curved_edge(int e) const { return shapes_[e].curved_edge; }
  /// Geometric degree of an isoparametric element (1 for straight elements).
  int geometry_degree(int e) const { return shapes_[e].q; }
  /// Geometry nodes of an isoparametric element in lattice order.
  const std::vector<Vec2>& geometry_nodes(int e) const { return shapes_[e].nodes; }
  const NefemChart& chart(int e) const;

  /// Tables for solution degree k. `face_points[j]` is the Gauss count per
  /// (sub)span on local edge j; k_post > 0 adds a second basis of that degree.
  ElementTables tables(int e, int k, const std::array<int, 3>& face_points, int k_post = 0) const;

  /// Physical positions of the degree-k element nodes, lattice order.
  std::vector<Vec2> nodal_points(int e, int k) const;
  /// Computational point on face f at coordinate s (from v0 towards v1).
  Vec2 face_point(int f, double s) const;
  /// Area of the computational element by quadrature (24 points per knot span
  /// along a NURBS edge).
  double element_area(int e) const;

  /// Nodal basis of degree k on a NEFEM element (cached).
  const PhysicalBasis& physical_basis(int e, int k) const;

 private:
  struct Shape {
    ElementKind kind = ElementKind::Straight;
    int curved_edge = -1;
    int q = 1;
    std::vector<Vec2> nodes;
    std::optional<NefemChart> chart;
  };

  void build_shape(int e, int q);
  std::vector<Vec2> isoparametric_nodes(int e, int q) const;
  std::pair<Vec2, Mat2> reference_map(int e, const Vec2& xi) const;
  FaceTable mapped_face(int e, int j, int npts) const;
  FaceTable nefem_face(int e, int j, int npts) const;

  const TriMesh* mesh_;
  GeometryStrategy strategy_;
  QuadratureOptions quadrature_;
  std::vector<Shape> shapes_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::pair<int, int>, std::unique_ptr<PhysicalBasis>> physical_cache_;
};

}  // namespace hdgnefem
