#pragma once

#include "hdgnefem/chart.hpp"
#include "hdgnefem/common.hpp"

#include <span>
#include <utility>
#include <vector>

namespace hdgnefem {

/// Number of nodes of a degree-k triangle: (k+1)(k+2)/2.
constexpr int triangle_node_count(int k) { return (k + 1) * (k + 2) / 2; }

/// Index of lattice node (i, j), i along xi and j along eta, i + j <= k.
constexpr int lattice_index(int k, int i, int j) {
  return j * (k + 1) - j * (j - 1) / 2 + i;
}

/// Orthonormal Jacobi polynomial P_n^(alpha,beta) and its derivative.
double jacobi_p(double x, double alpha, double beta, int n);
double grad_jacobi_p(double x, double alpha, double beta, int n);

/// Gauss-Lobatto-Legendre nodes of degree k on [0, 1] (k + 1 points).
std::vector<double> gll_nodes(int k);

/// Warp-and-blend nodes on the reference triangle (0,0), (1,0), (0,1), in
/// lattice order: vertex 0 first, vertex 1 at index k, vertex 2 last.
std::vector<Vec2> warp_blend_nodes(int k);

/// Values and Cartesian gradients of a basis at a set of points; row = point.
struct BasisTable {
  Eigen::MatrixXd values;
  Eigen::MatrixXd dx;
  Eigen::MatrixXd dy;
};

/// Lagrange basis of total degree k on the reference triangle, built from
/// the orthonormal Dubiner modes and the inverse Vandermonde at the
/// warp-blend nodes. Gradients are with respect to (xi, eta).
class ReferenceBasis {
 public:
  explicit ReferenceBasis(int k);

  int degree() const { return k_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  double vandermonde_condition() const { return condition_; }

  /// Values and reference gradients at one point.
  void evaluate(const Vec2& xi, Eigen::Ref<Eigen::VectorXd> values,
                Eigen::Ref<Eigen::MatrixXd> gradients) const;
  BasisTable tabulate(std::span<const Vec2> points) const;

 private:
  int k_;
  std::vector<Vec2> nodes_;
  Eigen::MatrixXd inv_vt_;  // V^{-T}
  double condition_ = 0.0;
};

/// Largest supported element degree (the postprocessed field uses k + 1).
inline constexpr int kMaxBasisDegree = 14;

/// Cached reference basis for degree k (thread-safe).
/// Throws ArgumentError outside [1, kMaxBasisDegree] and BasisError when
/// the Vandermonde condition number exceeds 1e12.
const ReferenceBasis& reference_basis(int k);

/// Orthonormal Dubiner modes on the reference triangle with (xi, eta) gradients.
void dubiner_modes(int k, const Vec2& xi, Eigen::Ref<Eigen::VectorXd> values,
                   Eigen::Ref<Eigen::MatrixXd> gradients);

/// Lagrange basis of total degree k in physical coordinates. The modal
/// family is a product of Legendre polynomials scaled to the bounding box of
/// the nodes, which keeps the Vandermonde conditioning independent of h.
class PhysicalBasis {
 public:
  PhysicalBasis(int k, std::vector<Vec2> nodes);

  int degree() const { return k_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  double vandermonde_condition() const { return condition_; }

  void evaluate(const Vec2& x, Eigen::Ref<Eigen::VectorXd> values,
                Eigen::Ref<Eigen::MatrixXd> gradients) const;
  BasisTable tabulate(std::span<const Vec2> points) const;

 private:
  void modes(const Vec2& x, Eigen::Ref<Eigen::VectorXd> values,
             Eigen::Ref<Eigen::MatrixXd> gradients) const;

  int k_;
  std::vector<Vec2> nodes_;
  Vec2 center_;
  Vec2 half_width_;
  Eigen::MatrixXd inv_vt_;
  double condition_ = 0.0;
};

/// Degree-k_hat Lagrange basis on [0, 1] at Gauss-Lobatto nodes. On a
/// curved NEFEM face the coordinate is the affine image of [lambda_a, lambda_b].
class TraceBasis {
 public:
  explicit TraceBasis(int k_hat);

  int degree() const { return k_; }
  int size() const { return k_ + 1; }
  const std::vector<double>& nodes() const { return nodes_; }

  Eigen::VectorXd values(double s) const;
  Eigen::VectorXd derivatives(double s) const;

 private:
  int k_;
  std::vector<double> nodes_;
  Eigen::MatrixXd inv_vt_;
};

const TraceBasis& trace_basis(int k_hat);

/// phi(xi) = sum_j x_j N_j(xi) for geometry nodes of degree q in lattice order,
/// with its Jacobian d x / d xi. Throws GeometryError when det J <= 0.
std::pair<Vec2, Mat2> isoparametric_map(std::span<const Vec2> geometry_nodes, int q,
                                        const Vec2& xi);

/// Reference point on local edge j at fraction t of the CCW traversal.
Vec2 reference_edge_point(int edge, double t);
/// d xi / d t along local edge j.
Vec2 reference_edge_tangent(int edge);

/// Warp-blend nodes transplanted onto R and mapped through the chart.
/// `curved_edge` is the local edge of the element carrying the curve, so the
/// returned nodes are in the element's lattice order.
std::vector<Vec2> nefem_nodal_set(const NefemChart& chart, int curved_edge, int k);

/// Chart coordinates (lambda1, lambda2) of a reference point.
std::pair<double, double> nefem_reference_to_chart(const NefemChart& chart, int curved_edge,
                                                   const Vec2& xi);

}  // namespace hdgnefem
