#pragma once

#include "hdgnefem/common.hpp"
#include "hdgnefem/nurbs.hpp"

#include <utility>

namespace hdgnefem {

/// Map from the rectangle R = [lambda_a, lambda_b] x [0, 1] onto a triangle
/// with one NURBS edge:
///
///     x(l1, l2) = (1 - l2) C(l1) + l2 x_I
///
/// where x_I is the vertex opposite the curved edge. `forward` records whether
/// the element's counter-clockwise traversal of the curved edge follows
/// increasing lambda; the determinant of the Jacobian then has sign +1 for
/// forward charts and -1 otherwise.
class NefemChart {
 public:
  NefemChart(const NurbsCurve& curve, ParamInterval interval, bool forward, Vec2 interior_vertex);

  /// Physical point and Jacobian (columns d/dl1 and d/dl2).
  std::pair<Vec2, Mat2> map(double lambda1, double lambda2) const;

  const NurbsCurve& curve() const { return *curve_; }
  const ParamInterval& interval() const { return interval_; }
  bool forward() const { return forward_; }
  double orientation() const { return forward_ ? 1.0 : -1.0; }
  const Vec2& interior_vertex() const { return interior_; }

  /// lambda1 of the curved edge point at fraction t along the element's CCW
  /// traversal of that edge.
  double edge_lambda(double t) const;

 private:
  const NurbsCurve* curve_;
  ParamInterval interval_;
  bool forward_;
  Vec2 interior_;
};

}  // namespace hdgnefem
