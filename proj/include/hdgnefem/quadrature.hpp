#pragma once

#include "hdgnefem/chart.hpp"
#include "hdgnefem/common.hpp"
#include "hdgnefem/nurbs.hpp"

#include <vector>

namespace hdgnefem {

struct QuadratureRule1D {
  std::vector<double> points;
  std::vector<double> weights;
  int exactness = 0;
};

struct QuadratureRule2D {
  std::vector<Vec2> points;
  std::vector<double> weights;
  int exactness = 0;
};

/// Gauss-Legendre rule with n points on [0, 1]; exact to degree 2n-1.
/// Rules are built once and cached (thread-safe).
const QuadratureRule1D& gauss_segment(int n);

/// Gauss-Jacobi rule for the weight (1-t)^alpha (1+t)^beta on [-1, 1].
QuadratureRule1D gauss_jacobi(int n, double alpha, double beta);

/// Collapsed (Duffy) rule on the reference triangle (0,0), (1,0), (0,1),
/// exact for every monomial of total degree <= d. Cached per degree.
const QuadratureRule2D& triangle_rule(int degree);

/// Rule in physical coordinates: weights already carry the Jacobian.
struct PhysicalRule {
  std::vector<Vec2> points;
  std::vector<double> weights;
};

struct NefemRuleOptions {
  int n1 = 0;  ///< Gauss points per knot span along lambda1, 0 = default
  int n2 = 0;  ///< Gauss points along lambda2, 0 = default
};

/// Default point counts for a NEFEM element of solution degree k whose curve
/// has degree q: n1 = ceil((2k + q + 2) / 2), n2 = k + 2.
int nefem_default_n1(int k, int q_curve);
int nefem_default_n2(int k);

/// Composite tensor rule on R, split at the curve's interior knots.
/// Throws GeometryError when orientation * det J <= 0 at a point.
PhysicalRule nefem_element_rule(const NefemChart& chart, int k, NefemRuleOptions options = {});

struct CurveFaceRule {
  std::vector<double> lambdas;
  std::vector<Vec2> points;
  std::vector<Vec2> tangents;  ///< C'(lambda)
  std::vector<double> weights; ///< Gauss weight * |C'(lambda)| * span length
};

/// Composite Gauss rule over [lambda_a, lambda_b] split at interior knots,
/// with `n` points per span (0 selects ceil((2 k_hat + q + 2) / 2)).
CurveFaceRule nefem_face_rule(const NurbsCurve& curve, const ParamInterval& interval, int k_hat,
                              int n = 0);

}  // namespace hdgnefem
