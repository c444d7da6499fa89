#pragma once

#include "hdgnefem/common.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace hdgnefem {

/// Rational B-spline curve with an open (clamped) knot vector.
///
/// The curve is immutable once constructed. Parameters within 1e-12 of the
/// knot-range ends are clamped inward; anything further out is a DomainError.
class NurbsCurve {
 public:
  NurbsCurve(int degree, std::vector<double> knots, std::vector<Vec2> control_points,
             std::vector<double> weights);

  int degree() const { return degree_; }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<Vec2>& control_points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }

  double lambda_min() const { return knots_.front(); }
  double lambda_max() const { return knots_.back(); }

  /// C(lambda) by de Boor's recursion on homogeneous control points.
  Vec2 evaluate(double lambda) const;

  /// First or second derivative with respect to lambda.
  Vec2 derivative(double lambda, int order) const;

  /// Distinct knot values strictly inside (a, b), sorted.
  std::vector<double> interior_breakpoints(double a, double b) const;

 private:
  double clamp_parameter(double lambda) const;
  int find_span(double lambda) const;
  /// Basis functions and their derivatives up to `order` on the span.
  void basis_derivatives(int span, double lambda, int order,
                         std::vector<std::vector<double>>& ders) const;

  int degree_;
  std::vector<double> knots_;
  std::vector<Vec2> points_;
  std::vector<double> weights_;
};

using CurveSet = std::vector<NurbsCurve>;

/// Parametric end coordinates of a boundary edge on a curve.
struct ParamInterval {
  int curve_id = -1;
  double lambda_a = 0.0;
  double lambda_b = 0.0;

  double midpoint() const { return 0.5 * (lambda_a + lambda_b); }
};

/// Checks lambda_a < lambda_b and that both lie in the curve's knot range.
void validate_interval(const CurveSet& curves, const ParamInterval& interval);

/// Geometry file: one block per curve,
///
///     degree <q>
///     knots <n>
///     <k_0> ... <k_{n-1}>
///     points <m>
///     <x> <y> <w>      (m lines)
///
/// Values are written with 17 significant digits so a read-back is exact.
void write_curves(std::ostream& out, const CurveSet& curves);
CurveSet read_curves(std::istream& in);
void write_curves_file(const std::string& path, const CurveSet& curves);
CurveSet read_curves_file(const std::string& path);

}  // namespace hdgnefem
