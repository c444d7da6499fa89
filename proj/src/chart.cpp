#include "hdgnefem/chart.hpp"

namespace hdgnefem {

NefemChart::NefemChart(const NurbsCurve& curve, ParamInterval interval, bool forward,
                       Vec2 interior_vertex)
    : curve_(&curve), interval_(interval), forward_(forward), interior_(std::move(interior_vertex)) {
  if (!(interval_.lambda_a < interval_.lambda_b))
    throw ArgumentError("NEFEM chart needs lambda_a < lambda_b");
}

std::pair<Vec2, Mat2> NefemChart::map(double lambda1, double lambda2) const {
  const Vec2 c = curve_->evaluate(lambda1);
  const Vec2 dc = curve_->derivative(lambda1, 1);
  Mat2 jac;
  jac.col(0) = (1.0 - lambda2) * dc;
  jac.col(1) = interior_ - c;
  return {(1.0 - lambda2) * c + lambda2 * interior_, jac};
}

double NefemChart::edge_lambda(double t) const {
  const double span = interval_.lambda_b - interval_.lambda_a;
  return forward_ ? interval_.lambda_a + t * span : interval_.lambda_b - t * span;
}

}  // namespace hdgnefem
