#include "hdgnefem/nurbs.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace hdgnefem {

namespace {

constexpr double kClampTolerance = 1e-12;

}  // namespace

NurbsCurve::NurbsCurve(int degree, std::vector<double> knots, std::vector<Vec2> control_points,
                       std::vector<double> weights)
    : degree_(degree),
      knots_(std::move(knots)),
      points_(std::move(control_points)),
      weights_(std::move(weights)) {
  if (degree_ < 1) throw ArgumentError("NURBS degree must be at least 1");
  if (points_.size() != weights_.size())
    throw ArgumentError("NURBS needs one weight per control point");
  if (points_.size() < static_cast<std::size_t>(degree_ + 1))
    throw ArgumentError("NURBS needs at least degree+1 control points");
  if (knots_.size() != points_.size() + degree_ + 1)
    throw ArgumentError("NURBS knot count must equal control points + degree + 1");
  for (std::size_t i = 1; i < knots_.size(); ++i)
    if (knots_[i] < knots_[i - 1]) throw ArgumentError("NURBS knots must be non-decreasing");
  for (int i = 1; i <= degree_; ++i) {
    if (knots_[i] != knots_[0] || knots_[knots_.size() - 1 - i] != knots_.back())
      throw ArgumentError("NURBS knot vector must be open (end knots repeated degree+1 times)");
  }
  if (!(knots_.back() > knots_.front())) throw ArgumentError("NURBS knot range is empty");
  for (double w : weights_)
    if (!(w > 0.0)) throw ArgumentError("NURBS weights must be strictly positive");
}

double NurbsCurve::clamp_parameter(double lambda) const {
  const double a = lambda_min();
  const double b = lambda_max();
  if (lambda < a) {
    if (a - lambda <= kClampTolerance) return a;
    throw DomainError("NURBS parameter " + std::to_string(lambda) + " below knot range");
  }
  if (lambda > b) {
    if (lambda - b <= kClampTolerance) return b;
    throw DomainError("NURBS parameter " + std::to_string(lambda) + " above knot range");
  }
  return lambda;
}

int NurbsCurve::find_span(double lambda) const {
  const int n = static_cast<int>(points_.size()) - 1;
  if (lambda >= knots_[n + 1]) {
    // Last non-empty span.
    int span = n;
    while (span > degree_ && knots_[span] == knots_[span + 1]) --span;
    return span;
  }
  auto it = std::upper_bound(knots_.begin() + degree_, knots_.begin() + n + 1, lambda);
  return static_cast<int>(it - knots_.begin()) - 1;
}

void NurbsCurve::basis_derivatives(int span, double u, int order,
                                   std::vector<std::vector<double>>& ders) const {
  const int p = degree_;
  std::vector<std::vector<double>> ndu(p + 1, std::vector<double>(p + 1, 0.0));
  std::vector<double> left(p + 1), right(p + 1);
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = u - knots_[span + 1 - j];
    right[j] = knots_[span + j] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }
  ders.assign(order + 1, std::vector<double>(p + 1, 0.0));
  for (int j = 0; j <= p; ++j) ders[0][j] = ndu[j][p];

  std::vector<std::vector<double>> a(2, std::vector<double>(p + 1, 0.0));
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= order; ++k) {
      double d = 0.0;
      const int rk = r - k, pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      ders[k][r] = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= order; ++k) {
    for (int j = 0; j <= p; ++j) ders[k][j] *= factor;
    factor *= (p - k);
  }
}

Vec2 NurbsCurve::evaluate(double lambda) const {
  const double u = clamp_parameter(lambda);
  const int p = degree_;
  const int span = find_span(u);
  std::vector<Eigen::Vector3d> d(p + 1);
  for (int j = 0; j <= p; ++j) {
    const int i = span - p + j;
    d[j] << weights_[i] * points_[i].x(), weights_[i] * points_[i].y(), weights_[i];
  }
  for (int r = 1; r <= p; ++r) {
    for (int j = p; j >= r; --j) {
      const int i = span - p + j;
      const double denom = knots_[i + p - r + 1] - knots_[i];
      const double alpha = denom > 0.0 ? (u - knots_[i]) / denom : 0.0;
      d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j];
    }
  }
  return Vec2(d[p].x() / d[p].z(), d[p].y() / d[p].z());
}

Vec2 NurbsCurve::derivative(double lambda, int order) const {
  if (order < 1 || order > 2) throw ArgumentError("NURBS derivative order must be 1 or 2");
  const double u = clamp_parameter(lambda);
  const int p = degree_;
  const int span = find_span(u);
  std::vector<std::vector<double>> ders;
  basis_derivatives(span, u, std::min(order, p), ders);

  // Homogeneous derivatives A^(d) and w^(d).
  Vec2 a[3] = {Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
  double w[3] = {0.0, 0.0, 0.0};
  for (int d = 0; d <= std::min(order, p); ++d) {
    for (int j = 0; j <= p; ++j) {
      const int i = span - p + j;
      a[d] += ders[d][j] * weights_[i] * points_[i];
      w[d] += ders[d][j] * weights_[i];
    }
  }
  const Vec2 c = a[0] / w[0];
  const Vec2 c1 = (a[1] - w[1] * c) / w[0];
  if (order == 1) return c1;
  return (a[2] - 2.0 * w[1] * c1 - w[2] * c) / w[0];
}

std::vector<double> NurbsCurve::interior_breakpoints(double a, double b) const {
  std::vector<double> out;
  for (double k : knots_) {
    if (k > a && k < b && (out.empty() || k != out.back())) out.push_back(k);
  }
  return out;
}

void validate_interval(const CurveSet& curves, const ParamInterval& interval) {
  if (interval.curve_id < 0 || interval.curve_id >= static_cast<int>(curves.size()))
    throw ArgumentError("parametric interval references unknown curve " +
                        std::to_string(interval.curve_id));
  const NurbsCurve& c = curves[interval.curve_id];
  if (!(interval.lambda_a < interval.lambda_b))
    throw ArgumentError("parametric interval must satisfy lambda_a < lambda_b");
  if (interval.lambda_a < c.lambda_min() - kClampTolerance ||
      interval.lambda_b > c.lambda_max() + kClampTolerance)
    throw DomainError("parametric interval outside the curve's knot range");
}

void write_curves(std::ostream& out, const CurveSet& curves) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  for (const NurbsCurve& c : curves) {
    out << "degree " << c.degree() << "\n";
    out << "knots " << c.knots().size() << "\n";
    for (std::size_t i = 0; i < c.knots().size(); ++i)
      out << (i ? " " : "") << c.knots()[i];
    out << "\n";
    out << "points " << c.control_points().size() << "\n";
    for (std::size_t i = 0; i < c.control_points().size(); ++i)
      out << c.control_points()[i].x() << " " << c.control_points()[i].y() << " "
          << c.weights()[i] << "\n";
  }
  out.precision(old_precision);
}

namespace {

template <typename T>
T read_value(std::istream& in, const char* what) {
  T v{};
  if (!(in >> v)) throw IoError(std::string("geometry file: expected ") + what);
  return v;
}

void expect_keyword(std::istream& in, const std::string& keyword) {
  std::string word;
  if (!(in >> word) || word != keyword)
    throw IoError("geometry file: expected '" + keyword + "', got '" + word + "'");
}

// Strips '#' comments so the token reader sees only data.
std::string strip_comments(std::istream& in) {
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    out << line << "\n";
  }
  return out.str();
}

}  // namespace

CurveSet read_curves(std::istream& raw) {
  std::istringstream in(strip_comments(raw));
  CurveSet curves;
  std::string word;
  while (in >> word) {
    if (word != "degree") throw IoError("geometry file: expected 'degree', got '" + word + "'");
    const int degree = read_value<int>(in, "degree value");
    expect_keyword(in, "knots");
    const auto nknots = read_value<std::size_t>(in, "knot count");
    std::vector<double> knots(nknots);
    for (auto& k : knots) k = read_value<double>(in, "knot value");
    expect_keyword(in, "points");
    const auto npoints = read_value<std::size_t>(in, "control point count");
    std::vector<Vec2> points(npoints);
    std::vector<double> weights(npoints);
    for (std::size_t i = 0; i < npoints; ++i) {
      points[i].x() = read_value<double>(in, "x");
      points[i].y() = read_value<double>(in, "y");
      weights[i] = read_value<double>(in, "w");
    }
    curves.emplace_back(degree, std::move(knots), std::move(points), std::move(weights));
  }
  return curves;
}

void write_curves_file(const std::string& path, const CurveSet& curves) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open geometry file for writing: " + path);
  write_curves(out, curves);
  if (!out) throw IoError("failed writing geometry file: " + path);
}

CurveSet read_curves_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open geometry file: " + path);
  return read_curves(in);
}

}  // namespace hdgnefem
