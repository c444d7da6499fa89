#include "hdgnefem/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace hdgnefem {

namespace {

void check_weights(const std::vector<double>& weights, const char* what) {
  for (double w : weights)
    if (!(w > 0.0)) throw Error(std::string(what) + ": generated a non-positive weight");
}

// Gauss-Legendre on [-1, 1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0, p1 = 0.0;
    for (int j = 0; j < n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
}

}  // namespace

const QuadratureRule1D& gauss_segment(int n) {
  if (n < 1 || n > 64) throw ArgumentError("gauss_segment: n must be in [1, 64]");
  static std::mutex mutex;
  static std::map<int, QuadratureRule1D> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  QuadratureRule1D rule;
  rule.exactness = 2 * n - 1;
  for (int i = 0; i < n; ++i) {
    rule.points.push_back(0.5 * (x[i] + 1.0));
    rule.weights.push_back(0.5 * w[i]);
  }
  check_weights(rule.weights, "gauss_segment");
  return cache.emplace(n, std::move(rule)).first->second;
}

QuadratureRule1D gauss_jacobi(int n, double alpha, double beta) {
  if (n < 1) throw ArgumentError("gauss_jacobi: n must be positive");
  Eigen::MatrixXd jm = Eigen::MatrixXd::Zero(n, n);
  const double ab = alpha + beta;
  for (int i = 0; i < n; ++i) {
    const double two = 2.0 * i + ab;
    if (i == 0)
      jm(0, 0) = (beta - alpha) / (ab + 2.0);
    else
      jm(i, i) = (beta * beta - alpha * alpha) / (two * (two + 2.0));
    if (i + 1 < n) {
      const double k = i + 1.0;
      const double t = 2.0 * k + ab;
      const double b = std::sqrt(4.0 * k * (k + alpha) * (k + beta) * (k + ab) /
                                 (t * t * (t + 1.0) * (t - 1.0)));
      jm(i, i + 1) = jm(i + 1, i) = b;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jm);
  const double mu0 = std::pow(2.0, ab + 1.0) * std::tgamma(alpha + 1.0) *
                     std::tgamma(beta + 1.0) / std::tgamma(ab + 2.0);
  QuadratureRule1D rule;
  rule.exactness = 2 * n - 1;
  for (int i = 0; i < n; ++i) {
    rule.points.push_back(eig.eigenvalues()(i));
    const double v0 = eig.eigenvectors()(0, i);
    rule.weights.push_back(mu0 * v0 * v0);
  }
  check_weights(rule.weights, "gauss_jacobi");
  return rule;
}

const QuadratureRule2D& triangle_rule(int degree) {
  if (degree < 0) throw ArgumentError("triangle_rule: degree must be non-negative");
  static std::mutex mutex;
  static std::map<int, QuadratureRule2D> cache;
  {
    std::lock_guard lock(mutex);
    auto it = cache.find(degree);
    if (it != cache.end()) return it->second;
  }
  const int n = (degree + 2) / 2;
  const QuadratureRule1D& gu = gauss_segment(n);
  // Weight (1 - v) from the collapse, mapped from [-1, 1] to [0, 1].
  const QuadratureRule1D gv = gauss_jacobi(n, 1.0, 0.0);
  QuadratureRule2D rule;
  rule.exactness = degree;
  for (int j = 0; j < n; ++j) {
    const double v = 0.5 * (gv.points[j] + 1.0);
    const double wv = 0.25 * gv.weights[j];
    for (int i = 0; i < n; ++i) {
      const double u = gu.points[i];
      rule.points.emplace_back(u * (1.0 - v), v);
      rule.weights.push_back(gu.weights[i] * wv);
    }
  }
  check_weights(rule.weights, "triangle_rule");
  std::lock_guard lock(mutex);
  return cache.emplace(degree, std::move(rule)).first->second;
}

int nefem_default_n1(int k, int q_curve) { return (2 * k + q_curve + 2 + 1) / 2; }
int nefem_default_n2(int k) { return k + 2; }

namespace {

std::vector<double> split_points(const NurbsCurve& curve, const ParamInterval& iv) {
  std::vector<double> cuts{iv.lambda_a};
  for (double b : curve.interior_breakpoints(iv.lambda_a, iv.lambda_b)) cuts.push_back(b);
  cuts.push_back(iv.lambda_b);
  return cuts;
}

}  // namespace

PhysicalRule nefem_element_rule(const NefemChart& chart, int k, NefemRuleOptions options) {
  const int n1 = options.n1 > 0 ? options.n1 : nefem_default_n1(k, chart.curve().degree());
  const int n2 = options.n2 > 0 ? options.n2 : nefem_default_n2(k);
  const QuadratureRule1D& g1 = gauss_segment(n1);
  const QuadratureRule1D& g2 = gauss_segment(n2);
  const std::vector<double> cuts = split_points(chart.curve(), chart.interval());
  PhysicalRule rule;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s], len = cuts[s + 1] - cuts[s];
    for (int i = 0; i < n1; ++i) {
      const double l1 = a + len * g1.points[i];
      for (int j = 0; j < n2; ++j) {
        const double l2 = g2.points[j];
        const auto [x, jac] = chart.map(l1, l2);
        const double det = jac.determinant() * chart.orientation();
        if (!(det > 0.0))
          throw GeometryError("NEFEM chart has non-positive Jacobian at a quadrature point");
        rule.points.push_back(x);
        rule.weights.push_back(g1.weights[i] * len * g2.weights[j] * det);
      }
    }
  }
  return rule;
}

CurveFaceRule nefem_face_rule(const NurbsCurve& curve, const ParamInterval& interval, int k_hat,
                              int n) {
  if (n <= 0) n = (2 * k_hat + curve.degree() + 2 + 1) / 2;
  const QuadratureRule1D& g = gauss_segment(n);
  const std::vector<double> cuts = split_points(curve, interval);
  CurveFaceRule rule;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s], len = cuts[s + 1] - cuts[s];
    for (int i = 0; i < n; ++i) {
      const double l = a + len * g.points[i];
      const Vec2 d = curve.derivative(l, 1);
      rule.lambdas.push_back(l);
      rule.points.push_back(curve.evaluate(l));
      rule.tangents.push_back(d);
      rule.weights.push_back(g.weights[i] * len * d.norm());
    }
  }
  return rule;
}

}  // namespace hdgnefem
