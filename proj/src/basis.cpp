#include "hdgnefem/basis.hpp"

#include "hdgnefem/quadrature.hpp"

#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace hdgnefem {

namespace {

constexpr double kMaxCondition = 1e12;

double condition_number(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / s(s.size() - 1);
}

// Normalised Legendre polynomial on [-1, 1] and its derivative.
void legendre(int n, double x, Eigen::Ref<Eigen::VectorXd> p, Eigen::Ref<Eigen::VectorXd> dp) {
  for (int i = 0; i <= n; ++i) {
    p(i) = jacobi_p(x, 0.0, 0.0, i);
    dp(i) = grad_jacobi_p(x, 0.0, 0.0, i);
  }
}

double warp_factor(int n, double r) {
  const std::vector<double> gll = gll_nodes(n);
  // Lagrange interpolant through equispaced nodes of the GLL displacement.
  double warp = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double ri = -1.0 + 2.0 * i / n;
    double li = 1.0;
    for (int j = 0; j <= n; ++j) {
      if (j == i) continue;
      const double rj = -1.0 + 2.0 * j / n;
      li *= (r - rj) / (ri - rj);
    }
    warp += li * ((2.0 * gll[i] - 1.0) - ri);
  }
  if (std::abs(r) < 1.0 - 1e-10) {
    warp /= 1.0 - r * r;
  } else {
    warp = 0.0;
  }
  return warp;
}

}  // namespace

double jacobi_p(double x, double alpha, double beta, int n) {
  const double gamma0 = std::pow(2.0, alpha + beta + 1.0) / (alpha + beta + 1.0) *
                        std::tgamma(alpha + 1.0) * std::tgamma(beta + 1.0) /
                        std::tgamma(alpha + beta + 1.0);
  double p0 = 1.0 / std::sqrt(gamma0);
  if (n == 0) return p0;
  const double gamma1 = (alpha + 1.0) * (beta + 1.0) / (alpha + beta + 3.0) * gamma0;
  double p1 = ((alpha + beta + 2.0) * x / 2.0 + (alpha - beta) / 2.0) / std::sqrt(gamma1);
  if (n == 1) return p1;
  double aold = 2.0 / (2.0 + alpha + beta) *
                std::sqrt((alpha + 1.0) * (beta + 1.0) / (alpha + beta + 3.0));
  for (int i = 1; i < n; ++i) {
    const double h1 = 2.0 * i + alpha + beta;
    const double anew = 2.0 / (h1 + 2.0) *
                        std::sqrt((i + 1.0) * (i + 1.0 + alpha + beta) * (i + 1.0 + alpha) *
                                  (i + 1.0 + beta) / (h1 + 1.0) / (h1 + 3.0));
    const double bnew = -(alpha * alpha - beta * beta) / h1 / (h1 + 2.0);
    const double p2 = (-aold * p0 + (x - bnew) * p1) / anew;
    p0 = p1;
    p1 = p2;
    aold = anew;
  }
  return p1;
}

double grad_jacobi_p(double x, double alpha, double beta, int n) {
  if (n == 0) return 0.0;
  return std::sqrt(n * (n + alpha + beta + 1.0)) * jacobi_p(x, alpha + 1.0, beta + 1.0, n - 1);
}

std::vector<double> gll_nodes(int k) {
  if (k < 1) throw ArgumentError("gll_nodes: degree must be at least 1");
  std::vector<double> nodes{0.0};
  if (k > 1) {
    const QuadratureRule1D inner = gauss_jacobi(k - 1, 1.0, 1.0);
    for (double t : inner.points) nodes.push_back(0.5 * (t + 1.0));
  }
  nodes.push_back(1.0);
  return nodes;
}

std::vector<Vec2> warp_blend_nodes(int k) {
  if (k < 1) throw ArgumentError("warp_blend_nodes: degree must be at least 1");
  static constexpr std::array<double, 15> kAlphaOpt = {
      0.0000, 0.0000, 1.4152, 0.1001, 0.2751, 0.9800, 1.0999, 1.2832,
      1.3648, 1.4773, 1.4959, 1.5743, 1.5770, 1.6223, 1.6258};
  const double alpha = k <= 15 ? kAlphaOpt[k - 1] : 5.0 / 3.0;
  const double sqrt3 = std::sqrt(3.0);
  const double c2 = std::cos(2.0 * std::numbers::pi / 3.0), s2 = std::sin(2.0 * std::numbers::pi / 3.0);
  const double c4 = std::cos(4.0 * std::numbers::pi / 3.0), s4 = std::sin(4.0 * std::numbers::pi / 3.0);

  std::vector<Vec2> nodes;
  nodes.reserve(triangle_node_count(k));
  for (int j = 0; j <= k; ++j) {
    for (int i = 0; i <= k - j; ++i) {
      const double l1 = static_cast<double>(j) / k;
      const double l3 = static_cast<double>(i) / k;
      const double l2 = 1.0 - l1 - l3;
      double x = -l2 + l3;
      double y = (-l2 - l3 + 2.0 * l1) / sqrt3;
      const double blend1 = 4.0 * l2 * l3, blend2 = 4.0 * l1 * l3, blend3 = 4.0 * l1 * l2;
      const double w1 = blend1 * warp_factor(k, l3 - l2) * (1.0 + (alpha * l1) * (alpha * l1));
      const double w2 = blend2 * warp_factor(k, l1 - l3) * (1.0 + (alpha * l2) * (alpha * l2));
      const double w3 = blend3 * warp_factor(k, l2 - l1) * (1.0 + (alpha * l3) * (alpha * l3));
      x += w1 + c2 * w2 + c4 * w3;
      y += s2 * w2 + s4 * w3;
      // Equilateral -> biunit right triangle -> unit reference triangle.
      const double m1 = (sqrt3 * y + 1.0) / 3.0;
      const double m2 = (-3.0 * x - sqrt3 * y + 2.0) / 6.0;
      const double m3 = (3.0 * x - sqrt3 * y + 2.0) / 6.0;
      const double r = -m2 + m3 - m1;
      const double s = -m2 - m3 + m1;
      nodes.emplace_back(0.5 * (r + 1.0), 0.5 * (s + 1.0));
    }
  }
  // Snap vertices exactly.
  nodes[lattice_index(k, 0, 0)] = Vec2(0.0, 0.0);
  nodes[lattice_index(k, k, 0)] = Vec2(1.0, 0.0);
  nodes[lattice_index(k, 0, k)] = Vec2(0.0, 1.0);
  return nodes;
}

void dubiner_modes(int k, const Vec2& xi, Eigen::Ref<Eigen::VectorXd> values,
                   Eigen::Ref<Eigen::MatrixXd> gradients) {
  const double r = 2.0 * xi.x() - 1.0;
  const double s = 2.0 * xi.y() - 1.0;
  const double a = (s < 1.0 - 1e-14) ? 2.0 * (1.0 + r) / (1.0 - s) - 1.0 : -1.0;
  const double b = s;
  int m = 0;
  for (int i = 0; i <= k; ++i) {
    for (int j = 0; j <= k - i; ++j, ++m) {
      const double fa = jacobi_p(a, 0.0, 0.0, i);
      const double dfa = grad_jacobi_p(a, 0.0, 0.0, i);
      const double gb = jacobi_p(b, 2.0 * i + 1.0, 0.0, j);
      const double dgb = grad_jacobi_p(b, 2.0 * i + 1.0, 0.0, j);
      const double half = 0.5 * (1.0 - b);
      values(m) = std::sqrt(2.0) * fa * gb * std::pow(1.0 - b, i);
      double dr = dfa * gb;
      double ds = dfa * gb * 0.5 * (1.0 + a);
      if (i > 0) {
        const double hp = std::pow(half, i - 1);
        dr *= hp;
        ds *= hp;
      }
      double tmp = dgb * std::pow(half, i);
      if (i > 0) tmp -= 0.5 * i * gb * std::pow(half, i - 1);
      ds += fa * tmp;
      const double scale = std::pow(2.0, i + 0.5);
      // Chain rule to (xi, eta): d/dxi = 2 d/dr.
      gradients(m, 0) = 2.0 * scale * dr;
      gradients(m, 1) = 2.0 * scale * ds;
    }
  }
}

ReferenceBasis::ReferenceBasis(int k) : k_(k), nodes_(warp_blend_nodes(k)) {
  const int n = size();
  Eigen::MatrixXd v(n, n);
  Eigen::VectorXd psi(n);
  Eigen::MatrixXd grad(n, 2);
  for (int i = 0; i < n; ++i) {
    dubiner_modes(k, nodes_[i], psi, grad);
    v.row(i) = psi.transpose();
  }
  condition_ = condition_number(v);
  if (!(condition_ < kMaxCondition))
    throw BasisError("reference Vandermonde is ill-conditioned for degree " + std::to_string(k));
  inv_vt_ = v.transpose().inverse();
}

void ReferenceBasis::evaluate(const Vec2& xi, Eigen::Ref<Eigen::VectorXd> values,
                              Eigen::Ref<Eigen::MatrixXd> gradients) const {
  const int n = size();
  Eigen::VectorXd psi(n);
  Eigen::MatrixXd grad(n, 2);
  dubiner_modes(k_, xi, psi, grad);
  values = inv_vt_ * psi;
  gradients = inv_vt_ * grad;
}

BasisTable ReferenceBasis::tabulate(std::span<const Vec2> points) const {
  const int n = size();
  const int np = static_cast<int>(points.size());
  BasisTable t{Eigen::MatrixXd(np, n), Eigen::MatrixXd(np, n), Eigen::MatrixXd(np, n)};
  Eigen::VectorXd v(n);
  Eigen::MatrixXd g(n, 2);
  for (int q = 0; q < np; ++q) {
    evaluate(points[q], v, g);
    t.values.row(q) = v.transpose();
    t.dx.row(q) = g.col(0).transpose();
    t.dy.row(q) = g.col(1).transpose();
  }
  return t;
}

const ReferenceBasis& reference_basis(int k) {
  if (k < 1 || k > kMaxBasisDegree)
    throw ArgumentError("reference basis degree " + std::to_string(k) + " out of range");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<ReferenceBasis>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[k];
  if (!slot) slot = std::make_unique<ReferenceBasis>(k);
  return *slot;
}

PhysicalBasis::PhysicalBasis(int k, std::vector<Vec2> nodes) : k_(k), nodes_(std::move(nodes)) {
  if (k < 1) throw ArgumentError("physical basis degree must be at least 1");
  const int n = triangle_node_count(k);
  if (static_cast<int>(nodes_.size()) != n)
    throw ArgumentError("physical basis needs (k+1)(k+2)/2 nodes");
  Vec2 lo = nodes_[0], hi = nodes_[0];
  for (const Vec2& p : nodes_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  center_ = 0.5 * (lo + hi);
  half_width_ = 0.5 * (hi - lo);
  if (!(half_width_.minCoeff() > 0.0)) throw BasisError("physical nodal set is degenerate");
  Eigen::MatrixXd v(n, n);
  Eigen::VectorXd psi(n);
  Eigen::MatrixXd grad(n, 2);
  for (int i = 0; i < n; ++i) {
    modes(nodes_[i], psi, grad);
    v.row(i) = psi.transpose();
  }
  condition_ = condition_number(v);
  if (!(condition_ < kMaxCondition))
    throw BasisError("physical Vandermonde is ill-conditioned (clustered nodes?)");
  inv_vt_ = v.transpose().inverse();
}

void PhysicalBasis::modes(const Vec2& x, Eigen::Ref<Eigen::VectorXd> values,
                          Eigen::Ref<Eigen::MatrixXd> gradients) const {
  const double X = (x.x() - center_.x()) / half_width_.x();
  const double Y = (x.y() - center_.y()) / half_width_.y();
  Eigen::VectorXd px(k_ + 1), dpx(k_ + 1), py(k_ + 1), dpy(k_ + 1);
  legendre(k_, X, px, dpx);
  legendre(k_, Y, py, dpy);
  int m = 0;
  for (int i = 0; i <= k_; ++i) {
    for (int j = 0; j <= k_ - i; ++j, ++m) {
      values(m) = px(i) * py(j);
      gradients(m, 0) = dpx(i) * py(j) / half_width_.x();
      gradients(m, 1) = px(i) * dpy(j) / half_width_.y();
    }
  }
}

void PhysicalBasis::evaluate(const Vec2& x, Eigen::Ref<Eigen::VectorXd> values,
                             Eigen::Ref<Eigen::MatrixXd> gradients) const {
  const int n = size();
  Eigen::VectorXd psi(n);
  Eigen::MatrixXd grad(n, 2);
  modes(x, psi, grad);
  values = inv_vt_ * psi;
  gradients = inv_vt_ * grad;
}

BasisTable PhysicalBasis::tabulate(std::span<const Vec2> points) const {
  const int n = size();
  const int np = static_cast<int>(points.size());
  BasisTable t{Eigen::MatrixXd(np, n), Eigen::MatrixXd(np, n), Eigen::MatrixXd(np, n)};
  Eigen::VectorXd psi(n);
  Eigen::MatrixXd grad(n, 2);
  for (int q = 0; q < np; ++q) {
    modes(points[q], psi, grad);
    t.values.row(q) = (inv_vt_ * psi).transpose();
    t.dx.row(q) = (inv_vt_ * grad.col(0)).transpose();
    t.dy.row(q) = (inv_vt_ * grad.col(1)).transpose();
  }
  return t;
}

TraceBasis::TraceBasis(int k_hat) : k_(k_hat), nodes_(gll_nodes(k_hat)) {
  const int n = size();
  Eigen::MatrixXd v(n, n);
  Eigen::VectorXd p(n), dp(n);
  for (int i = 0; i < n; ++i) {
    legendre(k_, 2.0 * nodes_[i] - 1.0, p, dp);
    v.row(i) = p.transpose();
  }
  inv_vt_ = v.transpose().inverse();
}

Eigen::VectorXd TraceBasis::values(double s) const {
  Eigen::VectorXd p(size()), dp(size());
  legendre(k_, 2.0 * s - 1.0, p, dp);
  return inv_vt_ * p;
}

Eigen::VectorXd TraceBasis::derivatives(double s) const {
  Eigen::VectorXd p(size()), dp(size());
  legendre(k_, 2.0 * s - 1.0, p, dp);
  return 2.0 * (inv_vt_ * dp);
}

const TraceBasis& trace_basis(int k_hat) {
  if (k_hat < 1 || k_hat > kMaxBasisDegree)
    throw ArgumentError("trace basis degree " + std::to_string(k_hat) + " out of range");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<TraceBasis>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[k_hat];
  if (!slot) slot = std::make_unique<TraceBasis>(k_hat);
  return *slot;
}

std::pair<Vec2, Mat2> isoparametric_map(std::span<const Vec2> geometry_nodes, int q,
                                        const Vec2& xi) {
  const ReferenceBasis& basis = reference_basis(q);
  if (static_cast<int>(geometry_nodes.size()) != basis.size())
    throw ArgumentError("isoparametric map: wrong number of geometry nodes");
  Eigen::VectorXd v(basis.size());
  Eigen::MatrixXd g(basis.size(), 2);
  basis.evaluate(xi, v, g);
  Vec2 x = Vec2::Zero();
  Mat2 jac = Mat2::Zero();
  for (int j = 0; j < basis.size(); ++j) {
    x += v(j) * geometry_nodes[j];
    jac.col(0) += g(j, 0) * geometry_nodes[j];
    jac.col(1) += g(j, 1) * geometry_nodes[j];
  }
  if (!(jac.determinant() > 0.0))
    throw GeometryError("isoparametric map has non-positive Jacobian (inverted element)");
  return {x, jac};
}

Vec2 reference_edge_point(int edge, double t) {
  switch (edge) {
    case 0: return Vec2(t, 0.0);
    case 1: return Vec2(1.0 - t, t);
    case 2: return Vec2(0.0, 1.0 - t);
  }
  throw ArgumentError("local edge index must be 0, 1 or 2");
}

Vec2 reference_edge_tangent(int edge) {
  switch (edge) {
    case 0: return Vec2(1.0, 0.0);
    case 1: return Vec2(-1.0, 1.0);
    case 2: return Vec2(0.0, -1.0);
  }
  throw ArgumentError("local edge index must be 0, 1 or 2");
}

std::pair<double, double> nefem_reference_to_chart(const NefemChart& chart, int curved_edge,
                                                   const Vec2& xi) {
  const std::array<double, 3> bary = {1.0 - xi.x() - xi.y(), xi.x(), xi.y()};
  const double ba = bary[curved_edge];
  const double bb = bary[(curved_edge + 1) % 3];
  const double bc = bary[(curved_edge + 2) % 3];
  const double t = (ba + bb) > 1e-14 ? bb / (ba + bb) : 0.0;
  return {chart.edge_lambda(t), bc};
}

std::vector<Vec2> nefem_nodal_set(const NefemChart& chart, int curved_edge, int k) {
  const std::vector<Vec2>& ref = reference_basis(k).nodes();
  std::vector<Vec2> out;
  out.reserve(ref.size());
  for (const Vec2& xi : ref) {
    const auto [l1, l2] = nefem_reference_to_chart(chart, curved_edge, xi);
    out.push_back(chart.map(l1, l2).first);
  }
  return out;
}

}  // namespace hdgnefem
