#pragma once

// Independent reference computations shared by the unit, property and
// acceptance binaries.

#include "hdgnefem/adaptivity.hpp"
#include "hdgnefem/hdg.hpp"
#include "hdgnefem/mesh.hpp"
#include "hdgnefem/nurbs.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

using hdgnefem::Vec2;
using hdgnefem::Mat2;

/// Bivariate polynomial sum c_ij x^i y^j.
struct Poly2 {
  std::map<std::pair<int, int>, double> c;

  double operator()(const Vec2& x) const {
    double s = 0.0;
    for (const auto& [ij, v] : c) s += v * std::pow(x.x(), ij.first) * std::pow(x.y(), ij.second);
    return s;
  }
  Poly2 dx() const {
    Poly2 d;
    for (const auto& [ij, v] : c)
      if (ij.first > 0) d.c[{ij.first - 1, ij.second}] += v * ij.first;
    return d;
  }
  Poly2 dy() const {
    Poly2 d;
    for (const auto& [ij, v] : c)
      if (ij.second > 0) d.c[{ij.first, ij.second - 1}] += v * ij.second;
    return d;
  }
};

inline Poly2 random_poly(int degree, std::mt19937& rng) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  Poly2 p;
  for (int i = 0; i <= degree; ++i)
    for (int j = 0; i + j <= degree; ++j) p.c[{i, j}] = coef(rng);
  return p;
}

/// Divergence-free velocity u = (psi_y, -psi_x) of degree k with a degree-k
/// pressure, plus the matching vector Laplacian.
struct PolynomialStokes {
  Poly2 psi, u0, u1, p;
  hdgnefem::ExactSolution exact;
  hdgnefem::VectorField laplacian;
};

inline PolynomialStokes polynomial_stokes(int k, unsigned seed) {
  std::mt19937 rng(seed);
  PolynomialStokes s;
  s.psi = random_poly(k + 1, rng);
  s.u0 = s.psi.dy();
  s.u1 = s.psi.dx();
  for (auto& [ij, v] : s.u1.c) v = -v;
  s.p = random_poly(k, rng);
  const Poly2 u0 = s.u0, u1 = s.u1, p = s.p;
  const Poly2 u0x = u0.dx(), u0y = u0.dy(), u1x = u1.dx(), u1y = u1.dy();
  const Poly2 lap0 = u0x.dx(), lap0b = u0y.dy(), lap1 = u1x.dx(), lap1b = u1y.dy();
  const Poly2 px = p.dx(), py = p.dy();
  s.exact.u = [u0, u1](const Vec2& x) { return Vec2(u0(x), u1(x)); };
  s.exact.p = p;
  s.exact.grad_p = [px, py](const Vec2& x) { return Vec2(px(x), py(x)); };
  s.exact.grad_u = [u0x, u0y, u1x, u1y](const Vec2& x) {
    Mat2 g;
    g << u0x(x), u1x(x), u0y(x), u1y(x);
    return g;
  };
  s.laplacian = [lap0, lap0b, lap1, lap1b](const Vec2& x) {
    return Vec2(lap0(x) + lap0b(x), lap1(x) + lap1b(x));
  };
  return s;
}

/// Structured n x n triangulation of [0,1]^2. Interior vertices are moved by
/// up to `jitter` times the spacing. The bottom side is Neumann when asked.
inline hdgnefem::TriMesh square_mesh(int n, double jitter = 0.0, bool neumann_bottom = false,
                                     unsigned seed = 7) {
  using namespace hdgnefem;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-jitter, jitter);
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<Vec2> v((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      Vec2 x(double(i) / n, double(j) / n);
      if (i > 0 && i < n && j > 0 && j < n) x += Vec2(d(rng), d(rng)) / n;
      v[id(i, j)] = x;
    }
  std::vector<Triangle> tri;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      tri.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tri.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  std::vector<BoundarySegment> b;
  const BoundaryTag bottom = neumann_bottom ? BoundaryTag::Neumann : BoundaryTag::Dirichlet;
  for (int i = 0; i < n; ++i) {
    b.push_back({id(i, 0), id(i + 1, 0), bottom, std::nullopt});
    b.push_back({id(i + 1, n), id(i, n), BoundaryTag::Dirichlet, std::nullopt});
    b.push_back({id(n, i), id(n, i + 1), BoundaryTag::Dirichlet, std::nullopt});
    b.push_back({id(0, i + 1), id(0, i), BoundaryTag::Dirichlet, std::nullopt});
  }
  return TriMesh(v, tri, b);
}

/// Rational quadratic circle of radius r about c, 4 quarter spans on [0, 1].
inline hdgnefem::NurbsCurve circle_curve(const Vec2& c, double r) {
  const double w = std::sqrt(0.5);
  std::vector<Vec2> cp{{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {1, 0}};
  for (Vec2& p : cp) p = c + r * p;
  return hdgnefem::NurbsCurve(2, {0, 0, 0, 0.25, 0.25, 0.5, 0.5, 0.75, 0.75, 1, 1, 1}, cp,
                              {1, w, 1, w, 1, w, 1, w, 1});
}

/// Disc split into `sectors` triangles around its centre; every boundary
/// edge is a curved arc of the circle. Tag applies to all of them.
inline hdgnefem::TriMesh pie_mesh(int sectors, const Vec2& c = Vec2(0.5, 0.5), double r = 0.5,
                                  hdgnefem::BoundaryTag tag = hdgnefem::BoundaryTag::Dirichlet) {
  using namespace hdgnefem;
  auto curves = std::make_shared<CurveSet>();
  curves->push_back(circle_curve(c, r));
  std::vector<Vec2> v{c};
  for (int i = 0; i < sectors; ++i) v.push_back(curves->front().evaluate(double(i) / sectors));
  std::vector<Triangle> tri;
  std::vector<BoundarySegment> b;
  for (int i = 0; i < sectors; ++i) {
    const int a = 1 + i, bb = 1 + (i + 1) % sectors;
    tri.push_back({0, a, bb});
    b.push_back({a, bb, tag, ParamInterval{0, double(i) / sectors, double(i + 1) / sectors}});
  }
  return TriMesh(v, tri, b, curves);
}

/// Integral of x^a y^b over the reference triangle: a! b! / (a + b + 2)!.
inline long double monomial_integral(int a, int b) {
  return std::tgamma((long double)a + 1) * std::tgamma((long double)b + 1) /
         std::tgamma((long double)a + b + 3);
}

/// Richardson degree update evaluated in extended precision, with the same
/// integer snapping band as the library contract.
inline int degree_increment_reference(long double E, long double eps, long double h,
                                      int zero_estimate) {
  if (E == 0.0L) return zero_estimate;
  long double r = std::log(eps / E) / std::log(h);
  const long double nearest = std::round(r);
  if (std::fabs(r - nearest) < 1e-9L) r = nearest;
  return static_cast<int>(std::ceil(r));
}

/// Element unknowns and face traces from one monolithic solve of the local
/// and global equations (no condensation).
struct MonolithicResult {
  std::vector<Eigen::VectorXd> z;       ///< per element, (L, u, p, zeta)
  std::vector<double> rho;
  std::vector<Eigen::VectorXd> traces;  ///< per face, empty on Dirichlet faces
};

inline MonolithicResult monolithic_solve(const hdgnefem::GeometryBackend& geo,
                                         const hdgnefem::ProblemSpec& spec,
                                         const hdgnefem::SolverConfig& config,
                                         const hdgnefem::DegreeMap& degrees) {
  using namespace hdgnefem;
  const TriMesh& mesh = geo.mesh();
  const int ne = mesh.num_elements();
  std::vector<LocalSystem> local;
  std::vector<int> zoff(ne);
  int nz = 0;
  for (int e = 0; e < ne; ++e) {
    local.push_back(assemble_local(geo, e, degrees, spec, config));
    zoff[e] = nz;
    nz += local.back().size();
  }
  const GlobalLayout layout = global_layout(mesh, degrees);
  const int N = nz + layout.size;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(N);
  for (int e = 0; e < ne; ++e) {
    const LocalSystem& ls = local[e];
    const int m = ls.size();
    const int r0 = zoff[e];
    const int rho = nz + layout.rho_offset + e;
    M.block(r0, r0, m, m) = ls.A;
    b.segment(r0, m) = ls.f;
    M(r0 + ls.zeta_index(), rho) -= 1.0;
    b(rho) = ls.g;
    if (layout.multiplier >= 0) {
      M(rho, nz + layout.multiplier) = 1.0;
      M.block(nz + layout.multiplier, r0 + ls.p_offset(), 1, ls.n) += ls.pressure_row.transpose();
      b(nz + layout.multiplier) += ls.pressure_target;
    }
    for (int j = 0; j < 3; ++j) {
      if (ls.dirichlet[j]) continue;
      const int f = ls.face[j];
      const int c0 = nz + layout.face_offset[f];
      const int len = 2 * (layout.face_k[f] + 1);
      M.block(r0, c0, m, len) -= ls.B[j];
      M.block(c0, r0, len, m) += ls.R[j];
      M.block(c0, c0, len, len) -= ls.T[j];
      b.segment(c0, len) += ls.h[j];
      M.block(rho, c0, 1, len) += ls.P[j];
    }
  }
  const Eigen::VectorXd x = M.fullPivLu().solve(b);
  MonolithicResult out;
  for (int e = 0; e < ne; ++e) {
    out.z.push_back(x.segment(zoff[e], local[e].size()));
    out.rho.push_back(x(nz + layout.rho_offset + e));
  }
  out.traces.resize(mesh.num_faces());
  for (int f = 0; f < mesh.num_faces(); ++f)
    if (layout.face_offset[f] >= 0)
      out.traces[f] = x.segment(nz + layout.face_offset[f], 2 * (layout.face_k[f] + 1));
  return out;
}

/// Element unknowns of a solution stacked as (L, u, p, zeta).
inline Eigen::VectorXd element_vector(const hdgnefem::ElementSolution& es) {
  const int n = static_cast<int>(es.p.size());
  Eigen::VectorXd z(7 * n + 1);
  z.head(4 * n) = Eigen::Map<const Eigen::VectorXd>(es.L.data(), 4 * n);
  z.segment(4 * n, 2 * n) = Eigen::Map<const Eigen::VectorXd>(es.u.data(), 2 * n);
  z.segment(6 * n, n) = es.p;
  z(7 * n) = es.zeta;
  return z;
}

/// Largest relative difference between a condensed solution and the
/// monolithic reference over all element unknowns and non-Dirichlet traces.
inline double monolithic_mismatch(const hdgnefem::HdgSolution& sol, const MonolithicResult& ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t e = 0; e < sol.elements.size(); ++e) {
    const hdgnefem::ElementSolution& es = sol.elements[e];
    const Eigen::VectorXd z = element_vector(es);
    num = std::max(num, (z - ref.z[e]).lpNorm<Eigen::Infinity>());
    num = std::max(num, std::abs(es.rho - ref.rho[e]));
    den = std::max(den, ref.z[e].lpNorm<Eigen::Infinity>());
  }
  for (std::size_t f = 0; f < ref.traces.size(); ++f) {
    if (ref.traces[f].size() == 0) continue;
    num = std::max(num, (sol.traces[f] - ref.traces[f]).lpNorm<Eigen::Infinity>());
    den = std::max(den, ref.traces[f].lpNorm<Eigen::Infinity>());
  }
  return den > 0.0 ? num / den : num;
}

/// Largest nodal deviation of (L, u, p) from (-grad u, u, p).
inline double max_nodal_error(const hdgnefem::HdgSolution& sol, const hdgnefem::ExactSolution& ex) {
  double err = 0.0;
  const hdgnefem::GeometryBackend& geo = *sol.geometry;
  for (std::size_t e = 0; e < sol.elements.size(); ++e) {
    const hdgnefem::ElementSolution& es = sol.elements[e];
    const std::vector<Vec2> nodes = geo.nodal_points(static_cast<int>(e), es.k);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const Eigen::Index r = static_cast<Eigen::Index>(i);
      const Vec2 u = ex.u(nodes[i]);
      const Mat2 g = ex.grad_u(nodes[i]);
      err = std::max(err, std::abs(es.u(r, 0) - u(0)));
      err = std::max(err, std::abs(es.u(r, 1) - u(1)));
      err = std::max(err, std::abs(es.p(r) - ex.p(nodes[i])));
      for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 2; ++c) err = std::max(err, std::abs(es.L(r, 2 * a + c) + g(a, c)));
    }
  }
  return err;
}

}  // namespace oracle
