#include "hdgnefem/benchmarks.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hdgnefem {

namespace {

// X(x) = x^2 (1 - x)^2 and its derivatives.
double q0(double x) { return x * x * (1.0 - x) * (1.0 - x); }
double q1(double x) { return 2.0 * x - 6.0 * x * x + 4.0 * x * x * x; }
double q2(double x) { return 2.0 - 12.0 * x + 12.0 * x * x; }
double q3(double x) { return -12.0 + 24.0 * x; }

}  // namespace

ExactSolution stream_function_solution() {
  ExactSolution ex;
  ex.u = [](const Vec2& x) {
    return Vec2(q0(x.x()) * q1(x.y()), -q1(x.x()) * q0(x.y()));
  };
  ex.p = [](const Vec2& x) { return x.x() * (1.0 - x.x()); };
  ex.grad_p = [](const Vec2& x) { return Vec2(1.0 - 2.0 * x.x(), 0.0); };
  ex.grad_u = [](const Vec2& x) {
    const double X0 = q0(x.x()), X1 = q1(x.x()), X2 = q2(x.x());
    const double Y0 = q0(x.y()), Y1 = q1(x.y()), Y2 = q2(x.y());
    Mat2 g;
    g << X1 * Y1, -X2 * Y0,
         X0 * Y2, -X1 * Y1;
    return g;
  };
  return ex;
}

namespace {

Vec2 stream_function_laplacian(const Vec2& x) {
  const double X0 = q0(x.x()), X1 = q1(x.x()), X2 = q2(x.x()), X3 = q3(x.x());
  const double Y0 = q0(x.y()), Y1 = q1(x.y()), Y2 = q2(x.y()), Y3 = q3(x.y());
  return Vec2(X2 * Y1 + X0 * Y3, -(X3 * Y0 + X1 * Y2));
}

}  // namespace

ProblemSpec problem_from_exact(const ExactSolution& exact, const VectorField& laplacian, double nu) {
  ProblemSpec spec;
  spec.nu = nu;
  if (!exact.grad_p) throw ArgumentError("problem_from_exact: pressure gradient required");
  spec.body_force = [exact, laplacian, nu](const Vec2& x) {
    return Vec2(-nu * laplacian(x) + exact.grad_p(x));
  };
  spec.dirichlet = exact.u;
  spec.traction = [exact, nu](const Vec2& x, const Vec2& n) {
    return Vec2(nu * exact.grad_u(x).transpose() * n - exact.p(x) * n);
  };
  spec.pressure_reference = exact.p;
  return spec;
}

double strong_form_residual(const Benchmark& b, const std::vector<Vec2>& points, double step) {
  static constexpr std::array<double, 7> d1{-1.0 / 60, 9.0 / 60, -45.0 / 60, 0.0,
                                            45.0 / 60, -9.0 / 60, 1.0 / 60};
  static constexpr std::array<double, 7> d2{2.0 / 180,    -27.0 / 180, 270.0 / 180, -490.0 / 180,
                                            270.0 / 180,  -27.0 / 180, 2.0 / 180};
  double worst = 0.0;
  for (const Vec2& x : points) {
    Vec2 lap = Vec2::Zero(), gp = Vec2::Zero();
    double div = 0.0;
    for (int a = 0; a < 2; ++a) {
      const Vec2 e = Vec2::Unit(a) * step;
      for (int i = 0; i < 7; ++i) {
        const Vec2 xi = x + (i - 3) * e;
        const Vec2 u = b.exact.u(xi);
        lap += d2[i] * u / (step * step);
        div += d1[i] * u(a) / step;
        gp(a) += d1[i] * b.exact.p(xi) / step;
      }
    }
    const Vec2 mom = -b.spec.nu * lap + gp - b.spec.body_force(x);
    worst = std::max({worst, std::abs(div), mom.norm()});
  }
  return worst;
}

Benchmark benchmark_circle() {
  const double r2 = std::sqrt(2.0) / 2.0;
  std::vector<Vec2> cp{{1.0, 0.5}, {1.0, 1.0}, {0.5, 1.0}, {0.0, 1.0}, {0.0, 0.5},
                       {0.0, 0.0}, {0.5, 0.0}, {1.0, 0.0}, {1.0, 0.5}};
  std::vector<double> w{1.0, r2, 1.0, r2, 1.0, r2, 1.0, r2, 1.0};
  std::vector<double> knots{0, 0, 0, 0.25, 0.25, 0.5, 0.5, 0.75, 0.75, 1, 1, 1};
  auto curves = std::make_shared<CurveSet>();
  curves->emplace_back(2, knots, cp, w);
  const NurbsCurve& c = curves->front();

  const Vec2 center(0.5, 0.5);
  std::vector<Vec2> v{center};
  for (int m = 0; m < 6; ++m) {
    const Vec2 d = c.evaluate(2.0 * m / 12.0) - center;
    v.push_back(center + 0.25 * d.normalized());
  }
  for (int i = 0; i < 12; ++i) v.push_back(c.evaluate(i / 12.0));
  auto hex = [](int m) { return 1 + (m % 6); };
  auto bnd = [](int i) { return 7 + (i % 12); };
  std::vector<Triangle> tri;
  for (int m = 0; m < 6; ++m) {
    tri.push_back({0, hex(m), hex(m + 1)});
    tri.push_back({hex(m), bnd(2 * m), bnd(2 * m + 1)});
    tri.push_back({hex(m), bnd(2 * m + 1), hex(m + 1)});
    tri.push_back({hex(m + 1), bnd(2 * m + 1), bnd(2 * m + 2)});
  }
  for (Triangle& t : tri)
    if (cross(v[t[1]] - v[t[0]], v[t[2]] - v[t[0]]) < 0.0) std::swap(t[1], t[2]);
  std::vector<BoundarySegment> boundary;
  for (int i = 0; i < 12; ++i)
    boundary.push_back({bnd(i), bnd(i + 1), BoundaryTag::Dirichlet,
                        ParamInterval{0, i / 12.0, (i + 1) / 12.0}});

  Benchmark b;
  b.name = "circle";
  b.curves = curves;
  b.coarse = std::make_shared<TriMesh>(v, tri, boundary, curves);
  b.exact = stream_function_solution();
  b.spec = problem_from_exact(b.exact, stream_function_laplacian, 1.0);
  return b;
}

double wavy_wall(double x) { return (1.0 + std::cos(5.0 * std::numbers::pi * x)) / 10.0; }

NurbsCurve fit_graph_bspline(const std::function<double(double)>& f, double a, double b, int q,
                             int spans) {
  if (spans < 1 || q < 1 || !(b > a)) throw ArgumentError("fit_graph_bspline: bad arguments");
  std::vector<double> knots(q + 1, a);
  for (int i = 1; i < spans; ++i) knots.push_back(a + (b - a) * i / spans);
  knots.insert(knots.end(), q + 1, b);
  const int ncp = spans + q;
  std::vector<double> greville(ncp);
  for (int i = 0; i < ncp; ++i) {
    double s = 0.0;
    for (int j = 1; j <= q; ++j) s += knots[i + j];
    greville[i] = s / q;
  }
  const std::vector<double> ones(ncp, 1.0);
  const int samples = 12 * spans + 1;
  Eigen::MatrixXd basis(samples, ncp);
  Eigen::VectorXd target(samples);
  for (int c = 0; c < ncp; ++c) {
    std::vector<Vec2> unit(ncp, Vec2::Zero());
    unit[c] = Vec2(0.0, 1.0);
    const NurbsCurve nc(q, knots, unit, ones);
    for (int s = 0; s < samples; ++s) basis(s, c) = nc.evaluate(a + (b - a) * s / (samples - 1)).y();
  }
  for (int s = 0; s < samples; ++s) target(s) = f(a + (b - a) * s / (samples - 1));
  const Eigen::VectorXd y = basis.colPivHouseholderQr().solve(target);
  std::vector<Vec2> cp(ncp);
  for (int i = 0; i < ncp; ++i) cp[i] = Vec2(greville[i], y(i));
  return NurbsCurve(q, knots, cp, ones);
}

Benchmark benchmark_wavy_channel(const WavyOptions& o) {
  if (o.nx < 1 || o.ny < 1 || !(o.length > 0.0) || !(o.height > 0.2))
    throw ArgumentError("wavy channel: bad dimensions");
  const int q = 7;
  double residual = INFINITY;
  std::optional<NurbsCurve> fit;
  double previous = INFINITY;
  for (int spans = 8; spans <= 512; spans += 8) {
    fit.emplace(fit_graph_bspline(wavy_wall, 0.0, o.length, q, spans));
    previous = residual;
    residual = 0.0;
    const int dense = 4000;
    for (int s = 0; s <= dense; ++s) {
      const double l = o.length * s / dense;
      const Vec2 p = fit->evaluate(l);
      residual = std::max({residual, std::abs(p.y() - wavy_wall(l)), std::abs(p.x() - l)});
    }
    if (residual <= o.fit_tolerance || residual >= previous) break;
  }
  if (!(residual <= o.fit_tolerance))
    throw GeometryError("wavy channel: wall fit residual above tolerance");
  auto curves = std::make_shared<CurveSet>();
  curves->push_back(*fit);
  const NurbsCurve& c = curves->front();

  const int nx = o.nx, ny = o.ny;
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<Vec2> v((nx + 1) * (ny + 1));
  std::vector<double> xs(nx + 1);
  for (int i = 0; i <= nx; ++i) {
    xs[i] = o.length * i / nx;
    const Vec2 bottom = c.evaluate(xs[i]);
    v[id(i, 0)] = bottom;
    for (int j = 1; j <= ny; ++j)
      v[id(i, j)] = Vec2(xs[i], bottom.y() + (o.height - bottom.y()) * j / ny);
  }
  std::vector<Triangle> tri;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      tri.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tri.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  std::vector<BoundarySegment> boundary;
  for (int i = 0; i < nx; ++i)
    boundary.push_back({id(i, 0), id(i + 1, 0), BoundaryTag::Neumann,
                        ParamInterval{0, xs[i], xs[i + 1]}});
  for (int j = 0; j < ny; ++j) {
    boundary.push_back({id(nx, j), id(nx, j + 1), BoundaryTag::Dirichlet, std::nullopt});
    boundary.push_back({id(0, j + 1), id(0, j), BoundaryTag::Dirichlet, std::nullopt});
  }
  for (int i = 0; i < nx; ++i)
    boundary.push_back({id(i + 1, ny), id(i, ny), BoundaryTag::Dirichlet, std::nullopt});

  Benchmark b;
  b.name = "wavy";
  b.curves = curves;
  b.coarse = std::make_shared<TriMesh>(v, tri, boundary, curves);
  b.exact = stream_function_solution();
  b.spec = problem_from_exact(b.exact, stream_function_laplacian, 1.0);
  b.spec.pressure_reference = nullptr;
  b.fit_residual = residual;
  return b;
}

std::vector<std::shared_ptr<const TriMesh>> mesh_family(const Benchmark& b, int levels) {
  if (levels < 1) throw ArgumentError("mesh_family: at least one level");
  std::vector<std::shared_ptr<const TriMesh>> out{b.coarse};
  for (int l = 1; l < levels; ++l) out.push_back(std::make_shared<TriMesh>(nested_refine(*out.back())));
  return out;
}

Benchmark benchmark_by_name(const std::string& name) {
  Benchmark b;
  if (name == "circle") b = benchmark_circle();
  else if (name == "wavy") b = benchmark_wavy_channel();
  else throw ArgumentError("unknown benchmark '" + name + "'");
  std::vector<Vec2> samples;
  for (const Vec2& x : b.coarse->vertices()) samples.push_back(x);
  if (strong_form_residual(b, samples) > 1e-10)
    throw DomainError("benchmark '" + name + "': exact solution fails the strong form");
  return b;
}

}  // namespace hdgnefem
