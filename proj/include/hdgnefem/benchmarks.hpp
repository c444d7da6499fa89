#pragma once

#include "hdgnefem/adaptivity.hpp"
#include "hdgnefem/hdg.hpp"
#include "hdgnefem/mesh.hpp"
#include "hdgnefem/nurbs.hpp"

#include <memory>
#include <string>
#include <vector>

namespace hdgnefem {

/// Stream-function solution with u = (X Y', -X' Y), X = x^2 (1 - x)^2,
/// Y = y^2 (1 - y)^2, and p = x (1 - x).
ExactSolution stream_function_solution();
/// Stokes data matching an exact solution: s = -nu lap u + grad p, u_D = u,
/// t = nu n.grad u - p n. `laplacian` supplies lap u analytically.
ProblemSpec problem_from_exact(const ExactSolution& exact, const VectorField& laplacian, double nu);

struct Benchmark {
  std::string name;
  std::shared_ptr<const CurveSet> curves;
  std::shared_ptr<const TriMesh> coarse;
  ProblemSpec spec;
  ExactSolution exact;
  double fit_residual = 0.0;  ///< max deviation of a fitted boundary curve
};

/// Max residual of div u = 0 and -nu lap u + grad p = s at the given points,
/// with derivatives from sixth-order central differences of u and p (exact
/// for polynomials of degree 6).
double strong_form_residual(const Benchmark& b, const std::vector<Vec2>& points, double step = 0.05);

/// Circle of radius 0.5 centred at (0.5, 0.5) as one closed rational
/// quadratic NURBS, pure Dirichlet, 24-element coarse mesh.
Benchmark benchmark_circle();

struct WavyOptions {
  double length = 2.0;
  double height = 1.0;
  int nx = 14;
  int ny = 3;
  double fit_tolerance = 1e-10;
};

/// Bottom wall y = (1 + cos 5 pi x) / 10; curved bottom is Neumann, other
/// sides Dirichlet. The wall is a degree-7 B-spline least-squares fit.
/// Throws GeometryError if the fit misses the tolerance.
Benchmark benchmark_wavy_channel(const WavyOptions& options = {});

double wavy_wall(double x);

/// Least-squares B-spline fit y(x) of degree q on [a, b] with Greville
/// control abscissae so that the curve parameter equals x.
NurbsCurve fit_graph_bspline(const std::function<double(double)>& f, double a, double b, int q,
                             int spans);

/// Nested refinement sequence starting at the coarse mesh (levels >= 1).
std::vector<std::shared_ptr<const TriMesh>> mesh_family(const Benchmark& b, int levels);

/// Registered benchmark by name ("circle" or "wavy"). The exact solution is
/// checked against the strong form at the coarse vertices (DomainError above 1e-10).
Benchmark benchmark_by_name(const std::string& name);

}  // namespace hdgnefem
