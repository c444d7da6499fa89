#pragma once

#include "hdgnefem/adaptivity.hpp"
#include "hdgnefem/benchmarks.hpp"
#include "hdgnefem/hdg.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace hdgnefem {

struct ConvergenceRow {
  int level = 0;
  double h = 0.0;  ///< longest edge of the tracked element
  int k = 0;
  int element = -1;
  double err_u = 0.0;
  double err_ustar = 0.0;
  double err_L = 0.0;
  double err_p = 0.0;
};

struct ConvergenceSlopes {
  double u = 0.0;
  double ustar = 0.0;
  double L = 0.0;
  double p = 0.0;
};

/// Degree assignment of a convergence study.
enum class DegreePattern {
  /// Degree k on one element in sector k, every other element at the
  /// background degree.
  Islands,
  /// Degrees 1..sectors over angular sectors around the domain centre.
  Sectors,
  /// One run per tracked degree with that degree everywhere.
  Uniform,
};

DegreePattern parse_pattern(const std::string& name);
std::string pattern_name(DegreePattern p);

struct ConvergenceTable {
  std::string benchmark;
  std::string strategy;
  DegreePattern pattern = DegreePattern::Islands;
  std::vector<ConvergenceRow> rows;
  std::map<int, ConvergenceSlopes> slopes;  ///< least squares over the last 3 levels
  bool monotone = true;
};

struct ConvergenceOptions {
  int levels = 4;
  std::vector<int> tracked{1, 2, 3};
  DegreePattern pattern = DegreePattern::Islands;
  /// Number of degree sectors; the degree-k island sits in sector k.
  int sectors = 6;
  int background_degree = 6;
  /// Distance of the tracking points from the centre.
  double radius = 0.3;
  PressureConstraint pressure = PressureConstraint::ElementBoundaries;
};

/// Sector degree pattern: element centroid angle about `center` picks the
/// sector, sector s gets degree s + 1.
DegreeMap sector_degrees(const TriMesh& mesh, const Vec2& center, int sectors);
/// Element containing x (by chord barycentrics), or -1.
int locate_element(const TriMesh& mesh, const Vec2& x);
/// Fixed point inside the sector whose degree is k.
Vec2 tracking_point(const Vec2& center, int sectors, int k, double radius);

ConvergenceTable run_convergence(const Benchmark& b, GeometryStrategy strategy,
                                 const ConvergenceOptions& options = {});

/// Least-squares slope of log(err) against log(h).
double fitted_slope(const std::vector<double>& h, const std::vector<double>& err);

std::vector<AdaptReport> run_adapt_compare(const Benchmark& b,
                                           const std::vector<GeometryStrategy>& strategies,
                                           const std::vector<double>& eps_list,
                                           const AdaptConfig& base = {});

void write_convergence_csv(std::ostream& out, const ConvergenceTable& table);
void write_adapt_csv(std::ostream& out, const AdaptReport& report);
/// One block per report, prefixed by strategy and eps.
void write_compare_csv(std::ostream& out, const std::vector<AdaptReport>& reports);

/// Legacy VTK unstructured grid: each element split into k^2 linear
/// sub-triangles on its nodal set; point data u and p, cell data degree and
/// E_e (pass an empty vector to omit E_e).
void write_vtk(std::ostream& out, const HdgSolution& solution,
               const std::vector<double>& estimate = {});

void write_text_file(const std::string& path, const std::string& contents);

}  // namespace hdgnefem
