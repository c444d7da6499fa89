#include "hdgnefem/study.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace hdgnefem {

DegreeMap sector_degrees(const TriMesh& mesh, const Vec2& center, int sectors) {
  if (sectors < 1 || sectors > kMaxBasisDegree - 1) throw ArgumentError("bad sector count");
  DegreeMap out(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Triangle& t = mesh.elements()[e];
    const Vec2 c = (mesh.vertices()[t[0]] + mesh.vertices()[t[1]] + mesh.vertices()[t[2]]) / 3.0 - center;
    double angle = std::atan2(c.y(), c.x());
    if (angle < 0.0) angle += 2.0 * std::numbers::pi;
    const int s = std::min(sectors - 1, static_cast<int>(angle / (2.0 * std::numbers::pi) * sectors));
    out[e] = s + 1;
  }
  return out;
}

int locate_element(const TriMesh& mesh, const Vec2& x) {
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Triangle& t = mesh.elements()[e];
    const Vec2& a = mesh.vertices()[t[0]];
    const Vec2& b = mesh.vertices()[t[1]];
    const Vec2& c = mesh.vertices()[t[2]];
    const double area = cross(b - a, c - a);
    const double l1 = cross(c - b, x - b) / area;
    const double l2 = cross(a - c, x - c) / area;
    const double l3 = 1.0 - l1 - l2;
    if (l1 >= -1e-12 && l2 >= -1e-12 && l3 >= -1e-12) return e;
  }
  return -1;
}

Vec2 tracking_point(const Vec2& center, int sectors, int k, double radius) {
  const double width = 2.0 * std::numbers::pi / sectors;
  const double angle = (k - 1) * width + 0.55 * width;
  return center + radius * Vec2(std::cos(angle), std::sin(angle));
}

DegreePattern parse_pattern(const std::string& name) {
  if (name == "islands") return DegreePattern::Islands;
  if (name == "sectors") return DegreePattern::Sectors;
  if (name == "uniform") return DegreePattern::Uniform;
  throw ArgumentError("unknown degree pattern '" + name + "'");
}

std::string pattern_name(DegreePattern p) {
  switch (p) {
    case DegreePattern::Islands: return "islands";
    case DegreePattern::Sectors: return "sectors";
    case DegreePattern::Uniform: return "uniform";
  }
  return "";
}

double fitted_slope(const std::vector<double>& h, const std::vector<double>& err) {
  if (h.size() != err.size() || h.size() < 2) throw ArgumentError("fitted_slope: need 2+ points");
  const int n = static_cast<int>(h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceTable run_convergence(const Benchmark& b, GeometryStrategy strategy,
                                 const ConvergenceOptions& options) {
  if (options.levels < 3) throw ArgumentError("run_convergence: at least 3 levels");
  for (int k : options.tracked)
    if (k < 1 || k > options.sectors) throw ArgumentError("run_convergence: tracked degree outside sectors");
  ConvergenceTable table;
  table.benchmark = b.name;
  table.strategy = strategy.name();
  table.pattern = options.pattern;
  const auto meshes = mesh_family(b, options.levels);
  const Vec2 center(0.5, 0.5);
  SolverConfig config;
  config.geometry = strategy;
  config.pressure_constraint = options.pressure;

  // Tracked elements follow centre children so they stay homothetic.
  std::map<int, int> tracked;
  for (int k : options.tracked) {
    const int e = locate_element(*meshes[0], tracking_point(center, options.sectors, k, options.radius));
    if (e < 0) throw GeometryError("tracking point outside the mesh");
    tracked[k] = e;
  }

  for (int level = 0; level < options.levels; ++level) {
    const TriMesh& mesh = *meshes[level];
    if (level > 0)
      for (auto& [k, e] : tracked) e = 4 * e + 3;
    auto record = [&](const HdgSolution& sol, int k) {
      const int e = tracked.at(k);
      const ElementErrors err = element_errors(sol, e, b.exact);
      ConvergenceRow row;
      row.level = level;
      row.h = mesh.max_edge_length(e);
      row.k = k;
      row.element = e;
      row.err_u = err.u;
      row.err_ustar = err.u_star;
      row.err_L = err.L;
      row.err_p = err.p;
      table.rows.push_back(row);
    };
    if (options.pattern == DegreePattern::Uniform) {
      for (int k : options.tracked) {
        const HdgSolution sol = solve(mesh, b.spec, config, DegreeMap(mesh.num_elements(), k));
        record(sol, k);
      }
      continue;
    }
    DegreeMap degrees;
    if (options.pattern == DegreePattern::Sectors) {
      degrees = sector_degrees(mesh, center, options.sectors);
    } else {
      degrees.assign(mesh.num_elements(), options.background_degree);
      for (int k = 1; k <= options.sectors; ++k) {
        const auto it = tracked.find(k);
        const int e = it != tracked.end()
                          ? it->second
                          : locate_element(mesh, tracking_point(center, options.sectors, k, options.radius));
        if (e >= 0) degrees[e] = k;
      }
    }
    const HdgSolution sol = solve(mesh, b.spec, config, degrees);
    for (int k : options.tracked) record(sol, k);
  }

  for (int k : options.tracked) {
    std::vector<double> h, eu, es, eL, ep;
    for (const ConvergenceRow& r : table.rows) {
      if (r.k != k) continue;
      h.push_back(r.h);
      eu.push_back(r.err_u);
      es.push_back(r.err_ustar);
      eL.push_back(r.err_L);
      ep.push_back(r.err_p);
    }
    for (std::size_t i = 1; i < eu.size(); ++i)
      if (!(eu[i] < eu[i - 1])) table.monotone = false;
    auto tail = [](const std::vector<double>& v) {
      return std::vector<double>(v.end() - 3, v.end());
    };
    ConvergenceSlopes s;
    s.u = fitted_slope(tail(h), tail(eu));
    s.ustar = fitted_slope(tail(h), tail(es));
    s.L = fitted_slope(tail(h), tail(eL));
    s.p = fitted_slope(tail(h), tail(ep));
    table.slopes[k] = s;
  }
  return table;
}

std::vector<AdaptReport> run_adapt_compare(const Benchmark& b,
                                           const std::vector<GeometryStrategy>& strategies,
                                           const std::vector<double>& eps_list,
                                           const AdaptConfig& base) {
  std::vector<AdaptReport> out;
  for (const GeometryStrategy& s : strategies)
    for (double eps : eps_list) {
      SolverConfig solver;
      solver.geometry = s;
      AdaptConfig cfg = base;
      cfg.eps = eps;
      out.push_back(adapt_loop(*b.coarse, b.spec, solver, cfg, &b.exact));
    }
  return out;
}

namespace {

struct PrecisionGuard {
  explicit PrecisionGuard(std::ostream& out)
      : out_(out), old_(out.precision(std::numeric_limits<double>::max_digits10)) {}
  ~PrecisionGuard() { out_.precision(old_); }
  std::ostream& out_;
  std::streamsize old_;
};

}  // namespace

void write_convergence_csv(std::ostream& out, const ConvergenceTable& table) {
  PrecisionGuard guard(out);
  out << "level,h,k,err_u,err_ustar,err_L,err_p\n";
  for (const ConvergenceRow& r : table.rows)
    out << r.level << ',' << r.h << ',' << r.k << ',' << r.err_u << ',' << r.err_ustar << ','
        << r.err_L << ',' << r.err_p << '\n';
}

void write_adapt_csv(std::ostream& out, const AdaptReport& report) {
  PrecisionGuard guard(out);
  out << "iter,max_Ee,max_exact,dofs\n";
  for (std::size_t i = 0; i < report.iterations.size(); ++i) {
    const AdaptIteration& it = report.iterations[i];
    out << i + 1 << ',' << it.max_estimate << ',' << it.max_exact << ',' << it.dofs << '\n';
  }
}

void write_compare_csv(std::ostream& out, const std::vector<AdaptReport>& reports) {
  PrecisionGuard guard(out);
  out << "strategy,eps,iter,max_Ee,max_exact,dofs,converged\n";
  for (const AdaptReport& r : reports)
    for (std::size_t i = 0; i < r.iterations.size(); ++i) {
      const AdaptIteration& it = r.iterations[i];
      out << r.strategy << ',' << r.eps << ',' << i + 1 << ',' << it.max_estimate << ','
          << it.max_exact << ',' << it.dofs << ',' << (it.converged ? 1 : 0) << '\n';
    }
}

void write_vtk(std::ostream& out, const HdgSolution& sol, const std::vector<double>& estimate) {
  const GeometryBackend& geo = *sol.geometry;
  const TriMesh& mesh = geo.mesh();
  std::vector<Vec2> points;
  std::vector<Vec2> u;
  std::vector<double> p;
  std::vector<std::array<int, 3>> cells;
  std::vector<int> cell_degree;
  std::vector<double> cell_estimate;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const int k = sol.degrees[e];
    const ElementSolution& es = sol.elements[e];
    const int base = static_cast<int>(points.size());
    const std::vector<Vec2> nodes = geo.nodal_points(e, k);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      points.push_back(nodes[i]);
      u.push_back(es.u.row(static_cast<Eigen::Index>(i)).transpose());
      p.push_back(es.p(static_cast<Eigen::Index>(i)));
    }
    auto add = [&](int a, int b, int c) {
      cells.push_back({base + a, base + b, base + c});
      cell_degree.push_back(k);
      cell_estimate.push_back(estimate.empty() ? 0.0 : estimate[e]);
    };
    for (int j = 0; j < k; ++j)
      for (int i = 0; i + j < k; ++i) {
        add(lattice_index(k, i, j), lattice_index(k, i + 1, j), lattice_index(k, i, j + 1));
        if (i + j < k - 1)
          add(lattice_index(k, i + 1, j), lattice_index(k, i + 1, j + 1), lattice_index(k, i, j + 1));
      }
  }
  PrecisionGuard guard(out);
  out << "# vtk DataFile Version 3.0\nhdgnefem solution\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << points.size() << " double\n";
  for (const Vec2& x : points) out << x.x() << ' ' << x.y() << " 0\n";
  out << "CELLS " << cells.size() << ' ' << 4 * cells.size() << '\n';
  for (const auto& c : cells) out << "3 " << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
  out << "CELL_TYPES " << cells.size() << '\n';
  for (std::size_t i = 0; i < cells.size(); ++i) out << "5\n";
  out << "POINT_DATA " << points.size() << "\nVECTORS u double\n";
  for (const Vec2& v : u) out << v.x() << ' ' << v.y() << " 0\n";
  out << "SCALARS p double 1\nLOOKUP_TABLE default\n";
  for (double v : p) out << v << '\n';
  out << "CELL_DATA " << cells.size() << "\nSCALARS degree int 1\nLOOKUP_TABLE default\n";
  for (int k : cell_degree) out << k << '\n';
  if (!estimate.empty()) {
    out << "SCALARS E_e double 1\nLOOKUP_TABLE default\n";
    for (double v : cell_estimate) out << v << '\n';
  }
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream file(path);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  file << contents;
  if (!file) throw IoError("failed writing '" + path + "'");
}

}  // namespace hdgnefem
