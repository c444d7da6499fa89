// Verification driver: solve, convergence studies, adaptivity and strategy
// comparisons on the registered benchmarks or on user meshes.

#include "hdgnefem/adaptivity.hpp"
#include "hdgnefem/benchmarks.hpp"
#include "hdgnefem/hdg.hpp"
#include "hdgnefem/study.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace hdgnefem;

namespace {

struct Common {
  std::string benchmark = "circle";
  std::string mesh_file;
  std::string geometry_file;
  std::string strategy = "nefem";
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--benchmark", c.benchmark, "circle or wavy")->capture_default_str();
  cmd->add_option("--mesh", c.mesh_file, "mesh file (replaces the benchmark mesh)");
  cmd->add_option("--geometry", c.geometry_file, "NURBS curve file for --mesh");
  cmd->add_option("--strategy", c.strategy, "iso-fixed:<q>, iso-regen or nefem")->capture_default_str();
  cmd->add_option("--out", c.out, "output file or prefix");
}

Benchmark load(const Common& c) {
  Benchmark b = benchmark_by_name(c.benchmark);
  if (!c.mesh_file.empty()) {
    std::shared_ptr<const CurveSet> curves;
    if (!c.geometry_file.empty()) curves = std::make_shared<CurveSet>(read_curves_file(c.geometry_file));
    b.curves = curves;
    b.coarse = std::make_shared<TriMesh>(read_mesh_file(c.mesh_file, curves));
    b.name = c.mesh_file;
  }
  return b;
}

std::ostream& output(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  return file;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HDG Stokes solver with NURBS-enhanced curved elements"};
  app.set_config("--config", "", "key=value configuration file");
  app.require_subcommand(1);

  Common solve_opts;
  int solve_k = 2;
  int solve_refine = 0;
  auto* solve_cmd = app.add_subcommand("solve", "solve one problem and write VTK");
  add_common(solve_cmd, solve_opts);
  solve_cmd->add_option("--k", solve_k, "uniform degree")->capture_default_str();
  solve_cmd->add_option("--levels", solve_refine, "uniform refinements of the mesh")->capture_default_str();

  Common conv_opts;
  std::vector<int> conv_k{1, 2, 3};
  int conv_levels = 4;
  std::string conv_pattern = "islands";
  auto* conv_cmd = app.add_subcommand("converge", "h-convergence of tracked elements");
  add_common(conv_cmd, conv_opts);
  conv_cmd->add_option("--k", conv_k, "tracked degrees")->capture_default_str();
  conv_cmd->add_option("--levels", conv_levels, "mesh levels (>= 3)")->capture_default_str();
  conv_cmd->add_option("--pattern", conv_pattern, "islands, sectors or uniform")->capture_default_str();

  Common adapt_opts;
  adapt_opts.benchmark = "wavy";
  double adapt_eps = 0.5e-2;
  AdaptConfig adapt_cfg;
  std::string adapt_vtk;
  auto* adapt_cmd = app.add_subcommand("adapt", "degree adaptivity with one strategy");
  add_common(adapt_cmd, adapt_opts);
  adapt_cmd->add_option("--eps", adapt_eps, "desired error")->capture_default_str();
  adapt_cmd->add_option("--kmax", adapt_cfg.k_max, "largest degree")->capture_default_str();
  adapt_cmd->add_option("--max-iter", adapt_cfg.max_iterations, "iteration cap")->capture_default_str();

  Common cmp_opts;
  cmp_opts.benchmark = "wavy";
  std::vector<std::string> cmp_strategies{"iso-fixed:1", "iso-fixed:4", "iso-regen", "nefem"};
  std::vector<double> cmp_eps{0.5e-2, 0.5e-3};
  auto* cmp_cmd = app.add_subcommand("compare", "adaptivity under several geometry strategies");
  add_common(cmp_cmd, cmp_opts);
  cmp_cmd->add_option("--strategies", cmp_strategies, "strategy list")->capture_default_str();
  cmp_cmd->add_option("--eps", cmp_eps, "desired errors")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve_cmd) {
      const Benchmark b = load(solve_opts);
      auto meshes = mesh_family(b, solve_refine + 1);
      const TriMesh& mesh = *meshes.back();
      require_compatibility(mesh, b.spec);
      SolverConfig config;
      config.geometry = GeometryStrategy::parse(solve_opts.strategy);
      const HdgSolution sol = solve(mesh, b.spec, config, DegreeMap(mesh.num_elements(), solve_k));
      std::vector<double> est(mesh.num_elements());
      double max_est = 0.0, max_u = 0.0;
      for (int e = 0; e < mesh.num_elements(); ++e) {
        const ElementErrors err = element_errors(sol, e, b.exact);
        est[e] = err.estimate;
        max_est = std::max(max_est, err.estimate);
        max_u = std::max(max_u, err.u / std::sqrt(err.area));
      }
      std::cout << "elements " << mesh.num_elements() << "  dofs " << sol.global_dofs
                << "  residual " << sol.relative_residual << "\nmax E_e " << max_est
                << "  max exact " << max_u << "\n";
      if (!solve_opts.out.empty()) {
        std::ofstream file;
        write_vtk(output(solve_opts.out, file), sol, est);
      }
    } else if (*conv_cmd) {
      const Benchmark b = load(conv_opts);
      ConvergenceOptions o;
      o.levels = conv_levels;
      o.tracked = conv_k;
      o.pattern = parse_pattern(conv_pattern);
      const ConvergenceTable t = run_convergence(b, GeometryStrategy::parse(conv_opts.strategy), o);
      std::ofstream file;
      write_convergence_csv(output(conv_opts.out, file), t);
      std::cerr << std::fixed << std::setprecision(2);
      for (const auto& [k, s] : t.slopes)
        std::cerr << "k=" << k << "  u " << s.u << "  u* " << s.ustar << "  L " << s.L << "  p "
                  << s.p << "\n";
      if (!t.monotone) std::cerr << "warning: non-monotone error sequence\n";
    } else if (*adapt_cmd) {
      const Benchmark b = load(adapt_opts);
      SolverConfig solver;
      solver.geometry = GeometryStrategy::parse(adapt_opts.strategy);
      adapt_cfg.eps = adapt_eps;
      const AdaptReport r = adapt_loop(*b.coarse, b.spec, solver, adapt_cfg, &b.exact);
      std::ofstream file;
      write_adapt_csv(output(adapt_opts.out, file), r);
      std::cerr << (r.converged ? "converged" : "not converged") << " after "
                << r.iterations.size() << " iterations\n";
    } else if (*cmp_cmd) {
      const Benchmark b = load(cmp_opts);
      std::vector<GeometryStrategy> strategies;
      for (const std::string& s : cmp_strategies) strategies.push_back(GeometryStrategy::parse(s));
      const auto reports = run_adapt_compare(b, strategies, cmp_eps);
      std::ofstream file;
      write_compare_csv(output(cmp_opts.out, file), reports);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
