#pragma once

#include "hdgnefem/common.hpp"
#include "hdgnefem/hdg.hpp"

#include <optional>
#include <vector>

namespace hdgnefem {

/// Analytic fields of a benchmark. `grad_u(x)(a, b)` is the a-derivative of u_b.
struct ExactSolution {
  VectorField u;
  ScalarField p;
  TensorField grad_u;
  VectorField grad_p;
};

/// Postprocessed velocity of one element: nodal coefficients of degree k + 1
/// in the element's natural basis (reference or physical).
struct PostprocessedField {
  int element = -1;
  int k = 0;
  Eigen::MatrixXd coefficients;  ///< n x 2
};

/// Solves (grad u*_b, grad v) = -(L_.b, grad v) with (u*_b, 1) = (u_b, 1).
PostprocessedField postprocess(const HdgSolution& solution, int e);

/// E_e = [ (1 / |Omega_e|) int (u* - u).(u* - u) ]^(1/2).
double estimate_error(const HdgSolution& solution, int e, const PostprocessedField& post);

/// ceil(log(eps / E) / log(h)); E = 0 returns -kMaxBasisDegree. Ratios within
/// 1e-9 of an integer are snapped before the ceiling.
/// Throws DomainError unless 0 < h < 1, eps > 0 and E >= 0.
int degree_increment(double estimate, double eps, double h);

/// Unnormalised elemental L2 errors against analytic fields.
struct ElementErrors {
  double area = 0.0;
  double u = 0.0;
  double u_star = 0.0;
  double L = 0.0;
  double p = 0.0;
  double estimate = 0.0;  ///< E_e
};

ElementErrors element_errors(const HdgSolution& solution, int e, const ExactSolution& exact);

struct AdaptConfig {
  double eps = 1e-2;
  int max_iterations = 10;
  int k_min = 1;
  int k_max = 8;
  int initial_degree = 1;
  /// Largest degree decrease applied in one iteration.
  int max_decrease = 1;
  /// An element never returns to a degree at which its estimate exceeded eps.
  bool keep_floor = true;
};

struct AdaptIteration {
  DegreeMap degrees;
  std::vector<double> estimate;
  std::vector<double> exact;  ///< normalised like E_e; empty without an exact solution
  std::vector<int> increment;
  int dofs = 0;
  double max_estimate = 0.0;
  double max_exact = 0.0;
  bool converged = false;
};

struct AdaptReport {
  std::string strategy;
  double eps = 0.0;
  std::vector<AdaptIteration> iterations;
  bool converged = false;
};

/// Applies one clamped update to the degree map. `floor`, when given, raises
/// the lower clamp per element.
DegreeMap next_degrees(const TriMesh& mesh, const DegreeMap& degrees,
                       const std::vector<double>& estimate, const AdaptConfig& config,
                       const DegreeMap* floor = nullptr);

/// solve -> postprocess -> estimate -> update until max E_e <= eps or the cap.
AdaptReport adapt_loop(const TriMesh& mesh, const ProblemSpec& spec, const SolverConfig& solver,
                       const AdaptConfig& config, const ExactSolution* exact = nullptr);

}  // namespace hdgnefem
