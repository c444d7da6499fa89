#pragma once

#include "hdgnefem/common.hpp"
#include "hdgnefem/geometry.hpp"
#include "hdgnefem/mesh.hpp"

#include <Eigen/Sparse>

#include <array>
#include <functional>
#include <memory>
#include <vector>

namespace hdgnefem {

/// Stokes problem data. Every field is evaluated at physical points; the
/// traction also receives the outward unit normal of the exact boundary.
struct ProblemSpec {
  double nu = 1.0;
  VectorField body_force;
  VectorField dirichlet;
  std::function<Vec2(const Vec2& x, const Vec2& n)> traction;
  /// Reference pressure used to fix the constant on pure Dirichlet problems;
  /// when empty the boundary-mean sum is set to zero.
  ScalarField pressure_reference;
};

/// Functional that fixes the pressure constant on pure Dirichlet problems.
enum class PressureConstraint {
  ElementBoundaries,  ///< sum_e <p, 1> over every element boundary, i.e. sum_e rho_e
  DomainBoundary,     ///< <p, 1> over the domain boundary
  Volume,             ///< (p, 1) over the domain
};

struct SolverConfig {
  /// Stabilisation parameter; values <= 0 select 3 nu / (domain diameter).
  double tau = 0.0;
  GeometryStrategy geometry = GeometryStrategy::nefem();
  QuadratureOptions quadrature{};
  /// Gauss points per face span beyond the largest adjacent degree.
  int face_extra_points = 3;
  PressureConstraint pressure_constraint = PressureConstraint::ElementBoundaries;
  /// Relative residual above which solve() raises SolverError.
  double residual_tolerance = 1e-9;
};

using DegreeMap = std::vector<int>;

/// Trace degree: max of the neighbours on interior faces, k_e on the boundary.
int face_degree(const TriMesh& mesh, const DegreeMap& degrees, int f);
/// Gauss count per span used from both sides of face f.
int face_quadrature_points(const GeometryBackend& geo, const DegreeMap& degrees, int f,
                           const SolverConfig& config);
double effective_tau(const TriMesh& mesh, const ProblemSpec& spec, const SolverConfig& config);

/// Discrete local problem of one element,
///
///     A z = f + sum_j B_j uhat_j + e rho,
///
/// with z = (L_00, L_01, L_10, L_11, u_0, u_1, p, zeta) in nodal coefficients
/// (L_ab approximates -d_a u_b), and the element's share of the global trace
/// equations on each non-Dirichlet face j:
///
///     R_j z - T_j uhat_j - h_j,    P_j uhat_j - g.
struct LocalSystem {
  int element = -1;
  int k = 0;
  int n = 0;  ///< scalar basis size
  Eigen::MatrixXd A;
  Eigen::VectorXd f;
  std::array<int, 3> face{};
  std::array<int, 3> face_k{};
  std::array<bool, 3> dirichlet{};
  std::array<Eigen::MatrixXd, 3> B;  ///< m x 2(k_hat + 1), empty on Dirichlet faces
  std::array<Eigen::MatrixXd, 3> R;  ///< 2(k_hat + 1) x m
  std::array<Eigen::MatrixXd, 3> T;  ///< 2(k_hat + 1) x 2(k_hat + 1)
  std::array<Eigen::VectorXd, 3> h;  ///< Neumann load -<mu, t>, else zero
  std::array<Eigen::RowVectorXd, 3> P;
  double g = 0.0;                    ///< -<u_D . n, 1> over the Dirichlet faces
  /// Element share of the pressure functional: c . p = target.
  Eigen::VectorXd pressure_row;
  double pressure_target = 0.0;
  std::array<Eigen::VectorXd, 3> dirichlet_trace;  ///< u_D interpolant on Dirichlet faces

  int size() const { return 7 * n + 1; }
  int L_offset(int a, int b) const { return (2 * a + b) * n; }
  int u_offset(int b) const { return (4 + b) * n; }
  int p_offset() const { return 6 * n; }
  int zeta_index() const { return 7 * n; }

  auto block(int row_offset, int col_offset, int rows, int cols) const {
    return A.block(row_offset, col_offset, rows, cols);
  }
  auto A_LL() const { return block(0, 0, 4 * n, 4 * n); }
  auto A_Lu() const { return block(0, 4 * n, 4 * n, 2 * n); }
  auto A_uL() const { return block(4 * n, 0, 2 * n, 4 * n); }
  auto A_uu() const { return block(4 * n, 4 * n, 2 * n, 2 * n); }
  auto A_up() const { return block(4 * n, 6 * n, 2 * n, n); }
  auto A_pu() const { return block(6 * n, 4 * n, n, 2 * n); }
  auto a_rho_p() const { return block(7 * n, 6 * n, 1, n); }
};

LocalSystem assemble_local(const GeometryBackend& geo, int e, const DegreeMap& degrees,
                           const ProblemSpec& spec, const SolverConfig& config);

/// z = z0 + Z_hat uhat + z_rho rho, where uhat stacks the element's
/// non-Dirichlet face traces in local edge order, together with the
/// element's contributions to the global rows.
struct CondensedElement {
  int element = -1;
  Eigen::VectorXd z0;
  Eigen::MatrixXd Z_hat;
  Eigen::VectorXd z_rho;
  std::vector<int> trace_faces;    ///< global face ids that carry unknowns
  std::vector<int> trace_offsets;  ///< column offset of each in Z_hat
  Eigen::MatrixXd K;               ///< condensed trace-trace block
  Eigen::VectorXd K_rho;           ///< trace rows against rho
  Eigen::VectorXd rhs;             ///< trace rows
  Eigen::RowVectorXd P;            ///< mean-flux row against the stacked traces
  double g = 0.0;
  /// Pressure functional in terms of the global unknowns: c_hat uhat + c_rho rho + c0.
  Eigen::RowVectorXd c_hat;
  double c_rho = 0.0;
  double c0 = 0.0;
  double pressure_target = 0.0;
};

/// Throws SolverError when the local matrix is singular.
CondensedElement condense(const LocalSystem& local);

/// Index map of the global unknowns: traces of every non-Dirichlet face
/// ordered (face, component, node), then rho per element, then an optional
/// multiplier fixing the pressure constant.
struct GlobalLayout {
  std::vector<int> face_offset;  ///< -1 on Dirichlet faces
  std::vector<int> face_k;
  int rho_offset = 0;
  int multiplier = -1;
  int size = 0;
};

GlobalLayout global_layout(const TriMesh& mesh, const DegreeMap& degrees);

struct GlobalSystem {
  GlobalLayout layout;
  Eigen::SparseMatrix<double> K;
  Eigen::VectorXd f;
};

GlobalSystem assemble_global(const GeometryBackend& geo, const DegreeMap& degrees,
                             const std::vector<CondensedElement>& condensed,
                             const ProblemSpec& spec);

struct ElementSolution {
  int k = 0;
  Eigen::MatrixXd L;   ///< n x 4, column 2a + b
  Eigen::MatrixXd u;   ///< n x 2
  Eigen::VectorXd p;
  double zeta = 0.0;
  double rho = 0.0;
};

struct HdgSolution {
  std::shared_ptr<const GeometryBackend> geometry;
  DegreeMap degrees;
  std::vector<ElementSolution> elements;
  std::vector<Eigen::VectorXd> traces;  ///< per face, component-major, k_hat + 1 nodes
  std::vector<int> trace_degree;
  double multiplier = 0.0;
  double tau = 0.0;
  int global_dofs = 0;
  double relative_residual = 0.0;
};

/// Full pipeline: local assembly, condensation, global solve, recovery.
/// Throws SolverError when factorization fails or the residual exceeds the
/// configured tolerance.
HdgSolution solve(std::shared_ptr<const GeometryBackend> geo, const ProblemSpec& spec,
                  const SolverConfig& config, const DegreeMap& degrees);
HdgSolution solve(const TriMesh& mesh, const ProblemSpec& spec, const SolverConfig& config,
                  const DegreeMap& degrees);

/// |<u_D . n, 1>| over the Dirichlet boundary (Neumann part omitted), sampled
/// on the exact boundary with n-point Gauss rules per face span.
double check_compatibility(const TriMesh& mesh, const ProblemSpec& spec, int points = 12);
/// Raises DomainError on pure Dirichlet meshes whose residual exceeds
/// 1e-8 times the domain diameter.
void require_compatibility(const TriMesh& mesh, const ProblemSpec& spec);

}  // namespace hdgnefem
