#include "hdgnefem/adaptivity.hpp"
#include "hdgnefem/benchmarks.hpp"
#include "hdgnefem/hdg.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace hdgnefem;

namespace {

ProblemSpec polynomial_problem(const oracle::PolynomialStokes& s) {
  return problem_from_exact(s.exact, s.laplacian, 1.0);
}

SolverConfig config_with(GeometryStrategy g, PressureConstraint c = PressureConstraint::ElementBoundaries) {
  SolverConfig cfg;
  cfg.geometry = g;
  cfg.pressure_constraint = c;
  return cfg;
}

}  // namespace

TEST(HdgSolve, ReproducesPolynomialSolutions) {
  for (int k = 1; k <= 4; ++k) {
    const auto s = oracle::polynomial_stokes(k, 100 + k);
    const ProblemSpec spec = polynomial_problem(s);
    for (bool neumann : {false, true})
      for (double jitter : {0.0, 0.25}) {
        const TriMesh m = oracle::square_mesh(2, jitter, neumann);
        const HdgSolution sol = solve(m, spec, SolverConfig{}, DegreeMap(m.num_elements(), k));
        EXPECT_LT(oracle::max_nodal_error(sol, s.exact), 1e-8)
            << "k=" << k << " neumann=" << neumann << " jitter=" << jitter;
      }
  }
}

TEST(HdgSolve, ReproducesPolynomialsWithMixedDegrees) {
  const auto s = oracle::polynomial_stokes(2, 5);
  const TriMesh m = oracle::square_mesh(3, 0.2, true);
  DegreeMap d(m.num_elements());
  for (int e = 0; e < m.num_elements(); ++e) d[e] = 2 + e % 3;
  const HdgSolution sol = solve(m, polynomial_problem(s), SolverConfig{}, d);
  EXPECT_LT(oracle::max_nodal_error(sol, s.exact), 1e-8);
}

TEST(HdgSolve, AllPressureConstraintsReproducePolynomials) {
  const auto s = oracle::polynomial_stokes(3, 8);
  const TriMesh m = oracle::square_mesh(2, 0.1);
  for (auto c : {PressureConstraint::ElementBoundaries, PressureConstraint::DomainBoundary,
                 PressureConstraint::Volume}) {
    const HdgSolution sol =
        solve(m, polynomial_problem(s), config_with(GeometryStrategy::nefem(), c), DegreeMap(8, 3));
    EXPECT_LT(oracle::max_nodal_error(sol, s.exact), 1e-8);
  }
}

TEST(HdgSolve, CondensedMatchesMonolithicOnSmallMeshes) {
  struct Case {
    TriMesh mesh;
    DegreeMap degrees;
    GeometryStrategy strategy;
    PressureConstraint pressure;
  };
  std::vector<Case> cases;
  cases.push_back({oracle::square_mesh(1), {2, 3}, GeometryStrategy::nefem(), PressureConstraint::ElementBoundaries});
  cases.push_back({oracle::square_mesh(1, 0.0, true), {1, 4}, GeometryStrategy::nefem(), PressureConstraint::ElementBoundaries});
  cases.push_back({oracle::square_mesh(2, 0.2), {1, 2, 3, 4, 2, 1, 3, 2}, GeometryStrategy::nefem(), PressureConstraint::Volume});
  cases.push_back({oracle::square_mesh(2, 0.2, true), {3, 1, 2, 2, 4, 1, 1, 3}, GeometryStrategy::nefem(), PressureConstraint::ElementBoundaries});
  cases.push_back({oracle::pie_mesh(4), {2, 3, 1, 4}, GeometryStrategy::nefem(), PressureConstraint::ElementBoundaries});
  cases.push_back({oracle::pie_mesh(4), {2, 3, 1, 4}, GeometryStrategy::nefem(), PressureConstraint::DomainBoundary});
  cases.push_back({oracle::pie_mesh(5), {2, 2, 3, 3, 2}, GeometryStrategy::iso_fixed(2), PressureConstraint::ElementBoundaries});
  cases.push_back({oracle::pie_mesh(6), {1, 2, 3, 4, 3, 2}, GeometryStrategy::iso_regen(), PressureConstraint::ElementBoundaries});
  cases.push_back({oracle::pie_mesh(8), {2, 3, 2, 3, 2, 3, 2, 3}, GeometryStrategy::iso_fixed(3),
                   PressureConstraint::Volume});
  const ProblemSpec spec = polynomial_problem(oracle::polynomial_stokes(5, 2));
  for (const Case& c : cases) {
    ASSERT_LE(c.mesh.num_elements(), 8);
    const SolverConfig cfg = config_with(c.strategy, c.pressure);
    const auto geo = std::make_shared<GeometryBackend>(c.mesh, c.strategy, c.degrees);
    const HdgSolution sol = solve(geo, spec, cfg, c.degrees);
    const oracle::MonolithicResult ref = oracle::monolithic_solve(*geo, spec, cfg, c.degrees);
    EXPECT_LT(oracle::monolithic_mismatch(sol, ref), 1e-10) << c.strategy.name();
  }
}

TEST(HdgSolve, GlobalSizeMatchesBookkeeping) {
  const TriMesh m = oracle::square_mesh(3, 0.0, true);
  DegreeMap d(m.num_elements());
  for (int e = 0; e < m.num_elements(); ++e) d[e] = 1 + e % 4;
  const GlobalLayout layout = global_layout(m, d);
  int expected = 0;
  for (int f = 0; f < m.num_faces(); ++f) {
    const auto& b = m.boundary(f);
    if (b && b->tag == BoundaryTag::Dirichlet) {
      EXPECT_EQ(layout.face_offset[f], -1);
      continue;
    }
    expected += 2 * (face_degree(m, d, f) + 1);
  }
  EXPECT_EQ(layout.rho_offset, expected);
  EXPECT_EQ(layout.multiplier, -1);
  EXPECT_EQ(layout.size, expected + m.num_elements());

  const TriMesh closed = oracle::square_mesh(3);
  const GlobalLayout dl = global_layout(closed, d);
  EXPECT_EQ(dl.multiplier, dl.rho_offset + closed.num_elements());
  EXPECT_EQ(dl.size, dl.multiplier + 1);
}

TEST(HdgSolve, FaceDegreeIsNeighbourMaximum) {
  const TriMesh m = oracle::square_mesh(2);
  DegreeMap d{1, 5, 2, 3, 4, 1, 2, 6};
  for (int f = 0; f < m.num_faces(); ++f) {
    const Face& face = m.faces()[f];
    const int want = face.is_boundary() ? d[face.left] : std::max(d[face.left], d[face.right]);
    EXPECT_EQ(face_degree(m, d, f), want);
  }
}

TEST(HdgSolve, TraceBlockSparsityIsSymmetric) {
  const TriMesh m = oracle::square_mesh(2, 0.1, true);
  const DegreeMap d{1, 2, 3, 2, 1, 3, 2, 2};
  const SolverConfig cfg;
  const ProblemSpec spec = polynomial_problem(oracle::polynomial_stokes(2, 3));
  const GeometryBackend geo(m, cfg.geometry, d);
  std::vector<CondensedElement> ce;
  for (int e = 0; e < m.num_elements(); ++e) ce.push_back(condense(assemble_local(geo, e, d, spec, cfg)));
  const GlobalSystem gs = assemble_global(geo, d, ce, spec);
  std::set<std::pair<int, int>> pattern;
  for (int c = 0; c < gs.K.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(gs.K, c); it; ++it)
      pattern.insert({static_cast<int>(it.row()), static_cast<int>(it.col())});
  for (const auto& [r, c] : pattern) EXPECT_TRUE(pattern.count({c, r})) << r << "," << c;
}

TEST(HdgSolve, ZeroDataGivesZeroSolution) {
  ProblemSpec spec;
  spec.body_force = [](const Vec2&) { return Vec2(0.0, 0.0); };
  spec.dirichlet = [](const Vec2&) { return Vec2(0.0, 0.0); };
  spec.traction = [](const Vec2&, const Vec2&) { return Vec2(0.0, 0.0); };
  for (const TriMesh& m : {oracle::square_mesh(2, 0.2), oracle::pie_mesh(5)}) {
    const HdgSolution sol = solve(m, spec, SolverConfig{}, DegreeMap(m.num_elements(), 3));
    for (const ElementSolution& es : sol.elements) {
      EXPECT_EQ(oracle::element_vector(es).lpNorm<Eigen::Infinity>(), 0.0);
      EXPECT_EQ(es.rho, 0.0);
    }
    const LocalSystem ls = assemble_local(*sol.geometry, 0, sol.degrees, spec, SolverConfig{});
    EXPECT_EQ(ls.f.lpNorm<Eigen::Infinity>(), 0.0);
    EXPECT_EQ(condense(ls).z0.lpNorm<Eigen::Infinity>(), 0.0);
  }
}

TEST(HdgSolve, RobustToStabilisationScaling) {
  const auto s = oracle::polynomial_stokes(2, 21);
  const TriMesh m = oracle::square_mesh(2, 0.2, true);
  const ProblemSpec spec = polynomial_problem(s);
  const double tau0 = effective_tau(m, spec, SolverConfig{});
  EXPECT_NEAR(tau0, 3.0 / std::sqrt(2.0), 1e-14);
  for (double scale : {0.1, 10.0}) {
    SolverConfig cfg;
    cfg.tau = scale * tau0;
    const HdgSolution sol = solve(m, spec, cfg, DegreeMap(m.num_elements(), 2));
    EXPECT_LT(sol.relative_residual, 1e-9);
    EXPECT_LT(oracle::max_nodal_error(sol, s.exact), 1e-8);
  }
}

TEST(HdgSolve, LocalProblemsAreSatisfiedByTheSolution) {
  const Benchmark b = benchmark_circle();
  const TriMesh& m = *b.coarse;
  const SolverConfig cfg;
  const DegreeMap d(m.num_elements(), 3);
  const HdgSolution sol = solve(m, b.spec, cfg, d);
  for (int e = 0; e < m.num_elements(); ++e) {
    const LocalSystem ls = assemble_local(*sol.geometry, e, d, b.spec, cfg);
    Eigen::VectorXd r = ls.A * oracle::element_vector(sol.elements[e]) - ls.f;
    r(ls.zeta_index()) -= sol.elements[e].rho;
    for (int j = 0; j < 3; ++j)
      if (!ls.dirichlet[j]) r -= ls.B[j] * sol.traces[ls.face[j]];
    EXPECT_LT(r.lpNorm<Eigen::Infinity>(), 1e-10 * (1.0 + ls.f.lpNorm<Eigen::Infinity>()));
  }
}

TEST(HdgSolve, WavyTractionHoldsWeakly) {
  const Benchmark b = benchmark_wavy_channel();
  const TriMesh& m = *b.coarse;
  const SolverConfig cfg;
  const DegreeMap d(m.num_elements(), 3);
  const HdgSolution sol = solve(m, b.spec, cfg, d);
  EXPECT_LT(sol.relative_residual, 1e-9);
  int neumann_faces = 0;
  for (int e = 0; e < m.num_elements(); ++e) {
    const LocalSystem ls = assemble_local(*sol.geometry, e, d, b.spec, cfg);
    const Eigen::VectorXd z = oracle::element_vector(sol.elements[e]);
    for (int j = 0; j < 3; ++j) {
      const auto& bd = m.boundary(ls.face[j]);
      if (!bd || bd->tag != BoundaryTag::Neumann) continue;
      ++neumann_faces;
      const Eigen::VectorXd r = ls.R[j] * z - ls.T[j] * sol.traces[ls.face[j]] - ls.h[j];
      EXPECT_LT(r.lpNorm<Eigen::Infinity>(), 1e-9 * (1.0 + ls.h[j].lpNorm<Eigen::Infinity>()));
    }
  }
  EXPECT_EQ(neumann_faces, WavyOptions{}.nx);
}

TEST(HdgSolve, HigherDegreeIsMoreAccurateOnTheCircle) {
  const Benchmark b = benchmark_circle();
  const TriMesh m = nested_refine(*b.coarse);
  const HdgSolution s2 = solve(m, b.spec, SolverConfig{}, DegreeMap(m.num_elements(), 2));
  const HdgSolution s4 = solve(m, b.spec, SolverConfig{}, DegreeMap(m.num_elements(), 4));
  for (int e = 0; e < m.num_elements(); ++e) {
    const ElementErrors e2 = element_errors(s2, e, b.exact);
    const ElementErrors e4 = element_errors(s4, e, b.exact);
    EXPECT_LT(e4.u, e2.u);
    EXPECT_LT(e4.L, e2.L);
    EXPECT_LT(e4.p, e2.p);
  }
}

TEST(HdgSolve, CompatibilityOfTheCircleData) {
  const Benchmark b = benchmark_circle();
  EXPECT_LT(check_compatibility(*b.coarse, b.spec), 1e-10);
  EXPECT_NO_THROW(require_compatibility(*b.coarse, b.spec));
}

TEST(HdgSolve, SolverInputErrors) {
  const TriMesh m = oracle::square_mesh(1);
  const ProblemSpec spec = polynomial_problem(oracle::polynomial_stokes(1, 1));
  EXPECT_THROW(solve(m, spec, SolverConfig{}, DegreeMap{1}), ArgumentError);
  EXPECT_THROW(solve(m, spec, SolverConfig{}, DegreeMap{1, 0}), ArgumentError);
}
