// Module invariants checked on small synthetic inputs; no benchmark problem
// is constructed here.

#include "hdgnefem/adaptivity.hpp"
#include "hdgnefem/basis.hpp"
#include "hdgnefem/chart.hpp"
#include "hdgnefem/geometry.hpp"
#include "hdgnefem/hdg.hpp"
#include "hdgnefem/mesh.hpp"
#include "hdgnefem/nurbs.hpp"
#include "hdgnefem/quadrature.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <numeric>
#include <random>

using namespace hdgnefem;

namespace {

std::vector<Vec2> random_reference_points(int count, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<Vec2> out;
  while (static_cast<int>(out.size()) < count) {
    const Vec2 x(d(rng), d(rng));
    if (x.sum() < 1.0) out.push_back(x);
  }
  return out;
}

NurbsCurve wiggly_curve() {
  return NurbsCurve(3, {0, 0, 0, 0, 0.3, 0.6, 1, 1, 1, 1},
                    {{0, 0}, {0.2, 0.4}, {0.5, -0.2}, {0.7, 0.5}, {0.9, 0.1}, {1.2, 0.3}},
                    {1.0, 0.8, 1.3, 0.9, 1.1, 1.0});
}

}  // namespace

// ---- nurbs ----

TEST(NurbsProperties, CoincidentControlPointsGiveThatPoint) {
  const Vec2 P(0.3, -1.7);
  const NurbsCurve c(3, {0, 0, 0, 0, 0.4, 1, 1, 1, 1}, std::vector<Vec2>(5, P), {1, 2, 0.5, 1.5, 1});
  for (int i = 0; i <= 50; ++i) EXPECT_LT((c.evaluate(i / 50.0) - P).norm(), 1e-14);
}

TEST(NurbsProperties, SpanMatchesDeCasteljau) {
  // Degree 2 with interior knot 0.5: span [0.5, 1] is the Bezier segment with
  // control points (P1 + P2) / 2, P2, P3 for uniform weights.
  const std::vector<Vec2> P{{0, 0}, {1, 2}, {3, 1}, {4, 3}};
  const NurbsCurve c(2, {0, 0, 0, 0.5, 1, 1, 1}, P, {1, 1, 1, 1});
  const std::array<Vec2, 3> bez{0.5 * (P[1] + P[2]), P[2], P[3]};
  for (int i = 0; i <= 10; ++i) {
    const double t = i / 10.0;
    Vec2 a = (1 - t) * bez[0] + t * bez[1], b = (1 - t) * bez[1] + t * bez[2];
    const Vec2 ref = (1 - t) * a + t * b;
    EXPECT_LT((c.evaluate(0.5 + 0.5 * t) - ref).norm(), 1e-13);
  }
}

TEST(NurbsProperties, DerivativeMatchesFiniteDifferenceAtSpanMidpoints) {
  const NurbsCurve c = wiggly_curve();
  for (double l : {0.15, 0.45, 0.8}) {
    const double h = 1e-6;
    const Vec2 fd = (c.evaluate(l + h) - c.evaluate(l - h)) / (2 * h);
    const Vec2 d1 = c.derivative(l, 1);
    EXPECT_LT((fd - d1).norm(), 1e-6 * d1.norm());
    const Vec2 fd2 = (c.derivative(l + h, 1) - c.derivative(l - h, 1)) / (2 * h);
    EXPECT_LT((fd2 - c.derivative(l, 2)).norm(), 1e-5 * (1 + fd2.norm()));
  }
}

// ---- mesh ----

TEST(MeshProperties, RefinementPreservesTagsAndIntervals) {
  const TriMesh m = oracle::pie_mesh(5);
  const TriMesh r = nested_refine(m);
  double parent = 0.0, child = 0.0;
  for (int f = 0; f < m.num_faces(); ++f)
    if (m.is_curved(f)) parent += m.boundary(f)->interval->lambda_b - m.boundary(f)->interval->lambda_a;
  for (int f = 0; f < r.num_faces(); ++f) {
    if (!r.faces()[f].is_boundary()) continue;
    ASSERT_TRUE(r.boundary(f).has_value());
    EXPECT_EQ(r.boundary(f)->tag, BoundaryTag::Dirichlet);
    ASSERT_TRUE(r.is_curved(f));
    EXPECT_EQ(r.boundary(f)->interval->curve_id, 0);
    child += r.boundary(f)->interval->lambda_b - r.boundary(f)->interval->lambda_a;
  }
  EXPECT_NEAR(parent, child, 1e-14);
}

TEST(MeshProperties, AreaInvariantUnderRefinement) {
  for (auto strategy : {GeometryStrategy::nefem(), GeometryStrategy::iso_fixed(4)}) {
    TriMesh m = oracle::pie_mesh(6);
    std::vector<double> totals;
    for (int level = 0; level < 3; ++level) {
      const GeometryBackend geo(m, strategy, DegreeMap(m.num_elements(), 8));
      double a = 0.0;
      for (int e = 0; e < m.num_elements(); ++e) a += geo.element_area(e);
      totals.push_back(a);
      m = nested_refine(m);
    }
    if (strategy.kind == GeometryStrategy::Kind::Nefem) {
      for (double a : totals) EXPECT_NEAR(a, std::numbers::pi * 0.25, 1e-10 * a);
    } else {
      // The polynomial boundary changes with the mesh, the exact disc does not.
      for (double a : totals) EXPECT_NEAR(a, std::numbers::pi * 0.25, 1e-4);
    }
  }
}

TEST(MeshProperties, InteriorFacesAreTraversedInOppositeDirections) {
  const TriMesh m = oracle::square_mesh(3, 0.2);
  for (const Face& f : m.faces()) {
    if (f.is_boundary()) continue;
    const Triangle& L = m.elements()[f.left];
    const Triangle& R = m.elements()[f.right];
    EXPECT_EQ(L[f.left_edge], R[(f.right_edge + 1) % 3]);
    EXPECT_EQ(L[(f.left_edge + 1) % 3], R[f.right_edge]);
  }
}

// ---- approximation ----

TEST(BasisProperties, ReferenceDeltaAndPartitionOfUnity) {
  for (int k = 1; k <= 8; ++k) {
    const ReferenceBasis& b = reference_basis(k);
    const BasisTable at_nodes = b.tabulate(b.nodes());
    EXPECT_LT((at_nodes.values - Eigen::MatrixXd::Identity(b.size(), b.size())).norm(), 1e-10);
    const BasisTable t = b.tabulate(random_reference_points(20, k));
    for (int r = 0; r < t.values.rows(); ++r) {
      EXPECT_NEAR(t.values.row(r).sum(), 1.0, 1e-10);
      EXPECT_NEAR(t.dx.row(r).sum(), 0.0, 1e-8);
      EXPECT_NEAR(t.dy.row(r).sum(), 0.0, 1e-8);
    }
  }
}

TEST(BasisProperties, GradientsMatchFiniteDifferences) {
  const double h = 1e-6;
  for (int k : {1, 3, 6}) {
    const ReferenceBasis& b = reference_basis(k);
    for (const Vec2& x : random_reference_points(5, 11 * k)) {
      Eigen::VectorXd v(b.size()), vp(b.size()), vm(b.size());
      Eigen::MatrixXd g(b.size(), 2), scratch(b.size(), 2);
      b.evaluate(x, v, g);
      for (int a = 0; a < 2; ++a) {
        b.evaluate(x + h * Vec2::Unit(a), vp, scratch);
        b.evaluate(x - h * Vec2::Unit(a), vm, scratch);
        const Eigen::VectorXd fd = (vp - vm) / (2 * h);
        EXPECT_LT((fd - g.col(a)).norm(), 1e-5 * std::max(1.0, g.col(a).norm()));
      }
    }
  }
  const std::vector<Vec2> nodes = [] {
    std::vector<Vec2> n;
    Mat2 A;
    A << 0.3, 0.05, 0.02, 0.25;
    for (const Vec2& r : reference_basis(3).nodes()) n.push_back(Vec2(0.2, 0.1) + A * r);
    return n;
  }();
  const PhysicalBasis pb(3, nodes);
  Eigen::VectorXd v(pb.size()), vp(pb.size()), vm(pb.size());
  Eigen::MatrixXd g(pb.size(), 2), scratch(pb.size(), 2);
  const Vec2 x(0.33, 0.22);
  pb.evaluate(x, v, g);
  for (int a = 0; a < 2; ++a) {
    pb.evaluate(x + h * Vec2::Unit(a), vp, scratch);
    pb.evaluate(x - h * Vec2::Unit(a), vm, scratch);
    EXPECT_LT(((vp - vm) / (2 * h) - g.col(a)).norm(), 1e-5 * g.col(a).norm());
  }
}

TEST(BasisProperties, PhysicalAndReferenceBasesSpanTheSameSpace) {
  const Vec2 A(0.1, 0.2), B(0.7, 0.3), C(0.4, 0.9);
  Mat2 J;
  J.col(0) = B - A;
  J.col(1) = C - A;
  std::mt19937 rng(3);
  for (int k = 1; k <= 5; ++k) {
    const ReferenceBasis& rb = reference_basis(k);
    std::vector<Vec2> phys;
    for (const Vec2& r : rb.nodes()) phys.push_back(A + J * r);
    const PhysicalBasis pb(k, phys);
    const oracle::Poly2 poly = oracle::random_poly(k, rng);
    Eigen::VectorXd coef(rb.size());
    for (int i = 0; i < rb.size(); ++i) coef(i) = poly(phys[i]);
    for (const Vec2& r : random_reference_points(10, k)) {
      Eigen::VectorXd vr(rb.size()), vp(pb.size());
      Eigen::MatrixXd g(rb.size(), 2);
      rb.evaluate(r, vr, g);
      pb.evaluate(A + J * r, vp, g);
      EXPECT_NEAR(vr.dot(coef), vp.dot(coef), 1e-9);
      EXPECT_NEAR(vr.dot(coef), poly(A + J * r), 1e-9);
    }
  }
}

TEST(BasisProperties, TraceBasisDeltaAndPolynomialReproduction) {
  for (int k = 1; k <= 8; ++k) {
    const TraceBasis& t = trace_basis(k);
    for (int i = 0; i <= k; ++i) {
      const Eigen::VectorXd v = t.values(t.nodes()[i]);
      EXPECT_LT((v - Eigen::VectorXd::Unit(k + 1, i)).norm(), 1e-11);
    }
    Eigen::VectorXd coef(k + 1);
    for (int i = 0; i <= k; ++i) coef(i) = std::pow(t.nodes()[i], k) - 2 * t.nodes()[i];
    for (double s : {0.13, 0.5, 0.91}) {
      EXPECT_NEAR(t.values(s).sum(), 1.0, 1e-12);
      EXPECT_NEAR(t.values(s).dot(coef), std::pow(s, k) - 2 * s, 1e-11);
    }
  }
}

TEST(GeometryProperties, IsoparametricJacobianMatchesFiniteDifferences) {
  const int q = 3;
  std::vector<Vec2> nodes;
  for (const Vec2& r : reference_basis(q).nodes())
    nodes.push_back(Vec2(r.x() + 0.3 * r.y() + 0.1 * r.x() * r.y(), r.y() - 0.1 * r.x() * r.x()));
  const double h = 1e-6;
  for (const Vec2& xi : random_reference_points(8, 5)) {
    const auto [x, J] = isoparametric_map(nodes, q, xi);
    for (int a = 0; a < 2; ++a) {
      const Vec2 fd = (isoparametric_map(nodes, q, xi + h * Vec2::Unit(a)).first -
                       isoparametric_map(nodes, q, xi - h * Vec2::Unit(a)).first) / (2 * h);
      EXPECT_LT((fd - J.col(a)).norm(), 1e-6);
    }
  }
}

TEST(GeometryProperties, NefemChartJacobianMatchesFiniteDifferences) {
  const NurbsCurve c = wiggly_curve();
  const NefemChart chart(c, ParamInterval{0, 0.2, 0.7}, true, Vec2(0.5, 1.5));
  const double h = 1e-6;
  for (double l1 : {0.25, 0.45, 0.65})
    for (double l2 : {0.0, 0.3, 0.9}) {
      const auto [x, J] = chart.map(l1, l2);
      const Vec2 f1 = (chart.map(l1 + h, l2).first - chart.map(l1 - h, l2).first) / (2 * h);
      const Vec2 f2 = (chart.map(l1, l2 + h).first - chart.map(l1, l2 - h).first) / (2 * h);
      EXPECT_LT((f1 - J.col(0)).norm(), 1e-6);
      EXPECT_LT((f2 - J.col(1)).norm(), 1e-6);
    }
}

TEST(GeometryProperties, ChartJacobianPositiveAtAllQuadraturePoints) {
  for (int sectors : {3, 5, 8}) {
    const TriMesh m = nested_refine(oracle::pie_mesh(sectors));
    const GeometryBackend geo(m, GeometryStrategy::nefem(), DegreeMap(m.num_elements(), 4));
    for (int e = 0; e < m.num_elements(); ++e) {
      if (geo.kind(e) != ElementKind::Nefem) continue;
      EXPECT_NO_THROW(nefem_element_rule(geo.chart(e), 4));
    }
  }
}

// ---- quadrature ----

TEST(QuadratureProperties, WeightsArePositive) {
  for (int n = 1; n <= 20; ++n)
    for (double w : gauss_segment(n).weights) EXPECT_GT(w, 0.0);
  for (int d = 0; d <= 30; ++d)
    for (double w : triangle_rule(d).weights) EXPECT_GT(w, 0.0);
  const TriMesh m = oracle::pie_mesh(4);
  const GeometryBackend geo(m, GeometryStrategy::nefem(), DegreeMap(4, 3));
  for (double w : nefem_element_rule(geo.chart(0), 3).weights) EXPECT_GT(w, 0.0);
}

TEST(QuadratureProperties, FaceRulesAreAdditive) {
  const NurbsCurve c = wiggly_curve();
  auto sum = [&](double a, double b, int n = 0) {
    const CurveFaceRule r = nefem_face_rule(c, ParamInterval{0, a, b}, 3, n);
    return std::accumulate(r.weights.begin(), r.weights.end(), 0.0);
  };
  EXPECT_NEAR(sum(0.1, 0.9), sum(0.1, 0.3) + sum(0.3, 0.9), 1e-12);
  EXPECT_NEAR(sum(0.1, 0.9, 24), sum(0.1, 0.45, 24) + sum(0.45, 0.9, 24), 1e-12);
}

TEST(QuadratureProperties, IsoparametricAndNefemAgreeOnStraightElements) {
  const NurbsCurve line(1, {0, 0, 1, 1}, {{0.2, 0.1}, {0.9, 0.3}}, {1, 1});
  const Vec2 apex(0.4, 0.8);
  const NefemChart chart(line, ParamInterval{0, 0.0, 1.0}, true, apex);
  const PhysicalRule nr = nefem_element_rule(chart, 3);
  const std::vector<Vec2> verts{line.evaluate(0.0), line.evaluate(1.0), apex};
  Mat2 J;
  J.col(0) = verts[1] - verts[0];
  J.col(1) = verts[2] - verts[0];
  const QuadratureRule2D& tr = triangle_rule(8);
  auto f = [](const Vec2& x) { return 1 + x.x() * x.x() * x.y() - 3 * std::pow(x.y(), 3); };
  double iso = 0.0, nef = 0.0;
  for (std::size_t q = 0; q < tr.points.size(); ++q) iso += tr.weights[q] * J.determinant() * f(verts[0] + J * tr.points[q]);
  for (std::size_t q = 0; q < nr.points.size(); ++q) nef += nr.weights[q] * f(nr.points[q]);
  EXPECT_NEAR(iso, nef, 1e-11);
}

// ---- hdg_solver ----

TEST(SolverProperties, CompatibilityResidualVanishesForSolenoidalData) {
  ProblemSpec spec;
  const TriMesh disc = oracle::pie_mesh(6);
  const TriMesh square = oracle::square_mesh(3, 0.2);
  spec.dirichlet = [](const Vec2&) { return Vec2(0.0, 0.0); };
  EXPECT_EQ(check_compatibility(disc, spec), 0.0);
  spec.dirichlet = [](const Vec2&) { return Vec2(1.0, 0.0); };
  EXPECT_LT(check_compatibility(disc, spec), 1e-13);
  EXPECT_LT(check_compatibility(square, spec), 1e-14);
  spec.dirichlet = oracle::polynomial_stokes(4, 9).exact.u;
  EXPECT_LT(check_compatibility(disc, spec), 1e-11);
  EXPECT_NO_THROW(require_compatibility(disc, spec));
}

TEST(SolverProperties, CompatibilityResidualDetectsSources) {
  ProblemSpec spec;
  spec.dirichlet = [](const Vec2& x) { return Vec2(x.x(), 0.0); };
  const TriMesh disc = oracle::pie_mesh(6);
  EXPECT_NEAR(check_compatibility(disc, spec), std::numbers::pi * 0.25, 1e-10);
  EXPECT_THROW(require_compatibility(disc, spec), DomainError);
}

// ---- adaptivity ----

namespace {

HdgSolution manual_solution(const TriMesh& mesh, int k) {
  HdgSolution sol;
  sol.geometry = std::make_shared<GeometryBackend>(mesh, GeometryStrategy::nefem(), DegreeMap(mesh.num_elements(), k));
  sol.degrees.assign(mesh.num_elements(), k);
  const int n = triangle_node_count(k);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    ElementSolution es;
    es.k = k;
    es.L = Eigen::MatrixXd::Zero(n, 4);
    es.u = Eigen::MatrixXd::Zero(n, 2);
    es.p = Eigen::VectorXd::Zero(n);
    sol.elements.push_back(es);
  }
  return sol;
}

TriMesh one_triangle(double scale) {
  return TriMesh({{0, 0}, {scale, 0}, {0, scale}}, {{0, 1, 2}},
                 {{0, 1, BoundaryTag::Dirichlet, std::nullopt},
                  {1, 2, BoundaryTag::Dirichlet, std::nullopt},
                  {2, 0, BoundaryTag::Dirichlet, std::nullopt}});
}

}  // namespace

TEST(EstimatorProperties, ConstantDifferenceGivesItsNormAtAnySize) {
  const Vec2 c(0.3, -0.4);
  for (double scale : {1.0, 0.01}) {
    const TriMesh m = one_triangle(scale);
    HdgSolution sol = manual_solution(m, 2);
    const auto u = oracle::polynomial_stokes(2, 4).exact.u;
    const std::vector<Vec2> nodes = sol.geometry->nodal_points(0, 2);
    for (std::size_t i = 0; i < nodes.size(); ++i) sol.elements[0].u.row(i) = u(nodes[i]).transpose();
    PostprocessedField post;
    post.element = 0;
    post.k = 3;
    const std::vector<Vec2> pn = sol.geometry->nodal_points(0, 3);
    post.coefficients.resize(pn.size(), 2);
    for (std::size_t i = 0; i < pn.size(); ++i) post.coefficients.row(i) = (u(pn[i]) + c).transpose();
    EXPECT_NEAR(estimate_error(sol, 0, post), c.norm(), 1e-12);
    post.coefficients.rowwise() -= c.transpose();
    EXPECT_NEAR(estimate_error(sol, 0, post), 0.0, 1e-12);
  }
}

TEST(EstimatorProperties, LinearDifferenceOnUnitTriangle) {
  const TriMesh m = one_triangle(1.0);
  HdgSolution sol = manual_solution(m, 1);
  PostprocessedField post;
  post.element = 0;
  post.k = 2;
  const std::vector<Vec2> pn = sol.geometry->nodal_points(0, 2);
  post.coefficients = Eigen::MatrixXd::Zero(pn.size(), 2);
  for (std::size_t i = 0; i < pn.size(); ++i) post.coefficients(i, 0) = pn[i].x();
  EXPECT_NEAR(estimate_error(sol, 0, post), std::sqrt(1.0 / 6.0), 1e-13);
}

TEST(EstimatorProperties, DegreeIncrementInvariantUnderCommonScaling) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> lg(-8.0, 0.0), hs(0.01, 0.9);
  for (int i = 0; i < 200; ++i) {
    const double eps = std::pow(10.0, lg(rng)), E = std::pow(10.0, lg(rng)), h = hs(rng);
    EXPECT_EQ(degree_increment(E, eps, h), degree_increment(E * 64.0, eps * 64.0, h));
  }
}

TEST(EstimatorProperties, ClampingKeepsDegreesInBounds) {
  const TriMesh m = oracle::square_mesh(2);
  AdaptConfig cfg;
  cfg.k_min = 2;
  cfg.k_max = 5;
  cfg.eps = 1e-3;
  DegreeMap d(m.num_elements(), 3);
  std::vector<double> est{1e3, 1e-12, 0.0, 1e-3, 2e-3, 1.0, 1e-7, 5e-4};
  const DegreeMap next = next_degrees(m, d, est, cfg);
  for (int k : next) {
    EXPECT_GE(k, cfg.k_min);
    EXPECT_LE(k, cfg.k_max);
  }
  EXPECT_EQ(next[0], 5);
  EXPECT_EQ(next[2], 2);
}
