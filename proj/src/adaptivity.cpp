#include "hdgnefem/adaptivity.hpp"

#include <algorithm>
#include <cmath>

namespace hdgnefem {

namespace {

ElementTables post_tables(const HdgSolution& sol, int e) {
  const int k = sol.degrees[e];
  return sol.geometry->tables(e, k, {2, 2, 2}, k + 1);
}

}  // namespace

PostprocessedField postprocess(const HdgSolution& sol, int e) {
  const ElementTables t = post_tables(sol, e);
  const ElementSolution& es = sol.elements[e];
  const BasisTable& pb = *t.post_basis;
  const int np = static_cast<int>(pb.values.cols());
  const Eigen::VectorXd& w = t.w;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(np + 1, np + 1);
  A.topLeftCorner(np, np) = pb.dx.transpose() * w.asDiagonal() * pb.dx +
                            pb.dy.transpose() * w.asDiagonal() * pb.dy;
  const Eigen::VectorXd mass = pb.values.transpose() * w;
  A.block(0, np, np, 1) = mass;
  A.block(np, 0, 1, np) = mass.transpose();

  const Eigen::MatrixXd Lq = t.basis.values * es.L;  // points x 4
  const Eigen::MatrixXd uq = t.basis.values * es.u;
  Eigen::MatrixXd rhs(np + 1, 2);
  for (int b = 0; b < 2; ++b) {
    rhs.col(b).head(np) = -(pb.dx.transpose() * w.cwiseProduct(Lq.col(b)) +
                            pb.dy.transpose() * w.cwiseProduct(Lq.col(2 + b)));
    rhs(np, b) = w.dot(uq.col(b));
  }
  PostprocessedField post;
  post.element = e;
  post.k = sol.degrees[e] + 1;
  post.coefficients = Eigen::PartialPivLU<Eigen::MatrixXd>(A).solve(rhs).topRows(np);
  return post;
}

double estimate_error(const HdgSolution& sol, int e, const PostprocessedField& post) {
  const ElementTables t = post_tables(sol, e);
  const Eigen::MatrixXd diff = t.post_basis->values * post.coefficients -
                               t.basis.values * sol.elements[e].u;
  const double integral = t.w.dot(diff.rowwise().squaredNorm());
  return std::sqrt(std::max(0.0, integral) / t.area());
}

int degree_increment(double estimate, double eps, double h) {
  if (!(h > 0.0 && h < 1.0)) throw DomainError("degree_increment: element size must lie in (0, 1)");
  if (!(eps > 0.0)) throw DomainError("degree_increment: desired error must be positive");
  if (!(estimate >= 0.0)) throw DomainError("degree_increment: negative error estimate");
  if (estimate == 0.0) return -kMaxBasisDegree;
  double r = std::log(eps / estimate) / std::log(h);
  const double nearest = std::round(r);
  if (std::abs(r - nearest) < 1e-9) r = nearest;
  return static_cast<int>(std::ceil(r));
}

ElementErrors element_errors(const HdgSolution& sol, int e, const ExactSolution& exact) {
  const ElementTables t = post_tables(sol, e);
  const ElementSolution& es = sol.elements[e];
  const PostprocessedField post = postprocess(sol, e);
  const Eigen::MatrixXd uq = t.basis.values * es.u;
  const Eigen::MatrixXd Lq = t.basis.values * es.L;
  const Eigen::VectorXd pq = t.basis.values * es.p;
  const Eigen::MatrixXd sq = t.post_basis->values * post.coefficients;
  ElementErrors out;
  out.area = t.area();
  double eu = 0.0, es2 = 0.0, eL = 0.0, ep = 0.0, est = 0.0;
  for (int q = 0; q < static_cast<int>(t.x.size()); ++q) {
    const double w = t.w(q);
    const Vec2 ue = exact.u(t.x[q]);
    const Mat2 ge = exact.grad_u(t.x[q]);
    eu += w * (uq.row(q).transpose() - ue).squaredNorm();
    es2 += w * (sq.row(q).transpose() - ue).squaredNorm();
    est += w * (sq.row(q) - uq.row(q)).squaredNorm();
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const double d = Lq(q, 2 * a + b) + ge(a, b);
        eL += w * d * d;
      }
    const double dp = pq(q) - exact.p(t.x[q]);
    ep += w * dp * dp;
  }
  out.u = std::sqrt(eu);
  out.u_star = std::sqrt(es2);
  out.L = std::sqrt(eL);
  out.p = std::sqrt(ep);
  out.estimate = std::sqrt(est / out.area);
  return out;
}

DegreeMap next_degrees(const TriMesh& mesh, const DegreeMap& degrees,
                       const std::vector<double>& estimate, const AdaptConfig& config,
                       const DegreeMap* floor) {
  DegreeMap out(degrees.size());
  for (std::size_t e = 0; e < degrees.size(); ++e) {
    const double h = element_size(mesh, static_cast<int>(e));
    const int dk = std::max(degree_increment(estimate[e], config.eps, h), -config.max_decrease);
    const int lo = floor ? std::clamp((*floor)[e], config.k_min, config.k_max) : config.k_min;
    out[e] = std::clamp(degrees[e] + dk, lo, config.k_max);
  }
  return out;
}

AdaptReport adapt_loop(const TriMesh& mesh, const ProblemSpec& spec, const SolverConfig& solver,
                       const AdaptConfig& config, const ExactSolution* exact) {
  if (!(config.eps > 0.0)) throw ArgumentError("adapt_loop: eps must be positive");
  if (config.k_min < 1 || config.k_max < config.k_min || config.k_max >= kMaxBasisDegree)
    throw ArgumentError("adapt_loop: invalid degree bounds");
  if (config.max_decrease < 0) throw ArgumentError("adapt_loop: max_decrease must be non-negative");
  AdaptReport report;
  report.strategy = solver.geometry.name();
  report.eps = config.eps;
  DegreeMap degrees(mesh.num_elements(),
                    std::clamp(config.initial_degree, config.k_min, config.k_max));
  DegreeMap floor(mesh.num_elements(), config.k_min);
  auto geo = std::make_shared<GeometryBackend>(mesh, solver.geometry, degrees, solver.quadrature);
  for (int it = 0; it < config.max_iterations; ++it) {
    geo->update(degrees);
    const HdgSolution sol = solve(geo, spec, solver, degrees);
    AdaptIteration rec;
    rec.degrees = degrees;
    rec.dofs = sol.global_dofs;
    rec.estimate.resize(mesh.num_elements());
    if (exact) rec.exact.resize(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
      if (exact) {
        const ElementErrors err = element_errors(sol, e, *exact);
        rec.estimate[e] = err.estimate;
        rec.exact[e] = err.u / std::sqrt(err.area);
      } else {
        rec.estimate[e] = estimate_error(sol, e, postprocess(sol, e));
      }
    }
    rec.max_estimate = *std::max_element(rec.estimate.begin(), rec.estimate.end());
    if (exact) rec.max_exact = *std::max_element(rec.exact.begin(), rec.exact.end());
    rec.converged = rec.max_estimate <= config.eps;
    if (config.keep_floor)
      for (int e = 0; e < mesh.num_elements(); ++e)
        if (rec.estimate[e] > config.eps) floor[e] = std::max(floor[e], degrees[e] + 1);
    const DegreeMap next =
        next_degrees(mesh, degrees, rec.estimate, config, config.keep_floor ? &floor : nullptr);
    for (int e = 0; e < mesh.num_elements(); ++e) rec.increment.push_back(next[e] - degrees[e]);
    report.iterations.push_back(rec);
    if (rec.converged) {
      report.converged = true;
      break;
    }
    degrees = next;
  }
  return report;
}

}  // namespace hdgnefem
