#include "hdgnefem/hdg.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hdgnefem {

int face_degree(const TriMesh& mesh, const DegreeMap& degrees, int f) {
  const Face& face = mesh.faces()[f];
  if (face.is_boundary()) return degrees[face.left];
  return std::max(degrees[face.left], degrees[face.right]);
}

int face_quadrature_points(const GeometryBackend& geo, const DegreeMap& degrees, int f,
                           const SolverConfig& config) {
  const TriMesh& mesh = geo.mesh();
  const Face& face = mesh.faces()[f];
  int k = degrees[face.left];
  if (!face.is_boundary()) k = std::max(k, degrees[face.right]);
  int n = k + config.face_extra_points;
  if (mesh.is_curved(f)) {
    const int e = face.left;
    if (geo.kind(e) == ElementKind::Nefem) {
      const ParamInterval& iv = *mesh.boundary(f)->interval;
      n += (*mesh.curves())[iv.curve_id].degree();
    } else {
      n += geo.geometry_degree(e);
    }
  }
  return n;
}

double effective_tau(const TriMesh& mesh, const ProblemSpec& spec, const SolverConfig& config) {
  if (config.tau > 0.0) return config.tau;
  if (!(spec.nu > 0.0)) throw ArgumentError("viscosity must be positive");
  return 3.0 * spec.nu / mesh.domain_diameter();
}

namespace {

// Where boundary data is sampled at face coordinate s.
Vec2 data_point(const TriMesh& mesh, int f, double s) {
  if (mesh.is_curved(f)) {
    const ParamInterval& iv = *mesh.boundary(f)->interval;
    return (*mesh.curves())[iv.curve_id].evaluate(iv.lambda_a + s * (iv.lambda_b - iv.lambda_a));
  }
  const Face& face = mesh.faces()[f];
  return mesh.vertices()[face.v0] + s * (mesh.vertices()[face.v1] - mesh.vertices()[face.v0]);
}

Eigen::VectorXd dirichlet_interpolant(const TriMesh& mesh, int f, int k_hat,
                                      const VectorField& u_d) {
  const TraceBasis& tb = trace_basis(k_hat);
  Eigen::VectorXd out(2 * (k_hat + 1));
  for (int j = 0; j <= k_hat; ++j) {
    const Vec2 v = u_d(data_point(mesh, f, tb.nodes()[j]));
    out(j) = v.x();
    out(k_hat + 1 + j) = v.y();
  }
  return out;
}

bool is_dirichlet(const TriMesh& mesh, int f) {
  const auto& bd = mesh.boundary(f);
  return bd && bd->tag == BoundaryTag::Dirichlet;
}

}  // namespace

LocalSystem assemble_local(const GeometryBackend& geo, int e, const DegreeMap& degrees,
                           const ProblemSpec& spec, const SolverConfig& config) {
  const TriMesh& mesh = geo.mesh();
  const double nu = spec.nu;
  const double tau = effective_tau(mesh, spec, config);
  LocalSystem ls;
  ls.element = e;
  ls.k = degrees[e];
  std::array<int, 3> npts{};
  for (int j = 0; j < 3; ++j) {
    const int f = mesh.element_faces(e)[j];
    ls.face[j] = f;
    ls.face_k[j] = face_degree(mesh, degrees, f);
    ls.dirichlet[j] = is_dirichlet(mesh, f);
    npts[j] = face_quadrature_points(geo, degrees, f, config);
  }
  const ElementTables t = geo.tables(e, ls.k, npts);
  const int n = t.size();
  ls.n = n;
  const int m = ls.size();
  ls.A = Eigen::MatrixXd::Zero(m, m);
  ls.f = Eigen::VectorXd::Zero(m);

  const Eigen::MatrixXd& V = t.basis.values;
  const std::array<const Eigen::MatrixXd*, 2> D{&t.basis.dx, &t.basis.dy};
  const Eigen::MatrixXd WV = t.w.asDiagonal() * V;
  const Eigen::MatrixXd M = V.transpose() * WV;
  const std::array<Eigen::MatrixXd, 2> C{D[0]->transpose() * WV, D[1]->transpose() * WV};

  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      ls.A.block(ls.L_offset(a, b), ls.L_offset(a, b), n, n) = M;
      ls.A.block(ls.L_offset(a, b), ls.u_offset(b), n, n) = -C[a];
      ls.A.block(ls.u_offset(b), ls.L_offset(a, b), n, n) = -nu * C[a];
    }
  for (int b = 0; b < 2; ++b) {
    ls.A.block(ls.u_offset(b), ls.p_offset(), n, n) = -C[b];
    ls.A.block(ls.p_offset(), ls.u_offset(b), n, n) = C[b];
  }
  if (spec.body_force) {
    Eigen::MatrixXd s(V.rows(), 2);
    for (int q = 0; q < V.rows(); ++q) s.row(q) = spec.body_force(t.x[q]).transpose();
    for (int b = 0; b < 2; ++b) ls.f.segment(ls.u_offset(b), n) = WV.transpose() * s.col(b);
  }

  Eigen::VectorXd a_vec = Eigen::VectorXd::Zero(n);
  ls.pressure_row = Eigen::VectorXd::Zero(n);
  if (config.pressure_constraint == PressureConstraint::Volume) {
    ls.pressure_row = WV.transpose() * Eigen::VectorXd::Ones(V.rows());
    if (spec.pressure_reference)
      for (int q = 0; q < V.rows(); ++q) ls.pressure_target += t.w(q) * spec.pressure_reference(t.x[q]);
  }
  for (int j = 0; j < 3; ++j) {
    const FaceTable& ft = t.faces[j];
    const Eigen::MatrixXd& N = ft.basis;
    const int nq = static_cast<int>(ft.s.size());
    Eigen::MatrixXd nrm(nq, 2);
    for (int q = 0; q < nq; ++q) nrm.row(q) = ft.normal[q].transpose();
    const Eigen::MatrixXd WN = ft.w.asDiagonal() * N;
    const Eigen::MatrixXd S = N.transpose() * WN;
    std::array<Eigen::MatrixXd, 2> F;
    for (int a = 0; a < 2; ++a) F[a] = N.transpose() * (ft.w.cwiseProduct(nrm.col(a))).asDiagonal() * N;
    a_vec += WN.transpose() * Eigen::VectorXd::Ones(nq);
    const bool on_boundary = mesh.faces()[ft.face].is_boundary();
    if (config.pressure_constraint == PressureConstraint::ElementBoundaries ||
        (on_boundary && config.pressure_constraint == PressureConstraint::DomainBoundary)) {
      ls.pressure_row += WN.transpose() * Eigen::VectorXd::Ones(nq);
      if (spec.pressure_reference)
        for (int q = 0; q < nq; ++q)
          ls.pressure_target += ft.w(q) * spec.pressure_reference(ft.x[q]);
    }

    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) ls.A.block(ls.u_offset(b), ls.L_offset(a, b), n, n) += nu * F[a];
    for (int b = 0; b < 2; ++b) {
      ls.A.block(ls.u_offset(b), ls.p_offset(), n, n) += F[b];
      ls.A.block(ls.u_offset(b), ls.u_offset(b), n, n) += tau * S;
    }

    const int kh = ls.face_k[j];
    const int nt = kh + 1;
    if (ls.dirichlet[j]) {
      Eigen::MatrixXd ud(nq, 2);
      for (int q = 0; q < nq; ++q) ud.row(q) = spec.dirichlet(ft.data_x[q]).transpose();
      const Eigen::VectorXd udn = ud.col(0).cwiseProduct(nrm.col(0)) + ud.col(1).cwiseProduct(nrm.col(1));
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          ls.f.segment(ls.L_offset(a, b), n) -= WN.transpose() * nrm.col(a).cwiseProduct(ud.col(b));
      for (int b = 0; b < 2; ++b) ls.f.segment(ls.u_offset(b), n) += tau * WN.transpose() * ud.col(b);
      ls.f.segment(ls.p_offset(), n) += WN.transpose() * udn;
      ls.g -= ft.w.dot(udn);
      ls.dirichlet_trace[j] = dirichlet_interpolant(mesh, ft.face, kh, spec.dirichlet);
      continue;
    }

    const TraceBasis& tb = trace_basis(kh);
    Eigen::MatrixXd mu(nq, nt);
    for (int q = 0; q < nq; ++q) mu.row(q) = tb.values(ft.s[q]).transpose();
    const Eigen::MatrixXd Wmu = ft.w.asDiagonal() * mu;
    const Eigen::MatrixXd Nmu = N.transpose() * Wmu;  // n x nt
    const Eigen::MatrixXd mumu = mu.transpose() * Wmu;

    Eigen::MatrixXd& B = ls.B[j];
    Eigen::MatrixXd& R = ls.R[j];
    B = Eigen::MatrixXd::Zero(m, 2 * nt);
    R = Eigen::MatrixXd::Zero(2 * nt, m);
    ls.T[j] = Eigen::MatrixXd::Zero(2 * nt, 2 * nt);
    ls.h[j] = Eigen::VectorXd::Zero(2 * nt);
    ls.P[j] = Eigen::RowVectorXd::Zero(2 * nt);
    for (int b = 0; b < 2; ++b) {
      for (int a = 0; a < 2; ++a) {
        const Eigen::MatrixXd Nn_mu = N.transpose() * (ft.w.cwiseProduct(nrm.col(a))).asDiagonal() * mu;
        B.block(ls.L_offset(a, b), b * nt, n, nt) = -Nn_mu;
        R.block(b * nt, ls.L_offset(a, b), nt, n) = nu * Nn_mu.transpose();
      }
      const Eigen::MatrixXd Nnb_mu = N.transpose() * (ft.w.cwiseProduct(nrm.col(b))).asDiagonal() * mu;
      B.block(ls.u_offset(b), b * nt, n, nt) = tau * Nmu;
      B.block(ls.p_offset(), b * nt, n, nt) = Nnb_mu;
      R.block(b * nt, ls.p_offset(), nt, n) = Nnb_mu.transpose();
      R.block(b * nt, ls.u_offset(b), nt, n) = tau * Nmu.transpose();
      ls.T[j].block(b * nt, b * nt, nt, nt) = tau * mumu;
      ls.P[j].segment(b * nt, nt) = (Wmu.transpose() * nrm.col(b)).transpose();
    }
    const auto& bd = mesh.boundary(ft.face);
    if (bd && bd->tag == BoundaryTag::Neumann) {
      if (!spec.traction) throw ArgumentError("Neumann boundary without traction data");
      Eigen::MatrixXd tr(nq, 2);
      for (int q = 0; q < nq; ++q) tr.row(q) = spec.traction(ft.data_x[q], ft.data_normal[q]).transpose();
      for (int b = 0; b < 2; ++b) ls.h[j].segment(b * nt, nt) = -Wmu.transpose() * tr.col(b);
    }
  }
  ls.A.block(ls.p_offset(), ls.zeta_index(), n, 1) = a_vec;
  ls.A.block(ls.zeta_index(), ls.p_offset(), 1, n) = a_vec.transpose();
  return ls;
}

CondensedElement condense(const LocalSystem& ls) {
  const int m = ls.size();
  CondensedElement ce;
  ce.element = ls.element;
  ce.g = ls.g;
  ce.pressure_target = ls.pressure_target;
  int cols = 0;
  for (int j = 0; j < 3; ++j) {
    if (ls.dirichlet[j]) continue;
    ce.trace_faces.push_back(ls.face[j]);
    ce.trace_offsets.push_back(cols);
    cols += static_cast<int>(ls.B[j].cols());
  }
  Eigen::MatrixXd rhs(m, cols + 2);
  rhs.col(0) = ls.f;
  rhs.col(cols + 1) = Eigen::VectorXd::Unit(m, ls.zeta_index());
  {
    int c = 1;
    for (int j = 0; j < 3; ++j) {
      if (ls.dirichlet[j]) continue;
      rhs.middleCols(c, ls.B[j].cols()) = ls.B[j];
      c += static_cast<int>(ls.B[j].cols());
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(ls.A);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-15)) {
    std::ostringstream msg;
    msg << "singular local system on element " << ls.element << " (condition estimate "
        << (rcond > 0.0 ? 1.0 / rcond : INFINITY) << ")";
    throw SolverError(msg.str());
  }
  const Eigen::MatrixXd Z = lu.solve(rhs);
  ce.z0 = Z.col(0);
  ce.Z_hat = Z.middleCols(1, cols);
  ce.z_rho = Z.col(cols + 1);

  ce.K.resize(cols, cols);
  ce.K_rho.resize(cols);
  ce.rhs.resize(cols);
  ce.P.resize(cols);
  int r = 0;
  for (int j = 0; j < 3; ++j) {
    if (ls.dirichlet[j]) continue;
    const int nr = static_cast<int>(ls.R[j].rows());
    ce.K.middleRows(r, nr) = ls.R[j] * ce.Z_hat;
    ce.K.block(r, r, nr, nr) -= ls.T[j];
    ce.K_rho.segment(r, nr) = ls.R[j] * ce.z_rho;
    ce.rhs.segment(r, nr) = ls.h[j] - ls.R[j] * ce.z0;
    ce.P.segment(r, nr) = ls.P[j];
    r += nr;
  }
  const int po = ls.p_offset();
  ce.c_hat = ls.pressure_row.transpose() * ce.Z_hat.middleRows(po, ls.n);
  ce.c_rho = ls.pressure_row.dot(ce.z_rho.segment(po, ls.n));
  ce.c0 = ls.pressure_row.dot(ce.z0.segment(po, ls.n));
  return ce;
}

GlobalLayout global_layout(const TriMesh& mesh, const DegreeMap& degrees) {
  GlobalLayout layout;
  layout.face_offset.assign(mesh.num_faces(), -1);
  layout.face_k.assign(mesh.num_faces(), 0);
  int offset = 0;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    layout.face_k[f] = face_degree(mesh, degrees, f);
    if (is_dirichlet(mesh, f)) continue;
    layout.face_offset[f] = offset;
    offset += 2 * (layout.face_k[f] + 1);
  }
  layout.rho_offset = offset;
  offset += mesh.num_elements();
  if (!mesh.has_neumann()) layout.multiplier = offset++;
  layout.size = offset;
  return layout;
}

GlobalSystem assemble_global(const GeometryBackend& geo, const DegreeMap& degrees,
                             const std::vector<CondensedElement>& condensed,
                             const ProblemSpec& /*spec*/) {
  const TriMesh& mesh = geo.mesh();
  GlobalSystem gs;
  gs.layout = global_layout(mesh, degrees);
  const GlobalLayout& L = gs.layout;
  gs.f = Eigen::VectorXd::Zero(L.size);
  std::vector<Eigen::Triplet<double>> trip;

  for (const CondensedElement& ce : condensed) {
    const int e = ce.element;
    std::vector<int> map;
    for (std::size_t i = 0; i < ce.trace_faces.size(); ++i) {
      const int f = ce.trace_faces[i];
      const int len = 2 * (L.face_k[f] + 1);
      for (int c = 0; c < len; ++c) map.push_back(L.face_offset[f] + c);
    }
    const int nloc = static_cast<int>(map.size());
    const int rho = L.rho_offset + e;
    for (int r = 0; r < nloc; ++r) {
      for (int c = 0; c < nloc; ++c) trip.emplace_back(map[r], map[c], ce.K(r, c));
      trip.emplace_back(map[r], rho, ce.K_rho(r));
      gs.f(map[r]) += ce.rhs(r);
      trip.emplace_back(rho, map[r], ce.P(r));
    }
    gs.f(rho) = ce.g;
    if (L.multiplier >= 0) {
      trip.emplace_back(rho, L.multiplier, 1.0);
      for (int c = 0; c < nloc; ++c) trip.emplace_back(L.multiplier, map[c], ce.c_hat(c));
      trip.emplace_back(L.multiplier, rho, ce.c_rho);
      gs.f(L.multiplier) += ce.pressure_target - ce.c0;
    }
  }
  gs.K.resize(L.size, L.size);
  gs.K.setFromTriplets(trip.begin(), trip.end());
  return gs;
}

HdgSolution solve(std::shared_ptr<const GeometryBackend> geo, const ProblemSpec& spec,
                  const SolverConfig& config, const DegreeMap& degrees) {
  const TriMesh& mesh = geo->mesh();
  if (static_cast<int>(degrees.size()) != mesh.num_elements())
    throw ArgumentError("solve: one degree per element expected");
  const int ne = mesh.num_elements();
  std::vector<CondensedElement> condensed(ne);
  std::vector<std::array<Eigen::VectorXd, 3>> dirichlet_traces(ne);
  for (int e = 0; e < ne; ++e) {
    const LocalSystem ls = assemble_local(*geo, e, degrees, spec, config);
    condensed[e] = condense(ls);
    dirichlet_traces[e] = ls.dirichlet_trace;
  }
  const GlobalSystem gs = assemble_global(*geo, degrees, condensed, spec);

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(gs.K);
  lu.factorize(gs.K);
  if (lu.info() != Eigen::Success)
    throw SolverError("global factorization failed: " + lu.lastErrorMessage());
  const Eigen::VectorXd x = lu.solve(gs.f);
  if (lu.info() != Eigen::Success) throw SolverError("global solve failed");

  HdgSolution sol;
  sol.geometry = geo;
  sol.degrees = degrees;
  sol.tau = effective_tau(mesh, spec, config);
  sol.global_dofs = gs.layout.size;
  const double fnorm = gs.f.norm();
  const double res = (gs.K * x - gs.f).norm();
  sol.relative_residual = fnorm > 0.0 ? res / fnorm : res;
  if (!(sol.relative_residual < config.residual_tolerance)) {
    std::ostringstream msg;
    msg << "global residual " << sol.relative_residual << " exceeds tolerance";
    throw SolverError(msg.str());
  }
  if (gs.layout.multiplier >= 0) sol.multiplier = x(gs.layout.multiplier);

  sol.traces.resize(mesh.num_faces());
  sol.trace_degree = gs.layout.face_k;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const int off = gs.layout.face_offset[f];
    if (off >= 0) sol.traces[f] = x.segment(off, 2 * (gs.layout.face_k[f] + 1));
  }
  sol.elements.resize(ne);
  for (int e = 0; e < ne; ++e) {
    const CondensedElement& ce = condensed[e];
    Eigen::VectorXd uhat(ce.Z_hat.cols());
    for (std::size_t i = 0; i < ce.trace_faces.size(); ++i) {
      const Eigen::VectorXd& tr = sol.traces[ce.trace_faces[i]];
      uhat.segment(ce.trace_offsets[i], tr.size()) = tr;
    }
    const double rho = x(gs.layout.rho_offset + e);
    const Eigen::VectorXd z = ce.z0 + ce.Z_hat * uhat + ce.z_rho * rho;
    const int n = (static_cast<int>(z.size()) - 1) / 7;
    ElementSolution& es = sol.elements[e];
    es.k = degrees[e];
    es.L = Eigen::Map<const Eigen::MatrixXd>(z.data(), n, 4);
    es.u = Eigen::Map<const Eigen::MatrixXd>(z.data() + 4 * n, n, 2);
    es.p = z.segment(6 * n, n);
    es.zeta = z(7 * n);
    es.rho = rho;
    for (int j = 0; j < 3; ++j)
      if (dirichlet_traces[e][j].size() > 0) sol.traces[mesh.element_faces(e)[j]] = dirichlet_traces[e][j];
  }
  return sol;
}

HdgSolution solve(const TriMesh& mesh, const ProblemSpec& spec, const SolverConfig& config,
                  const DegreeMap& degrees) {
  auto geo = std::make_shared<GeometryBackend>(mesh, config.geometry, degrees, config.quadrature);
  return solve(std::move(geo), spec, config, degrees);
}

double check_compatibility(const TriMesh& mesh, const ProblemSpec& spec, int points) {
  if (!spec.dirichlet) return 0.0;
  const QuadratureRule1D& g = gauss_segment(points);
  double total = 0.0;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    if (!is_dirichlet(mesh, f)) continue;
    const Face& face = mesh.faces()[f];
    const double sign = mesh.elements()[face.left][face.left_edge] == face.v0 ? 1.0 : -1.0;
    if (mesh.is_curved(f)) {
      const ParamInterval& iv = *mesh.boundary(f)->interval;
      const NurbsCurve& curve = (*mesh.curves())[iv.curve_id];
      const CurveFaceRule rule = nefem_face_rule(curve, iv, 0, points);
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const Vec2 tng = sign * rule.tangents[q].normalized();
        total += rule.weights[q] * spec.dirichlet(rule.points[q]).dot(Vec2(tng.y(), -tng.x()));
      }
      continue;
    }
    const Vec2& a = mesh.vertices()[face.v0];
    const Vec2& b = mesh.vertices()[face.v1];
    const Vec2 d = b - a;
    const Vec2 nrm = sign * Vec2(d.y(), -d.x()).normalized();
    for (int q = 0; q < points; ++q)
      total += g.weights[q] * d.norm() * spec.dirichlet(a + g.points[q] * d).dot(nrm);
  }
  return std::abs(total);
}

void require_compatibility(const TriMesh& mesh, const ProblemSpec& spec) {
  if (mesh.has_neumann()) return;
  const double r = check_compatibility(mesh, spec);
  if (r > 1e-8 * mesh.domain_diameter()) {
    std::ostringstream msg;
    msg << "incompatible Dirichlet data: boundary flux residual " << r;
    throw DomainError(msg.str());
  }
}

}  // namespace hdgnefem
