#include "hdgnefem/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace hdgnefem {

GeometryStrategy GeometryStrategy::parse(const std::string& text) {
  if (text == "nefem") return nefem();
  if (text == "iso-regen") return iso_regen();
  const std::string prefix = "iso-fixed:";
  if (text.rfind(prefix, 0) == 0) {
    int q = 0;
    try {
      std::size_t used = 0;
      q = std::stoi(text.substr(prefix.size()), &used);
      if (used != text.size() - prefix.size()) q = 0;
    } catch (const std::exception&) {
      q = 0;
    }
    if (q < 1 || q > kMaxBasisDegree) throw ArgumentError("bad geometric degree in '" + text + "'");
    return iso_fixed(q);
  }
  throw ArgumentError("unknown geometry strategy '" + text + "'");
}

std::string GeometryStrategy::name() const {
  switch (kind) {
    case Kind::IsoFixed:
      return "iso-fixed:" + std::to_string(q);
    case Kind::IsoRegen:
      return "iso-regen";
    case Kind::Nefem:
      return "nefem";
  }
  return "?";
}

namespace {

Vec2 outward(const Vec2& tangent) {
  const double len = tangent.norm();
  return Vec2(tangent.y() / len, -tangent.x() / len);
}

// Cut positions of a face in s, split at the knots inside a curved interval.
std::vector<double> face_cuts(const TriMesh& mesh, int f) {
  std::vector<double> cuts{0.0};
  if (mesh.is_curved(f)) {
    const ParamInterval& iv = *mesh.boundary(f)->interval;
    const NurbsCurve& curve = (*mesh.curves())[iv.curve_id];
    for (double b : curve.interior_breakpoints(iv.lambda_a, iv.lambda_b))
      cuts.push_back((b - iv.lambda_a) / (iv.lambda_b - iv.lambda_a));
  }
  cuts.push_back(1.0);
  return cuts;
}

}  // namespace

GeometryBackend::GeometryBackend(const TriMesh& mesh, GeometryStrategy strategy,
                                 std::span<const int> degrees, QuadratureOptions quadrature)
    : mesh_(&mesh), strategy_(strategy), quadrature_(quadrature) {
  if (static_cast<int>(degrees.size()) != mesh.num_elements())
    throw ArgumentError("GeometryBackend: one degree per element expected");
  if (strategy.kind == GeometryStrategy::Kind::IsoFixed && strategy.q < 1)
    throw ArgumentError("GeometryBackend: geometric degree must be positive");
  shapes_.resize(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const int q = strategy.kind == GeometryStrategy::Kind::IsoRegen ? degrees[e] : strategy.q;
    build_shape(e, q);
  }
}

void GeometryBackend::build_shape(int e, int q) {
  Shape& shape = shapes_[e];
  shape = Shape{};
  shape.curved_edge = mesh_->curved_edge(e);
  if (shape.curved_edge < 0) return;
  if (strategy_.kind == GeometryStrategy::Kind::Nefem) {
    const int j = shape.curved_edge;
    const int f = mesh_->element_faces(e)[j];
    const Face& face = mesh_->faces()[f];
    const Triangle& tri = mesh_->elements()[e];
    const ParamInterval& iv = *mesh_->boundary(f)->interval;
    shape.kind = ElementKind::Nefem;
    shape.chart.emplace((*mesh_->curves())[iv.curve_id], iv, tri[j] == face.v0,
                        mesh_->vertices()[tri[(j + 2) % 3]]);
    return;
  }
  shape.kind = ElementKind::Isoparametric;
  shape.q = q;
  shape.nodes = isoparametric_nodes(e, q);
}

void GeometryBackend::update(std::span<const int> degrees) {
  if (static_cast<int>(degrees.size()) != mesh_->num_elements())
    throw ArgumentError("GeometryBackend::update: one degree per element expected");
  if (strategy_.kind != GeometryStrategy::Kind::IsoRegen) return;
  for (int e = 0; e < mesh_->num_elements(); ++e)
    if (shapes_[e].kind == ElementKind::Isoparametric && shapes_[e].q != degrees[e])
      build_shape(e, degrees[e]);
}

const NefemChart& GeometryBackend::chart(int e) const {
  if (!shapes_[e].chart) throw ArgumentError("element has no NEFEM chart");
  return *shapes_[e].chart;
}

std::vector<Vec2> GeometryBackend::isoparametric_nodes(int e, int q) const {
  const Triangle& tri = mesh_->elements()[e];
  const auto& v = mesh_->vertices();
  const int j = shapes_[e].curved_edge;
  const int f = mesh_->element_faces(e)[j];
  const Face& face = mesh_->faces()[f];
  const ParamInterval& iv = *mesh_->boundary(f)->interval;
  const NurbsCurve& curve = (*mesh_->curves())[iv.curve_id];
  const bool forward = tri[j] == face.v0;
  const Vec2& a = v[tri[j]];
  const Vec2& b = v[tri[(j + 1) % 3]];

  std::vector<Vec2> nodes;
  for (const Vec2& xi : reference_basis(q).nodes()) {
    const std::array<double, 3> bary{1.0 - xi.x() - xi.y(), xi.x(), xi.y()};
    Vec2 x = bary[0] * v[tri[0]] + bary[1] * v[tri[1]] + bary[2] * v[tri[2]];
    const double ba = bary[j], bb = bary[(j + 1) % 3];
    if (ba + bb > 1e-14) {
      const double t = bb / (ba + bb);
      const double span = iv.lambda_b - iv.lambda_a;
      const double lambda = forward ? iv.lambda_a + t * span : iv.lambda_b - t * span;
      x += (ba + bb) * (curve.evaluate(lambda) - (a + t * (b - a)));
    }
    nodes.push_back(x);
  }
  return nodes;
}

std::pair<Vec2, Mat2> GeometryBackend::reference_map(int e, const Vec2& xi) const {
  const Shape& shape = shapes_[e];
  if (shape.kind == ElementKind::Isoparametric) return isoparametric_map(shape.nodes, shape.q, xi);
  const Triangle& tri = mesh_->elements()[e];
  const auto& v = mesh_->vertices();
  Mat2 jac;
  jac.col(0) = v[tri[1]] - v[tri[0]];
  jac.col(1) = v[tri[2]] - v[tri[0]];
  if (!(jac.determinant() > 0.0)) throw GeometryError("element with non-positive Jacobian");
  return {v[tri[0]] + jac * xi, jac};
}

const PhysicalBasis& GeometryBackend::physical_basis(int e, int k) const {
  std::lock_guard lock(cache_mutex_);
  auto& slot = physical_cache_[{e, k}];
  if (!slot) slot = std::make_unique<PhysicalBasis>(k, nefem_nodal_set(chart(e), curved_edge(e), k));
  return *slot;
}

namespace {

struct MappedFace {
  FaceTable table;
  std::vector<Vec2> xi;
};

void fill_reference_table(const ReferenceBasis& rb, std::span<const Vec2> xi,
                          std::span<const Mat2> jac, BasisTable& out) {
  const int n = rb.size();
  const int m = static_cast<int>(xi.size());
  out.values.resize(m, n);
  out.dx.resize(m, n);
  out.dy.resize(m, n);
  Eigen::VectorXd val(n);
  Eigen::MatrixXd grad(n, 2);
  for (int p = 0; p < m; ++p) {
    rb.evaluate(xi[p], val, grad);
    const Eigen::MatrixXd g = grad * jac[p].inverse();
    out.values.row(p) = val.transpose();
    out.dx.row(p) = g.col(0).transpose();
    out.dy.row(p) = g.col(1).transpose();
  }
}

}  // namespace

FaceTable GeometryBackend::mapped_face(int e, int j, int npts) const {
  const int f = mesh_->element_faces(e)[j];
  const Face& face = mesh_->faces()[f];
  const bool reversed = mesh_->elements()[e][j] != face.v0;
  const bool curved = mesh_->is_curved(f);
  const QuadratureRule1D& g = gauss_segment(npts);
  FaceTable ft;
  ft.face = f;
  ft.local_edge = j;
  std::vector<double> w;
  const std::vector<double> cuts = face_cuts(*mesh_, f);
  const Vec2 dxi = reference_edge_tangent(j);
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double a = cuts[c], len = cuts[c + 1] - cuts[c];
    for (int i = 0; i < npts; ++i) {
      const double s = a + len * g.points[i];
      const double t = reversed ? 1.0 - s : s;
      const auto [x, jac] = reference_map(e, reference_edge_point(j, t));
      const Vec2 dxdt = jac * dxi;
      ft.s.push_back(s);
      ft.x.push_back(x);
      ft.normal.push_back(outward(dxdt));
      w.push_back(g.weights[i] * len * dxdt.norm());
      if (curved) {
        const ParamInterval& iv = *mesh_->boundary(f)->interval;
        const NurbsCurve& curve = (*mesh_->curves())[iv.curve_id];
        const double lambda = iv.lambda_a + s * (iv.lambda_b - iv.lambda_a);
        const Vec2 tangent = curve.derivative(lambda, 1) * (reversed ? -1.0 : 1.0);
        ft.data_x.push_back(curve.evaluate(lambda));
        ft.data_normal.push_back(outward(tangent));
      } else {
        ft.data_x.push_back(x);
        ft.data_normal.push_back(ft.normal.back());
      }
    }
  }
  ft.w = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  return ft;
}

FaceTable GeometryBackend::nefem_face(int e, int j, int npts) const {
  const int f = mesh_->element_faces(e)[j];
  const Face& face = mesh_->faces()[f];
  const bool reversed = mesh_->elements()[e][j] != face.v0;
  FaceTable ft;
  ft.face = f;
  ft.local_edge = j;
  std::vector<double> w;
  if (j == curved_edge(e)) {
    const ParamInterval& iv = *mesh_->boundary(f)->interval;
    const NurbsCurve& curve = (*mesh_->curves())[iv.curve_id];
    const CurveFaceRule rule = nefem_face_rule(curve, iv, 0, npts);
    for (std::size_t p = 0; p < rule.points.size(); ++p) {
      const Vec2 tangent = rule.tangents[p] * (reversed ? -1.0 : 1.0);
      ft.s.push_back((rule.lambdas[p] - iv.lambda_a) / (iv.lambda_b - iv.lambda_a));
      ft.x.push_back(rule.points[p]);
      ft.normal.push_back(outward(tangent));
      w.push_back(rule.weights[p]);
    }
  } else {
    const Vec2& a = mesh_->vertices()[face.v0];
    const Vec2& b = mesh_->vertices()[face.v1];
    const Vec2 dir = reversed ? Vec2(a - b) : Vec2(b - a);
    const QuadratureRule1D& g = gauss_segment(npts);
    for (int i = 0; i < npts; ++i) {
      const double s = g.points[i];
      ft.s.push_back(s);
      ft.x.push_back(a + s * (b - a));
      ft.normal.push_back(outward(dir));
      w.push_back(g.weights[i] * dir.norm());
    }
  }
  ft.data_x = ft.x;
  ft.data_normal = ft.normal;
  ft.w = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  return ft;
}

ElementTables GeometryBackend::tables(int e, int k, const std::array<int, 3>& face_points,
                                      int k_post) const {
  if (k < 1 || k > kMaxBasisDegree) throw ArgumentError("element degree out of range");
  if (k_post != 0 && (k_post < 1 || k_post > kMaxBasisDegree))
    throw ArgumentError("postprocessing degree out of range");
  const Shape& shape = shapes_[e];
  const int k_rule = std::max(k, k_post);
  ElementTables t;
  t.element = e;
  t.k = k;
  t.k_post = k_post;

  if (shape.kind == ElementKind::Nefem) {
    const PhysicalRule rule = nefem_element_rule(*shape.chart, k_rule, quadrature_.nefem);
    t.x = rule.points;
    t.w = Eigen::Map<const Eigen::VectorXd>(rule.weights.data(),
                                            static_cast<Eigen::Index>(rule.weights.size()));
    t.basis = physical_basis(e, k).tabulate(t.x);
    if (k_post > 0) t.post_basis = physical_basis(e, k_post).tabulate(t.x);
    for (int j = 0; j < 3; ++j) {
      t.faces[j] = nefem_face(e, j, face_points[j]);
      t.faces[j].basis = physical_basis(e, k).tabulate(t.faces[j].x).values;
    }
    return t;
  }

  const int geo_extra = shape.kind == ElementKind::Isoparametric ? 3 * (shape.q - 1) : 0;
  const QuadratureRule2D& rule = triangle_rule(2 * k_rule + quadrature_.extra_degree + geo_extra);
  const std::size_t m = rule.points.size();
  std::vector<Mat2> jac(m);
  t.x.resize(m);
  t.w.resize(static_cast<Eigen::Index>(m));
  for (std::size_t p = 0; p < m; ++p) {
    const auto [x, jp] = reference_map(e, rule.points[p]);
    t.x[p] = x;
    jac[p] = jp;
    t.w(static_cast<Eigen::Index>(p)) = rule.weights[p] * jp.determinant();
  }
  fill_reference_table(reference_basis(k), rule.points, jac, t.basis);
  if (k_post > 0) {
    BasisTable post;
    fill_reference_table(reference_basis(k_post), rule.points, jac, post);
    t.post_basis = std::move(post);
  }
  const ReferenceBasis& rb = reference_basis(k);
  Eigen::VectorXd val(rb.size());
  Eigen::MatrixXd grad(rb.size(), 2);
  for (int j = 0; j < 3; ++j) {
    FaceTable ft = mapped_face(e, j, face_points[j]);
    const Face& face = mesh_->faces()[ft.face];
    const bool reversed = mesh_->elements()[e][j] != face.v0;
    ft.basis.resize(static_cast<Eigen::Index>(ft.s.size()), rb.size());
    for (std::size_t p = 0; p < ft.s.size(); ++p) {
      rb.evaluate(reference_edge_point(j, reversed ? 1.0 - ft.s[p] : ft.s[p]), val, grad);
      ft.basis.row(static_cast<Eigen::Index>(p)) = val.transpose();
    }
    t.faces[j] = std::move(ft);
  }
  return t;
}

std::vector<Vec2> GeometryBackend::nodal_points(int e, int k) const {
  if (shapes_[e].kind == ElementKind::Nefem) return physical_basis(e, k).nodes();
  std::vector<Vec2> out;
  for (const Vec2& xi : reference_basis(k).nodes()) out.push_back(reference_map(e, xi).first);
  return out;
}

Vec2 GeometryBackend::face_point(int f, double s) const {
  const Face& face = mesh_->faces()[f];
  const int e = face.left;
  const int j = face.left_edge;
  if (mesh_->is_curved(f) && shapes_[e].kind == ElementKind::Nefem) {
    const ParamInterval& iv = *mesh_->boundary(f)->interval;
    return (*mesh_->curves())[iv.curve_id].evaluate(iv.lambda_a + s * (iv.lambda_b - iv.lambda_a));
  }
  if (shapes_[e].kind == ElementKind::Isoparametric) {
    const bool reversed = mesh_->elements()[e][j] != face.v0;
    return reference_map(e, reference_edge_point(j, reversed ? 1.0 - s : s)).first;
  }
  const Vec2& a = mesh_->vertices()[face.v0];
  const Vec2& b = mesh_->vertices()[face.v1];
  return a + s * (b - a);
}

double GeometryBackend::element_area(int e) const {
  if (kind(e) != ElementKind::Nefem) return tables(e, 1, {2, 2, 2}).area();
  const PhysicalRule rule = nefem_element_rule(chart(e), 1, NefemRuleOptions{24, 2});
  double a = 0.0;
  for (double w : rule.weights) a += w;
  return a;
}

}  // namespace hdgnefem
