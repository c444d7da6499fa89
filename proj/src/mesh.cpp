#include "hdgnefem/mesh.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <utility>

namespace hdgnefem {

std::vector<Face> build_connectivity(const std::vector<Triangle>& elements) {
  std::map<std::pair<int, int>, Face> by_key;
  for (int e = 0; e < static_cast<int>(elements.size()); ++e) {
    for (int j = 0; j < 3; ++j) {
      const int a = elements[e][j];
      const int b = elements[e][(j + 1) % 3];
      if (a == b) throw TopologyError("element " + std::to_string(e) + " has a repeated vertex");
      const auto key = std::minmax(a, b);
      auto [it, inserted] = by_key.try_emplace({key.first, key.second});
      Face& f = it->second;
      if (inserted) {
        f.v0 = key.first;
        f.v1 = key.second;
        f.left = e;
        f.left_edge = j;
      } else if (f.right < 0) {
        f.right = e;
        f.right_edge = j;
      } else {
        throw TopologyError("non-manifold edge (" + std::to_string(key.first) + ", " +
                            std::to_string(key.second) + ") shared by 3+ elements");
      }
    }
  }
  std::vector<Face> faces;
  faces.reserve(by_key.size());
  for (auto& [key, f] : by_key) faces.push_back(f);
  return faces;
}

TriMesh::TriMesh(std::vector<Vec2> vertices, std::vector<Triangle> elements,
                 const std::vector<BoundarySegment>& boundary, std::shared_ptr<const CurveSet> curves)
    : vertices_(std::move(vertices)), elements_(std::move(elements)), curves_(std::move(curves)) {
  const int nv = num_vertices();
  for (int e = 0; e < num_elements(); ++e) {
    for (int v : elements_[e])
      if (v < 0 || v >= nv) throw TopologyError("element references unknown vertex");
    if (!(chord_area(e) > 0.0))
      throw GeometryError("element " + std::to_string(e) + " is not counter-clockwise");
  }

  faces_ = build_connectivity(elements_);
  element_faces_.assign(elements_.size(), {-1, -1, -1});
  std::map<std::pair<int, int>, int> face_of;
  for (int f = 0; f < num_faces(); ++f) {
    const Face& face = faces_[f];
    element_faces_[face.left][face.left_edge] = f;
    if (face.right >= 0) element_faces_[face.right][face.right_edge] = f;
    face_of[{face.v0, face.v1}] = f;
  }

  boundary_.assign(faces_.size(), std::nullopt);
  for (const BoundarySegment& seg : boundary) {
    const auto key = std::minmax(seg.v_start, seg.v_end);
    auto it = face_of.find({key.first, key.second});
    if (it == face_of.end())
      throw TopologyError("boundary segment (" + std::to_string(seg.v_start) + ", " +
                          std::to_string(seg.v_end) + ") is not a mesh edge");
    Face& face = faces_[it->second];
    if (!face.is_boundary())
      throw TopologyError("boundary segment lies on an interior face");
    if (boundary_[it->second]) throw TopologyError("boundary segment listed twice");
    if (seg.interval) {
      if (!curves_) throw ArgumentError("curved boundary segment but no curves supplied");
      validate_interval(*curves_, *seg.interval);
    }
    face.v0 = seg.v_start;
    face.v1 = seg.v_end;
    boundary_[it->second] = BoundaryData{seg.tag, seg.interval};
  }
  for (int f = 0; f < num_faces(); ++f)
    if (faces_[f].is_boundary() && !boundary_[f])
      throw TopologyError("boundary face (" + std::to_string(faces_[f].v0) + ", " +
                          std::to_string(faces_[f].v1) + ") has no boundary tag");

  std::vector<int> bverts;
  for (int f = 0; f < num_faces(); ++f) {
    if (faces_[f].is_boundary()) {
      bverts.push_back(faces_[f].v0);
      bverts.push_back(faces_[f].v1);
    }
  }
  std::sort(bverts.begin(), bverts.end());
  bverts.erase(std::unique(bverts.begin(), bverts.end()), bverts.end());
  double d2 = 0.0;
  for (std::size_t i = 0; i < bverts.size(); ++i)
    for (std::size_t j = i + 1; j < bverts.size(); ++j)
      d2 = std::max(d2, (vertices_[bverts[i]] - vertices_[bverts[j]]).squaredNorm());
  diameter_ = std::sqrt(d2);
}

int TriMesh::curved_edge(int e) const {
  int found = -1;
  for (int j = 0; j < 3; ++j) {
    if (is_curved(element_faces_[e][j])) {
      if (found >= 0)
        throw GeometryError("element " + std::to_string(e) + " has more than one curved edge");
      found = j;
    }
  }
  return found;
}

bool TriMesh::has_neumann() const {
  return std::any_of(boundary_.begin(), boundary_.end(), [](const auto& b) {
    return b && b->tag == BoundaryTag::Neumann;
  });
}

double TriMesh::chord_area(int e) const {
  const Vec2& a = vertices_[elements_[e][0]];
  const Vec2& b = vertices_[elements_[e][1]];
  const Vec2& c = vertices_[elements_[e][2]];
  return 0.5 * cross(b - a, c - a);
}

double TriMesh::max_edge_length(int e) const {
  double h = 0.0;
  for (int j = 0; j < 3; ++j)
    h = std::max(h, (vertices_[elements_[e][j]] - vertices_[elements_[e][(j + 1) % 3]]).norm());
  return h;
}

std::vector<BoundarySegment> TriMesh::boundary_segments() const {
  std::vector<BoundarySegment> out;
  for (int f = 0; f < num_faces(); ++f) {
    if (!boundary_[f]) continue;
    out.push_back({faces_[f].v0, faces_[f].v1, boundary_[f]->tag, boundary_[f]->interval});
  }
  return out;
}

TriMesh nested_refine(const TriMesh& mesh) {
  std::vector<Vec2> vertices = mesh.vertices();
  std::vector<int> midpoint(mesh.num_faces());
  std::vector<double> mid_lambda(mesh.num_faces(), 0.0);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.faces()[f];
    Vec2 m = 0.5 * (mesh.vertices()[face.v0] + mesh.vertices()[face.v1]);
    if (mesh.is_curved(f)) {
      const ParamInterval& iv = *mesh.boundary(f)->interval;
      mid_lambda[f] = iv.midpoint();
      m = (*mesh.curves())[iv.curve_id].evaluate(mid_lambda[f]);
    }
    midpoint[f] = static_cast<int>(vertices.size());
    vertices.push_back(m);
  }

  std::vector<Triangle> elements;
  elements.reserve(4 * mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Triangle& t = mesh.elements()[e];
    const auto& ef = mesh.element_faces(e);
    const int m01 = midpoint[ef[0]], m12 = midpoint[ef[1]], m20 = midpoint[ef[2]];
    elements.push_back({t[0], m01, m20});
    elements.push_back({m01, t[1], m12});
    elements.push_back({m20, m12, t[2]});
    elements.push_back({m01, m12, m20});
  }

  std::vector<BoundarySegment> boundary;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& b = mesh.boundary(f);
    if (!b) continue;
    const Face& face = mesh.faces()[f];
    BoundarySegment first{face.v0, midpoint[f], b->tag, std::nullopt};
    BoundarySegment second{midpoint[f], face.v1, b->tag, std::nullopt};
    if (b->interval) {
      first.interval = ParamInterval{b->interval->curve_id, b->interval->lambda_a, mid_lambda[f]};
      second.interval = ParamInterval{b->interval->curve_id, mid_lambda[f], b->interval->lambda_b};
    }
    boundary.push_back(first);
    boundary.push_back(second);
  }
  return TriMesh(std::move(vertices), std::move(elements), boundary, mesh.curves());
}

double element_size(const TriMesh& mesh, int e) {
  const double area = mesh.chord_area(e);
  const double h = mesh.max_edge_length(e);
  if (!(area > 1e-14 * h * h))
    throw GeometryError("element " + std::to_string(e) + " is degenerate");
  return h / mesh.domain_diameter();
}

void write_mesh(std::ostream& out, const TriMesh& mesh) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "VERTICES " << mesh.num_vertices() << "\n";
  for (const Vec2& v : mesh.vertices()) out << v.x() << " " << v.y() << "\n";
  out << "ELEMENTS " << mesh.num_elements() << "\n";
  for (const Triangle& t : mesh.elements()) out << t[0] << " " << t[1] << " " << t[2] << "\n";
  const auto segments = mesh.boundary_segments();
  out << "BOUNDARY " << segments.size() << "\n";
  for (const BoundarySegment& s : segments) {
    out << s.v_start << " " << s.v_end << " " << static_cast<int>(s.tag);
    if (s.interval)
      out << " " << s.interval->curve_id << " " << s.interval->lambda_a << " "
          << s.interval->lambda_b;
    out << "\n";
  }
  out.precision(old_precision);
}

namespace {

std::string expect_section(std::istream& in, const std::string& name) {
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    if (word != name) throw IoError("mesh file: expected section " + name + ", got " + word);
    std::string rest;
    std::getline(ls, rest);
    return rest;
  }
  throw IoError("mesh file: missing section " + name);
}

std::string next_data_line(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return line;
  }
  throw IoError("mesh file: unexpected end of file");
}

std::size_t parse_count(const std::string& s, const std::string& section) {
  std::istringstream ss(s);
  long long n = -1;
  if (!(ss >> n) || n < 0) throw IoError("mesh file: bad count for " + section);
  return static_cast<std::size_t>(n);
}

}  // namespace

TriMesh read_mesh(std::istream& in, std::shared_ptr<const CurveSet> curves) {
  const std::size_t nv = parse_count(expect_section(in, "VERTICES"), "VERTICES");
  std::vector<Vec2> vertices(nv);
  for (auto& v : vertices) {
    std::istringstream ls(next_data_line(in));
    if (!(ls >> v.x() >> v.y())) throw IoError("mesh file: bad vertex line");
  }
  const std::size_t ne = parse_count(expect_section(in, "ELEMENTS"), "ELEMENTS");
  std::vector<Triangle> elements(ne);
  for (auto& t : elements) {
    std::istringstream ls(next_data_line(in));
    if (!(ls >> t[0] >> t[1] >> t[2])) throw IoError("mesh file: bad element line");
  }
  const std::size_t nb = parse_count(expect_section(in, "BOUNDARY"), "BOUNDARY");
  std::vector<BoundarySegment> boundary(nb);
  for (auto& b : boundary) {
    std::istringstream ls(next_data_line(in));
    int tag = 0;
    if (!(ls >> b.v_start >> b.v_end >> tag)) throw IoError("mesh file: bad boundary line");
    if (tag != 1 && tag != 2) throw IoError("mesh file: boundary tag must be 1 or 2");
    b.tag = static_cast<BoundaryTag>(tag);
    ParamInterval iv;
    if (ls >> iv.curve_id) {
      if (!(ls >> iv.lambda_a >> iv.lambda_b))
        throw IoError("mesh file: incomplete curved boundary entry");
      b.interval = iv;
    }
  }
  return TriMesh(std::move(vertices), std::move(elements), boundary, std::move(curves));
}

void write_mesh_file(const std::string& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open mesh file for writing: " + path);
  write_mesh(out, mesh);
  if (!out) throw IoError("failed writing mesh file: " + path);
}

TriMesh read_mesh_file(const std::string& path, std::shared_ptr<const CurveSet> curves) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file: " + path);
  return read_mesh(in, std::move(curves));
}

}  // namespace hdgnefem
