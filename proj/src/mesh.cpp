#include "strb/mesh.hpp"
#include "strb/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace strb {

namespace {

constexpr std::array<const char*, 5> kTagNames = {"dirichlet", "dirichlet_zero", "dirichlet_nopen",
                                                  "neumann", "neumann_zero"};

Point sub(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Point cross(const Point& a, const Point& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

// Jacobian determinant of the trilinear map at a reference point.
double jacobian_det(const Mesh& m, int cell, const Point& xi) {
  double j[3][3] = {};
  for (int v = 0; v < 8; ++v) {
    const int a = v & 1, b = (v >> 1) & 1, c = (v >> 2) & 1;
    const double fa = a ? xi[0] : 1 - xi[0], fb = b ? xi[1] : 1 - xi[1], fc = c ? xi[2] : 1 - xi[2];
    const double da = a ? 1 : -1, db = b ? 1 : -1, dc = c ? 1 : -1;
    const double g[3] = {da * fb * fc, fa * db * fc, fa * fb * dc};
    const Point& x = m.vertices[static_cast<std::size_t>(m.cells[static_cast<std::size_t>(cell)][v])];
    for (int r = 0; r < 3; ++r)
      for (int s = 0; s < 3; ++s) j[r][s] += x[r] * g[s];
  }
  return j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0]) +
         j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
}

}  // namespace

std::string to_string(BoundaryTag tag) { return kTagNames[static_cast<std::size_t>(tag)]; }

BoundaryTag parse_boundary_tag(const std::string& name) {
  for (std::size_t i = 0; i < kTagNames.size(); ++i)
    if (name == kTagNames[i]) return static_cast<BoundaryTag>(i);
  throw InvalidArgument("unknown boundary tag '" + name + "'");
}

std::array<int, 4> Mesh::face_vertices(int cell, int face) const {
  const int axis = face / 2, side = face % 2;
  std::array<int, 4> out{};
  int k = 0;
  for (int v = 0; v < 8; ++v)
    if (((v >> axis) & 1) == side) out[static_cast<std::size_t>(k++)] = cells[static_cast<std::size_t>(cell)][v];
  return out;
}

Point Mesh::facet_center(int cell, int face) const {
  Point c{0, 0, 0};
  for (int v : face_vertices(cell, face))
    for (int d = 0; d < 3; ++d) c[d] += 0.25 * vertices[static_cast<std::size_t>(v)][d];
  return c;
}

Point Mesh::facet_normal(int cell, int face) const {
  const auto fv = face_vertices(cell, face);
  // face vertices in lexicographic order: diagonals are (0,3) and (1,2)
  const Point& p0 = vertices[static_cast<std::size_t>(fv[0])];
  const Point& p1 = vertices[static_cast<std::size_t>(fv[1])];
  const Point& p2 = vertices[static_cast<std::size_t>(fv[2])];
  const Point& p3 = vertices[static_cast<std::size_t>(fv[3])];
  Point n = cross(sub(p3, p0), sub(p2, p1));
  Point centroid{0, 0, 0};
  for (int v : cells[static_cast<std::size_t>(cell)])
    for (int d = 0; d < 3; ++d) centroid[d] += vertices[static_cast<std::size_t>(v)][d] / 8.0;
  if (dot(n, sub(facet_center(cell, face), centroid)) < 0)
    for (auto& x : n) x = -x;
  const double len = std::sqrt(dot(n, n));
  for (auto& x : n) x /= len;
  return n;
}

double Mesh::cell_volume(int cell) const {
  // 2-point Gauss rule integrates the trilinear Jacobian determinant exactly
  const double g[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  double vol = 0.0;
  for (double a : g)
    for (double b : g)
      for (double c : g) vol += 0.125 * jacobian_det(*this, cell, {a, b, c});
  return vol;
}

std::array<std::pair<double, double>, 3> Mesh::bounds() const {
  std::array<std::pair<double, double>, 3> b;
  for (int d = 0; d < 3; ++d) b[d] = {INFINITY, -INFINITY};
  for (const auto& v : vertices)
    for (int d = 0; d < 3; ++d) {
      b[d].first = std::min(b[d].first, v[d]);
      b[d].second = std::max(b[d].second, v[d]);
    }
  return b;
}

void Mesh::validate() const {
  require(!cells.empty(), "mesh: no cells");
  const int nv = static_cast<int>(vertices.size());
  std::map<std::array<int, 4>, int> faces;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (int v : cells[c]) require(v >= 0 && v < nv, "mesh: vertex index out of range");
    for (int f = 0; f < 6; ++f) {
      auto key = face_vertices(static_cast<int>(c), f);
      std::sort(key.begin(), key.end());
      ++faces[key];
    }
    const double g[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
    for (double a : g)
      for (double b : g)
        for (double cc : g)
          require(jacobian_det(*this, static_cast<int>(c), {a, b, cc}) > 0.0,
                  "mesh: cell " + std::to_string(c) + " is inverted or degenerate");
  }
  std::map<std::array<int, 4>, int> tagged;
  for (const auto& f : facets) {
    require(f.cell >= 0 && f.cell < static_cast<int>(cells.size()) && f.face >= 0 && f.face < 6,
            "mesh: facet reference out of range");
    auto key = face_vertices(f.cell, f.face);
    std::sort(key.begin(), key.end());
    require(faces[key] == 1, "mesh: interior face carries a boundary tag");
    require(++tagged[key] == 1, "mesh: boundary face tagged twice");
  }
  for (const auto& [key, count] : faces)
    if (count == 1) require(tagged.count(key) == 1, "mesh: untagged boundary face");
}

TagRule on_plane(int axis, double value, BoundaryTag tag) {
  return {[axis, value](const Point& c, const Point&) {
            return std::abs(c[static_cast<std::size_t>(axis)] - value) <= 1e-9 * std::max(1.0, std::abs(value));
          },
          tag};
}

Mesh build_box_mesh(const std::array<double, 3>& lengths, const std::array<int, 3>& divisions,
                    const std::vector<TagRule>& rules, BoundaryTag default_tag) {
  for (int d = 0; d < 3; ++d) {
    require(lengths[d] > 0.0, "build_box_mesh: lengths must be positive");
    require(divisions[d] > 0, "build_box_mesh: divisions must be positive");
  }
  const int nx = divisions[0], ny = divisions[1], nz = divisions[2];
  Mesh m;
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
        m.vertices.push_back({lengths[0] * i / nx, lengths[1] * j / ny, lengths[2] * k / nz});
  auto vid = [&](int i, int j, int k) { return i + (nx + 1) * (j + (ny + 1) * k); };
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        std::array<int, 8> c{};
        for (int v = 0; v < 8; ++v) c[v] = vid(i + (v & 1), j + ((v >> 1) & 1), k + ((v >> 2) & 1));
        m.cells.push_back(c);
      }
  auto tag_face = [&](int cell, int face) {
    const Point center = m.facet_center(cell, face);
    const Point normal = m.facet_normal(cell, face);
    BoundaryTag tag = default_tag;
    for (const auto& r : rules)
      if (r.applies(center, normal)) {
        tag = r.tag;
        break;
      }
    m.facets.push_back({cell, face, tag});
  };
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const int c = i + nx * (j + ny * k);
        if (i == 0) tag_face(c, 0);
        if (i == nx - 1) tag_face(c, 1);
        if (j == 0) tag_face(c, 2);
        if (j == ny - 1) tag_face(c, 3);
        if (k == 0) tag_face(c, 4);
        if (k == nz - 1) tag_face(c, 5);
      }
  return m;
}

Mesh read_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh " + path.string());
  std::string header;
  std::getline(in, header);
  require(header.rfind("STRBMESH1", 0) == 0, "mesh: missing STRBMESH1 header");
  require(header.find("d=3") != std::string::npos, "mesh: only d=3 is supported");
  Mesh m;
  std::size_t nv = 0, nc = 0, nf = 0;
  in >> nv;
  m.vertices.resize(nv);
  for (auto& v : m.vertices) in >> v[0] >> v[1] >> v[2];
  in >> nc;
  m.cells.resize(nc);
  for (auto& c : m.cells)
    for (int& v : c) in >> v;
  in >> nf;
  for (std::size_t i = 0; i < nf; ++i) {
    BoundaryFacet f;
    std::string tag;
    in >> f.cell >> f.face >> tag;
    f.tag = parse_boundary_tag(tag);
    m.facets.push_back(f);
  }
  if (!in) throw std::runtime_error("mesh: truncated file " + path.string());
  m.validate();
  return m;
}

void write_mesh(const std::filesystem::path& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write mesh " + path.string());
  out << "STRBMESH1 d=3\n" << mesh.vertices.size() << '\n' << std::setprecision(17);
  for (const auto& v : mesh.vertices) out << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  out << mesh.cells.size() << '\n';
  for (const auto& c : mesh.cells) {
    for (int i = 0; i < 8; ++i) out << c[i] << (i == 7 ? '\n' : ' ');
  }
  out << mesh.facets.size() << '\n';
  for (const auto& f : mesh.facets) out << f.cell << ' ' << f.face << ' ' << to_string(f.tag) << '\n';
}

}  // namespace strb
