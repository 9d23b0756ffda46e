#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace strb {

using Point = std::array<double, 3>;

enum class BoundaryTag : std::uint8_t {
  dirichlet,
  dirichlet_zero,
  dirichlet_nopen,
  neumann,
  neumann_zero,
};

std::string to_string(BoundaryTag tag);
BoundaryTag parse_boundary_tag(const std::string& name);

/// Local faces of a hexahedron: 2*axis + side, i.e. x-, x+, y-, y+, z-, z+ in
/// reference coordinates. Local vertices are numbered a + 2b + 4c with
/// (a, b, c) in {0,1}^3 the reference corner.
struct BoundaryFacet {
  int cell = 0;
  int face = 0;
  BoundaryTag tag = BoundaryTag::neumann_zero;
};

struct Mesh {
  std::vector<Point> vertices;
  std::vector<std::array<int, 8>> cells;
  std::vector<BoundaryFacet> facets;

  /// Throws unless every boundary face carries exactly one tag, no interior
  /// face is tagged, indices are in range and every cell has positive volume.
  void validate() const;

  std::array<int, 4> face_vertices(int cell, int face) const;
  Point facet_center(int cell, int face) const;
  /// Unit outward normal at the facet center.
  Point facet_normal(int cell, int face) const;
  double cell_volume(int cell) const;
  /// Smallest and largest vertex coordinate per axis.
  std::array<std::pair<double, double>, 3> bounds() const;
};

/// First matching rule wins; facets matched by no rule get the default tag.
struct TagRule {
  std::function<bool(const Point& center, const Point& normal)> applies;
  BoundaryTag tag;
};

/// Facets whose center lies on the plane x[axis] = value.
TagRule on_plane(int axis, double value, BoundaryTag tag);

/// Structured box [0,L] x [0,H] x [0,W] with nx*ny*nz hexahedra, cells
/// numbered with x fastest.
Mesh build_box_mesh(const std::array<double, 3>& lengths, const std::array<int, 3>& divisions,
                    const std::vector<TagRule>& rules,
                    BoundaryTag default_tag = BoundaryTag::neumann_zero);

/// ASCII mesh:
///   STRBMESH1 d=3
///   <vertex count>
///   x y z                      (one line per vertex)
///   <cell count>
///   v0 v1 ... v7               (local order a + 2b + 4c)
///   <facet count>
///   cell face tag              (tag by name, e.g. dirichlet_zero)
Mesh read_mesh(const std::filesystem::path& path);
void write_mesh(const std::filesystem::path& path, const Mesh& mesh);

}  // namespace strb
