#pragma once

#include "strb/hypermatrix.hpp"
#include "strb/mesh.hpp"

#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace strb {

enum class Element { Q1, Q2, P0 };

using Parameter = std::vector<double>;

/// Lagrange space on a hexahedral mesh. Q1 and Q2 are continuous with nodes
/// at the images of the reference lattice points; P0 has one node per cell.
/// Vector spaces interleave components: dof = node * components + component.
class FESpace {
 public:
  enum class Constraint : std::uint8_t { free, value, zero };

  /// With `constrain` false no DOF is constrained regardless of the tags.
  FESpace(std::shared_ptr<const Mesh> mesh, Element element, int components, bool constrain = true);

  const Mesh& mesh() const { return *mesh_; }
  Element element() const { return element_; }
  int order() const;
  int components() const { return components_; }
  int nodes_per_cell() const { return nodes_per_cell_; }
  int dofs_per_cell() const { return nodes_per_cell_ * components_; }
  int num_cells() const { return static_cast<int>(mesh_->cells.size()); }
  Index num_nodes() const { return static_cast<Index>(nodes_.size()); }
  Index num_dofs() const { return num_nodes() * components_; }
  Index num_free() const { return static_cast<Index>(free_dofs_.size()); }

  std::span<const int> cell_nodes(int cell) const;
  const Point& node(int n) const { return nodes_[static_cast<std::size_t>(n)]; }
  /// Reference coordinates of local node `i`.
  const Point& reference_node(int i) const { return reference_nodes_[static_cast<std::size_t>(i)]; }
  Index dof(int node, int component) const { return static_cast<Index>(node) * components_ + component; }

  Constraint constraint(Index dof) const { return constraint_[static_cast<std::size_t>(dof)]; }
  /// Position among the free DOFs, or -1 for a constrained DOF.
  Index free_index(Index dof) const { return free_index_[static_cast<std::size_t>(dof)]; }
  const std::vector<Index>& free_dofs() const { return free_dofs_; }

  Vector restrict_to_free(const Vector& full) const;
  /// Full-length vector with free values from `free` and constrained values from `full`.
  Vector extend(const Vector& free, const Vector& full) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  Element element_;
  int components_;
  int nodes_per_cell_ = 0;
  std::vector<Point> reference_nodes_;
  std::vector<Point> nodes_;
  std::vector<int> cell_nodes_;
  std::vector<Constraint> constraint_;
  std::vector<Index> free_index_;
  std::vector<Index> free_dofs_;
};

/// Nonzero structure of a free x free operator together with the scatter
/// tables of the assembly. Nonzeros are numbered in compressed column order.
class OperatorPattern {
 public:
  OperatorPattern() = default;
  OperatorPattern(const FESpace& space);

  Index rows() const { return structure_.rows(); }
  Index nonzeros() const { return structure_.nonZeros(); }
  std::pair<Index, Index> entry(Index nz) const { return entries_[static_cast<std::size_t>(nz)]; }

  SparseMatrix from_nonzeros(const Vector& values) const;
  /// Nonzero vector of a matrix with exactly this structure.
  Vector nonzeros_of(const SparseMatrix& m) const;

  /// Local (row dof, col dof) pair p = i * dofs_per_cell + j of a cell, mapped
  /// to its nonzero or -1 when a constrained DOF is involved.
  std::span<const Index> cell_map(int cell) const;
  /// (cell, local pair) contributions of a nonzero, in increasing cell order.
  std::span<const std::pair<int, int>> contributions(Index nz) const;

 private:
  SparseMatrix structure_;
  int local_pairs_ = 0;
  std::vector<Index> cell_map_;
  std::vector<std::pair<Index, Index>> entries_;
  std::vector<Index> contribution_offsets_;
  std::vector<std::pair<int, int>> contributions_;
};

/// Counters filled by the sampled assembly routines.
struct SampleStats {
  Index cells_touched = 0;
  Index entries = 0;
};

using PointField = std::function<double(const Point&)>;
using VectorPointField = std::function<std::array<double, 3>(const Point&)>;

/// Cellwise quadrature (Gauss, order+1 points per direction) and assembly of
/// the standard forms on a Q1/Q2 space. The quadrature layout (cells in
/// order, points with the first reference direction fastest) is shared by
/// every routine that takes field values.
class Assembler {
 public:
  explicit Assembler(std::shared_ptr<const FESpace> space);

  const FESpace& space() const { return *space_; }
  std::shared_ptr<const FESpace> space_ptr() const { return space_; }
  const OperatorPattern& pattern() const { return pattern_; }
  Index num_nonzeros() const { return pattern_.nonzeros(); }

  int points_per_cell() const { return points_per_cell_; }
  Index num_quadrature_points() const { return static_cast<Index>(points_.size()); }
  std::span<const Point> quadrature_points() const { return points_; }
  std::span<const Point> cell_points(int cell) const;

  /// Node-by-node blocks; vector spaces repeat them on every component.
  Matrix local_mass(int cell) const;
  Matrix local_stiffness(int cell, std::span<const double> field) const;
  /// Entry j * components + c holds the integral of d(phi_j)/dx_c (P0 test function).
  Vector local_divergence(int cell) const;
  /// Entry j * components + c holds the integral of f_c phi_j.
  Vector local_load(int cell, const VectorPointField& f) const;

  Vector mass_nonzeros() const;
  SparseMatrix mass() const;
  /// Stiffness with the field values (length N_q) as diffusivity.
  Vector stiffness_nonzeros(std::span<const double> field) const;
  SparseMatrix stiffness(std::span<const double> field) const;

  /// Selected nonzeros, integrating only over the cells touching them.
  /// Bitwise equal to the corresponding entries of the full assembly.
  Vector sampled_stiffness(const std::vector<Index>& nonzeros, const PointField& field,
                           SampleStats* stats = nullptr) const;
  Vector sampled_mass(const std::vector<Index>& nonzeros, SampleStats* stats = nullptr) const;
  /// Cells contributing to the given nonzeros, sorted.
  std::vector<int> cells_of_nonzeros(const std::vector<Index>& nonzeros) const;

  /// Divergence against P0 pressures: rows are cells, columns free DOFs.
  SparseMatrix divergence() const;
  /// Diagonal P0 mass (cell volumes).
  SparseMatrix cell_volumes() const;

  /// Boundary facets with the given tag, with face quadrature. Entry
  /// j * components + c of the returned vector is the integral of h_c phi_j.
  std::vector<int> facets_with_tag(BoundaryTag tag) const;
  Vector local_boundary_load(int facet, const VectorPointField& h) const;

  /// (cell, local dof) pairs through which a DOF receives contributions.
  std::span<const std::pair<int, int>> dof_contributions(Index dof) const;

 private:
  struct FaceQuadrature {
    std::vector<Point> points;
    std::vector<double> weights;
    Matrix values;  // points x nodes
  };
  Vector sampled(const std::vector<Index>& nonzeros, const std::function<Matrix(int)>& local,
                 SampleStats* stats) const;

  std::shared_ptr<const FESpace> space_;
  OperatorPattern pattern_;
  int points_per_cell_ = 0;
  Matrix ref_values_;                // points x nodes
  std::vector<Point> points_;        // N_q
  std::vector<double> weights_;      // N_q, quadrature weight times |det J|
  std::vector<double> gradients_;    // N_q x nodes x 3
  std::vector<FaceQuadrature> faces_;  // aligned with mesh facets
  std::vector<Index> dof_offsets_;
  std::vector<std::pair<int, int>> dof_cells_;
};

using ScalarField = std::function<double(const Point& x, double t, const Parameter& mu)>;
using VectorField = std::function<std::array<double, 3>(const Point& x, double t, const Parameter& mu)>;

/// Parametric data of a problem. Scalar problems read component 0 of the
/// vector-valued data.
struct ParametricData {
  enum class OutsidePolicy { ignore, warn, error };

  ScalarField alpha;
  VectorField f;
  VectorField g;   // Dirichlet datum on `dirichlet` facets
  VectorField h;   // Neumann datum on `neumann` facets
  VectorField u0;  // initial condition, t argument unused
  Parameter lower;
  Parameter upper;
  double T = 1.0;
  int steps = 1;
  OutsidePolicy outside = OutsidePolicy::warn;

  double delta() const { return T / steps; }
  double time(int n) const { return n * delta(); }
  bool contains(const Parameter& mu) const;
  /// Applies the outside policy to mu.
  void check(const Parameter& mu) const;
};

enum class FieldKind { alpha, forcing };

/// Field values at all quadrature points in the assembler layout.
Vector evaluate_field_at_quadrature(const ParametricData& data, FieldKind which, const Assembler& assembler,
                                    double t, const Parameter& mu);

/// Nodal interpolant of g on `dirichlet`-valued DOFs, zero elsewhere (full length).
Vector dirichlet_lifting(const FESpace& space, const VectorField& g, double t, const Parameter& mu);

enum class NormKind { H1, L2 };

/// Free-DOF inner product matrix: mass plus unit-diffusivity stiffness, or mass.
NormMatrix norm_matrix(const Assembler& assembler, NormKind kind);

}  // namespace strb
