#include "strb/fem.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>

namespace strb {

namespace {

// 1D Lagrange basis on [0,1] with equispaced nodes.
void lagrange_1d(int order, double x, double* v, double* d) {
  if (order == 1) {
    v[0] = 1 - x;
    v[1] = x;
    d[0] = -1;
    d[1] = 1;
  } else {
    v[0] = 2 * (x - 0.5) * (x - 1);
    v[1] = -4 * x * (x - 1);
    v[2] = 2 * x * (x - 0.5);
    d[0] = 4 * x - 3;
    d[1] = -8 * x + 4;
    d[2] = 4 * x - 1;
  }
}

void gauss_1d(int n, std::vector<double>& x, std::vector<double>& w) {
  if (n == 1) {
    x = {0.5};
    w = {1.0};
  } else if (n == 2) {
    const double a = 0.5 / std::sqrt(3.0);
    x = {0.5 - a, 0.5 + a};
    w = {0.5, 0.5};
  } else if (n == 3) {
    const double a = 0.5 * std::sqrt(0.6);
    x = {0.5 - a, 0.5, 0.5 + a};
    w = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  } else {
    throw InvalidArgument("gauss rule with " + std::to_string(n) + " points not available");
  }
}

// Values (n) and reference gradients (n x 3, row-major) of the tensor basis.
void tensor_basis(int order, const Point& xi, double* values, double* grads) {
  const int m = order + 1;
  double v[3][3], d[3][3];
  for (int k = 0; k < 3; ++k) lagrange_1d(order, xi[k], v[k], d[k]);
  for (int c = 0; c < m; ++c)
    for (int b = 0; b < m; ++b)
      for (int a = 0; a < m; ++a) {
        const int i = a + m * (b + m * c);
        if (values) values[i] = v[0][a] * v[1][b] * v[2][c];
        if (grads) {
          grads[3 * i + 0] = d[0][a] * v[1][b] * v[2][c];
          grads[3 * i + 1] = v[0][a] * d[1][b] * v[2][c];
          grads[3 * i + 2] = v[0][a] * v[1][b] * d[2][c];
        }
      }
}

// Trilinear geometry map: position and Jacobian J(r, s) = dx_r / dxi_s.
void geometry(const Mesh& mesh, int cell, const Point& xi, Point& x, Eigen::Matrix3d& jac) {
  double v[8], g[24];
  tensor_basis(1, xi, v, g);
  x = {0, 0, 0};
  jac.setZero();
  for (int k = 0; k < 8; ++k) {
    const Point& p = mesh.vertices[static_cast<std::size_t>(mesh.cells[static_cast<std::size_t>(cell)][k])];
    for (int r = 0; r < 3; ++r) {
      x[r] += v[k] * p[r];
      for (int s = 0; s < 3; ++s) jac(r, s) += p[r] * g[3 * k + s];
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

FESpace::FESpace(std::shared_ptr<const Mesh> mesh, Element element, int components, bool constrain)
    : mesh_(std::move(mesh)), element_(element), components_(components) {
  require(static_cast<bool>(mesh_), "FESpace: null mesh");
  require(components == 1 || components == 3, "FESpace: scalar or 3-component spaces only");
  const int ncell = static_cast<int>(mesh_->cells.size());

  if (element_ == Element::P0) {
    nodes_per_cell_ = 1;
    reference_nodes_ = {{0.5, 0.5, 0.5}};
    for (int c = 0; c < ncell; ++c) {
      Point x;
      Eigen::Matrix3d j;
      geometry(*mesh_, c, reference_nodes_[0], x, j);
      nodes_.push_back(x);
      cell_nodes_.push_back(c);
    }
  } else {
    const int m = order() + 1;
    nodes_per_cell_ = m * m * m;
    for (int c = 0; c < m; ++c)
      for (int b = 0; b < m; ++b)
        for (int a = 0; a < m; ++a)
          reference_nodes_.push_back({static_cast<double>(a) / (m - 1), static_cast<double>(b) / (m - 1),
                                      static_cast<double>(c) / (m - 1)});
    if (element_ == Element::Q1) {
      nodes_ = mesh_->vertices;
      for (const auto& cell : mesh_->cells) cell_nodes_.insert(cell_nodes_.end(), cell.begin(), cell.end());
    } else {
      // a Q2 node is identified by the mesh vertices of the entity it sits on
      std::map<std::vector<int>, int> ids;
      for (int cell = 0; cell < ncell; ++cell) {
        const auto& verts = mesh_->cells[static_cast<std::size_t>(cell)];
        for (int i = 0; i < nodes_per_cell_; ++i) {
          const int lat[3] = {i % 3, (i / 3) % 3, i / 9};
          std::vector<int> key;
          for (int v = 0; v < 8; ++v) {
            bool on = true;
            for (int k = 0; k < 3; ++k) {
              const int bit = (v >> k) & 1;
              if ((lat[k] == 0 && bit == 1) || (lat[k] == 2 && bit == 0)) on = false;
            }
            if (on) key.push_back(verts[static_cast<std::size_t>(v)]);
          }
          std::sort(key.begin(), key.end());
          auto [it, inserted] = ids.emplace(key, static_cast<int>(nodes_.size()));
          if (inserted) {
            Point x;
            Eigen::Matrix3d j;
            geometry(*mesh_, cell, reference_nodes_[static_cast<std::size_t>(i)], x, j);
            nodes_.push_back(x);
          }
          cell_nodes_.push_back(it->second);
        }
      }
    }
  }

  const Index ndof = num_dofs();
  constraint_.assign(static_cast<std::size_t>(ndof), Constraint::free);
  if (constrain && element_ != Element::P0) {
    // priority: dirichlet > dirichlet_zero > dirichlet_nopen
    std::vector<int> priority(nodes_.size(), 0);
    std::vector<int> normal_axes(nodes_.size(), 0);
    for (const auto& f : mesh_->facets) {
      int p = 0;
      if (f.tag == BoundaryTag::dirichlet) p = 3;
      else if (f.tag == BoundaryTag::dirichlet_zero) p = 2;
      else if (f.tag == BoundaryTag::dirichlet_nopen) p = 1;
      if (p == 0) continue;
      int axis_bit = 0;
      if (p == 1) {
        const Point n = mesh_->facet_normal(f.cell, f.face);
        for (int k = 0; k < 3; ++k)
          if (std::abs(std::abs(n[k]) - 1.0) <= 1e-9) axis_bit = 1 << k;
        require(axis_bit != 0, "no-penetration condition requires axis-aligned facets");
      }
      const int axis = f.face / 2;
      const double side = f.face % 2;
      auto nodes = cell_nodes(f.cell);
      for (int i = 0; i < nodes_per_cell_; ++i) {
        if (reference_nodes_[static_cast<std::size_t>(i)][axis] != side) continue;
        const auto n = static_cast<std::size_t>(nodes[static_cast<std::size_t>(i)]);
        priority[n] = std::max(priority[n], p);
        if (p == 1) normal_axes[n] |= axis_bit;
      }
    }
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
      for (int c = 0; c < components_; ++c) {
        const auto d = static_cast<std::size_t>(dof(static_cast<int>(n), c));
        if (priority[n] == 3) constraint_[d] = Constraint::value;
        else if (priority[n] == 2) constraint_[d] = Constraint::zero;
        else if (priority[n] == 1 && components_ > 1 && (normal_axes[n] >> c & 1)) constraint_[d] = Constraint::zero;
      }
    }
  }
  free_index_.assign(static_cast<std::size_t>(ndof), -1);
  for (Index d = 0; d < ndof; ++d) {
    if (constraint_[static_cast<std::size_t>(d)] != Constraint::free) continue;
    free_index_[static_cast<std::size_t>(d)] = static_cast<Index>(free_dofs_.size());
    free_dofs_.push_back(d);
  }
}

int FESpace::order() const {
  switch (element_) {
    case Element::P0: return 0;
    case Element::Q1: return 1;
    case Element::Q2: return 2;
  }
  return 0;
}

std::span<const int> FESpace::cell_nodes(int cell) const {
  return {cell_nodes_.data() + static_cast<std::size_t>(cell) * static_cast<std::size_t>(nodes_per_cell_),
          static_cast<std::size_t>(nodes_per_cell_)};
}

Vector FESpace::restrict_to_free(const Vector& full) const {
  require(full.size() == num_dofs(), "restrict_to_free: length mismatch");
  Vector out(num_free());
  for (Index i = 0; i < num_free(); ++i) out[i] = full[free_dofs_[static_cast<std::size_t>(i)]];
  return out;
}

Vector FESpace::extend(const Vector& free, const Vector& full) const {
  require(free.size() == num_free() && full.size() == num_dofs(), "extend: length mismatch");
  Vector out = full;
  for (Index i = 0; i < num_free(); ++i) out[free_dofs_[static_cast<std::size_t>(i)]] = free[i];
  return out;
}

// ---------------------------------------------------------------------------

OperatorPattern::OperatorPattern(const FESpace& space) {
  const int ndl = space.dofs_per_cell();
  const int nc = space.components();
  local_pairs_ = ndl * ndl;
  const int ncell = space.num_cells();

  std::vector<Eigen::Triplet<double>> trip;
  std::vector<Index> local_free(static_cast<std::size_t>(ndl));
  auto fill_local = [&](int cell) {
    auto nodes = space.cell_nodes(cell);
    for (int i = 0; i < space.nodes_per_cell(); ++i)
      for (int c = 0; c < nc; ++c)
        local_free[static_cast<std::size_t>(i * nc + c)] = space.free_index(space.dof(nodes[static_cast<std::size_t>(i)], c));
  };
  for (int cell = 0; cell < ncell; ++cell) {
    fill_local(cell);
    for (int i = 0; i < ndl; ++i)
      for (int j = 0; j < ndl; ++j) {
        if (i % nc != j % nc) continue;
        const Index fi = local_free[static_cast<std::size_t>(i)], fj = local_free[static_cast<std::size_t>(j)];
        if (fi >= 0 && fj >= 0) trip.emplace_back(fi, fj, 0.0);
      }
  }
  structure_.resize(space.num_free(), space.num_free());
  structure_.setFromTriplets(trip.begin(), trip.end());
  structure_.makeCompressed();

  const Index nnz = structure_.nonZeros();
  entries_.resize(static_cast<std::size_t>(nnz));
  const auto* outer = structure_.outerIndexPtr();
  const auto* inner = structure_.innerIndexPtr();
  for (Index j = 0; j < structure_.cols(); ++j)
    for (auto k = outer[j]; k < outer[j + 1]; ++k) entries_[static_cast<std::size_t>(k)] = {inner[k], j};

  cell_map_.assign(static_cast<std::size_t>(ncell) * static_cast<std::size_t>(local_pairs_), -1);
  std::vector<Index> counts(static_cast<std::size_t>(nnz), 0);
  for (int cell = 0; cell < ncell; ++cell) {
    fill_local(cell);
    Index* map = cell_map_.data() + static_cast<std::size_t>(cell) * static_cast<std::size_t>(local_pairs_);
    for (int i = 0; i < ndl; ++i)
      for (int j = 0; j < ndl; ++j) {
        if (i % nc != j % nc) continue;
        const Index fi = local_free[static_cast<std::size_t>(i)], fj = local_free[static_cast<std::size_t>(j)];
        if (fi < 0 || fj < 0) continue;
        const auto* first = inner + outer[fj];
        const auto* last = inner + outer[fj + 1];
        const auto* pos = std::lower_bound(first, last, static_cast<int>(fi));
        const Index z = outer[fj] + (pos - first);
        map[i * ndl + j] = z;
        ++counts[static_cast<std::size_t>(z)];
      }
  }
  contribution_offsets_.assign(static_cast<std::size_t>(nnz) + 1, 0);
  for (Index z = 0; z < nnz; ++z)
    contribution_offsets_[static_cast<std::size_t>(z) + 1] = contribution_offsets_[static_cast<std::size_t>(z)] + counts[static_cast<std::size_t>(z)];
  contributions_.resize(static_cast<std::size_t>(contribution_offsets_.back()));
  std::vector<Index> fill(contribution_offsets_.begin(), contribution_offsets_.end() - 1);
  for (int cell = 0; cell < ncell; ++cell) {
    const Index* map = cell_map_.data() + static_cast<std::size_t>(cell) * static_cast<std::size_t>(local_pairs_);
    for (int p = 0; p < local_pairs_; ++p)
      if (map[p] >= 0) contributions_[static_cast<std::size_t>(fill[static_cast<std::size_t>(map[p])]++)] = {cell, p};
  }
}

SparseMatrix OperatorPattern::from_nonzeros(const Vector& values) const {
  require(values.size() == nonzeros(), "from_nonzeros: length mismatch");
  SparseMatrix m = structure_;
  std::copy(values.data(), values.data() + values.size(), m.valuePtr());
  return m;
}

Vector OperatorPattern::nonzeros_of(const SparseMatrix& m) const {
  require(m.nonZeros() == nonzeros() && m.rows() == structure_.rows() && m.isCompressed(),
          "nonzeros_of: structure mismatch");
  return Eigen::Map<const Vector>(m.valuePtr(), m.nonZeros());
}

std::span<const Index> OperatorPattern::cell_map(int cell) const {
  return {cell_map_.data() + static_cast<std::size_t>(cell) * static_cast<std::size_t>(local_pairs_),
          static_cast<std::size_t>(local_pairs_)};
}

std::span<const std::pair<int, int>> OperatorPattern::contributions(Index nz) const {
  const auto b = contribution_offsets_[static_cast<std::size_t>(nz)];
  const auto e = contribution_offsets_[static_cast<std::size_t>(nz) + 1];
  return {contributions_.data() + b, static_cast<std::size_t>(e - b)};
}

// ---------------------------------------------------------------------------

Assembler::Assembler(std::shared_ptr<const FESpace> space) : space_(std::move(space)) {
  require(static_cast<bool>(space_), "Assembler: null space");
  require(space_->element() != Element::P0, "Assembler: Q1 or Q2 space required");
  const FESpace& s = *space_;
  const Mesh& mesh = s.mesh();
  pattern_ = OperatorPattern(s);
  const int order = s.order();
  const int n = s.nodes_per_cell();

  std::vector<double> gx, gw;
  gauss_1d(order + 1, gx, gw);
  const int m = order + 1;
  points_per_cell_ = m * m * m;
  std::vector<Point> ref_points;
  std::vector<double> ref_weights;
  for (int c = 0; c < m; ++c)
    for (int b = 0; b < m; ++b)
      for (int a = 0; a < m; ++a) {
        ref_points.push_back({gx[static_cast<std::size_t>(a)], gx[static_cast<std::size_t>(b)], gx[static_cast<std::size_t>(c)]});
        ref_weights.push_back(gw[static_cast<std::size_t>(a)] * gw[static_cast<std::size_t>(b)] * gw[static_cast<std::size_t>(c)]);
      }
  const int nq = points_per_cell_;
  ref_values_.resize(nq, n);
  std::vector<double> ref_grads(static_cast<std::size_t>(nq * n * 3));
  std::vector<double> vals(static_cast<std::size_t>(n));
  for (int q = 0; q < nq; ++q) {
    tensor_basis(order, ref_points[static_cast<std::size_t>(q)], vals.data(), ref_grads.data() + static_cast<std::size_t>(q * n * 3));
    for (int i = 0; i < n; ++i) ref_values_(q, i) = vals[static_cast<std::size_t>(i)];
  }

  const int ncell = s.num_cells();
  points_.resize(static_cast<std::size_t>(ncell * nq));
  weights_.resize(static_cast<std::size_t>(ncell * nq));
  gradients_.resize(static_cast<std::size_t>(ncell) * static_cast<std::size_t>(nq * n * 3));
  for (int cell = 0; cell < ncell; ++cell) {
    // per cell an n x 3nq column-major block, column 3q + d
    double* g = gradients_.data() + static_cast<std::size_t>(cell) * static_cast<std::size_t>(nq * n * 3);
    for (int q = 0; q < nq; ++q) {
      Point x;
      Eigen::Matrix3d jac;
      geometry(mesh, cell, ref_points[static_cast<std::size_t>(q)], x, jac);
      const double det = jac.determinant();
      if (!(det > 0)) throw InvalidArgument("Assembler: nonpositive Jacobian in cell " + std::to_string(cell));
      const Eigen::Matrix3d jit = jac.inverse().transpose();
      const auto k = static_cast<std::size_t>(cell * nq + q);
      points_[k] = x;
      weights_[k] = det * ref_weights[static_cast<std::size_t>(q)];
      for (int i = 0; i < n; ++i) {
        const double* r = ref_grads.data() + static_cast<std::size_t>((q * n + i) * 3);
        const Eigen::Vector3d phys = jit * Eigen::Vector3d(r[0], r[1], r[2]);
        for (int d = 0; d < 3; ++d) g[(3 * q + d) * n + i] = phys[d];
      }
    }
  }

  // face quadrature for every tagged facet
  for (const auto& f : mesh.facets) {
    FaceQuadrature fq;
    const int axis = f.face / 2;
    const int t1 = (axis + 1) % 3, t2 = (axis + 2) % 3;
    fq.values.resize(m * m, n);
    int row = 0;
    for (int b = 0; b < m; ++b)
      for (int a = 0; a < m; ++a) {
        Point xi;
        xi[axis] = f.face % 2;
        xi[t1] = gx[static_cast<std::size_t>(a)];
        xi[t2] = gx[static_cast<std::size_t>(b)];
        Point x;
        Eigen::Matrix3d jac;
        geometry(mesh, f.cell, xi, x, jac);
        const double area = jac.col(t1).cross(jac.col(t2)).norm();
        fq.points.push_back(x);
        fq.weights.push_back(area * gw[static_cast<std::size_t>(a)] * gw[static_cast<std::size_t>(b)]);
        tensor_basis(order, xi, vals.data(), nullptr);
        for (int i = 0; i < n; ++i) fq.values(row, i) = vals[static_cast<std::size_t>(i)];
        ++row;
      }
    faces_.push_back(std::move(fq));
  }

  // DOF -> (cell, local dof) incidence
  const int nc = s.components();
  const int ndl = s.dofs_per_cell();
  std::vector<Index> counts(static_cast<std::size_t>(s.num_dofs()), 0);
  for (int cell = 0; cell < ncell; ++cell)
    for (int node : s.cell_nodes(cell))
      for (int c = 0; c < nc; ++c) ++counts[static_cast<std::size_t>(s.dof(node, c))];
  dof_offsets_.assign(static_cast<std::size_t>(s.num_dofs()) + 1, 0);
  for (Index d = 0; d < s.num_dofs(); ++d)
    dof_offsets_[static_cast<std::size_t>(d) + 1] = dof_offsets_[static_cast<std::size_t>(d)] + counts[static_cast<std::size_t>(d)];
  dof_cells_.resize(static_cast<std::size_t>(dof_offsets_.back()));
  std::vector<Index> fill(dof_offsets_.begin(), dof_offsets_.end() - 1);
  for (int cell = 0; cell < ncell; ++cell) {
    auto nodes = s.cell_nodes(cell);
    for (int i = 0; i < s.nodes_per_cell(); ++i)
      for (int c = 0; c < nc; ++c) {
        const auto d = static_cast<std::size_t>(s.dof(nodes[static_cast<std::size_t>(i)], c));
        dof_cells_[static_cast<std::size_t>(fill[d]++)] = {cell, i * nc + c};
      }
  }
  (void)ndl;
}

std::span<const Point> Assembler::cell_points(int cell) const {
  return {points_.data() + static_cast<std::size_t>(cell * points_per_cell_), static_cast<std::size_t>(points_per_cell_)};
}

Matrix Assembler::local_mass(int cell) const {
  const int nq = points_per_cell_;
  Eigen::Map<const Vector> w(weights_.data() + static_cast<std::size_t>(cell * nq), nq);
  return ref_values_.transpose() * w.asDiagonal() * ref_values_;
}

Matrix Assembler::local_stiffness(int cell, std::span<const double> field) const {
  const int nq = points_per_cell_;
  const int n = space_->nodes_per_cell();
  require(static_cast<int>(field.size()) == nq, "local_stiffness: field length mismatch");
  Eigen::Map<const Matrix> g(gradients_.data() + static_cast<std::size_t>(cell) * static_cast<std::size_t>(nq * n * 3), n, 3 * nq);
  Vector scale(3 * nq);
  for (int q = 0; q < nq; ++q) {
    const double s = weights_[static_cast<std::size_t>(cell * nq + q)] * field[static_cast<std::size_t>(q)];
    scale.segment(3 * q, 3).setConstant(s);
  }
  return g * scale.asDiagonal() * g.transpose();
}

Vector Assembler::local_divergence(int cell) const {
  const FESpace& s = *space_;
  require(s.components() == 3, "local_divergence: vector space required");
  const int nq = points_per_cell_;
  const int n = s.nodes_per_cell();
  Eigen::Map<const Matrix> g(gradients_.data() + static_cast<std::size_t>(cell) * static_cast<std::size_t>(nq * n * 3), n, 3 * nq);
  Vector out = Vector::Zero(3 * n);
  for (int q = 0; q < nq; ++q) {
    const double w = weights_[static_cast<std::size_t>(cell * nq + q)];
    for (int j = 0; j < n; ++j)
      for (int d = 0; d < 3; ++d) out[3 * j + d] += w * g(j, 3 * q + d);
  }
  return out;
}

Vector Assembler::local_load(int cell, const VectorPointField& f) const {
  const int nq = points_per_cell_;
  const int n = space_->nodes_per_cell();
  const int nc = space_->components();
  Vector out = Vector::Zero(n * nc);
  for (int q = 0; q < nq; ++q) {
    const auto k = static_cast<std::size_t>(cell * nq + q);
    const auto fv = f(points_[k]);
    for (int j = 0; j < n; ++j)
      for (int c = 0; c < nc; ++c) out[j * nc + c] += weights_[k] * fv[static_cast<std::size_t>(c)] * ref_values_(q, j);
  }
  return out;
}

namespace {

void scatter(const OperatorPattern& p, std::span<const Index> map, const Matrix& local, int nc, Vector& values) {
  const Index ndl = local.rows() * nc;
  for (Index i = 0; i < ndl; ++i)
    for (Index j = 0; j < ndl; ++j) {
      const Index z = map[static_cast<std::size_t>(i * ndl + j)];
      if (z >= 0) values[z] += local(i / nc, j / nc);
    }
  (void)p;
}

}  // namespace

Vector Assembler::mass_nonzeros() const {
  Vector v = Vector::Zero(num_nonzeros());
  for (int c = 0; c < space_->num_cells(); ++c)
    scatter(pattern_, pattern_.cell_map(c), local_mass(c), space_->components(), v);
  return v;
}

SparseMatrix Assembler::mass() const { return pattern_.from_nonzeros(mass_nonzeros()); }

Vector Assembler::stiffness_nonzeros(std::span<const double> field) const {
  require(static_cast<Index>(field.size()) == num_quadrature_points(), "stiffness: field length must equal N_q");
  Vector v = Vector::Zero(num_nonzeros());
  const int nq = points_per_cell_;
  for (int c = 0; c < space_->num_cells(); ++c)
    scatter(pattern_, pattern_.cell_map(c), local_stiffness(c, field.subspan(static_cast<std::size_t>(c * nq), static_cast<std::size_t>(nq))),
            space_->components(), v);
  return v;
}

SparseMatrix Assembler::stiffness(std::span<const double> field) const {
  return pattern_.from_nonzeros(stiffness_nonzeros(field));
}

std::vector<int> Assembler::cells_of_nonzeros(const std::vector<Index>& nonzeros) const {
  std::vector<int> cells;
  for (Index z : nonzeros) {
    require(z >= 0 && z < num_nonzeros(), "sampled assembly: nonzero index out of range");
    for (const auto& [cell, p] : pattern_.contributions(z)) cells.push_back(cell);
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

Vector Assembler::sampled(const std::vector<Index>& nonzeros, const std::function<Matrix(int)>& local,
                          SampleStats* stats) const {
  const std::vector<int> cells = cells_of_nonzeros(nonzeros);
  std::map<int, Matrix> locals;
  for (int c : cells) locals.emplace(c, local(c));
  const int nc = space_->components();
  const int ndl = space_->dofs_per_cell();
  Vector out(static_cast<Index>(nonzeros.size()));
  for (std::size_t k = 0; k < nonzeros.size(); ++k) {
    double v = 0.0;
    for (const auto& [cell, p] : pattern_.contributions(nonzeros[k]))
      v += locals.at(cell)((p / ndl) / nc, (p % ndl) / nc);
    out[static_cast<Index>(k)] = v;
  }
  if (stats) {
    stats->cells_touched += static_cast<Index>(cells.size());
    stats->entries += static_cast<Index>(nonzeros.size());
  }
  return out;
}

Vector Assembler::sampled_stiffness(const std::vector<Index>& nonzeros, const PointField& field,
                                    SampleStats* stats) const {
  return sampled(
      nonzeros,
      [&](int cell) {
        auto pts = cell_points(cell);
        std::vector<double> values(pts.size());
        for (std::size_t q = 0; q < pts.size(); ++q) values[q] = field(pts[q]);
        return local_stiffness(cell, values);
      },
      stats);
}

Vector Assembler::sampled_mass(const std::vector<Index>& nonzeros, SampleStats* stats) const {
  return sampled(nonzeros, [&](int cell) { return local_mass(cell); }, stats);
}

SparseMatrix Assembler::divergence() const {
  const FESpace& s = *space_;
  std::vector<Eigen::Triplet<double>> trip;
  for (int cell = 0; cell < s.num_cells(); ++cell) {
    const Vector b = local_divergence(cell);
    auto nodes = s.cell_nodes(cell);
    for (int j = 0; j < s.nodes_per_cell(); ++j)
      for (int c = 0; c < 3; ++c) {
        const Index f = s.free_index(s.dof(nodes[static_cast<std::size_t>(j)], c));
        if (f >= 0) trip.emplace_back(cell, f, b[3 * j + c]);
      }
  }
  SparseMatrix out(s.num_cells(), s.num_free());
  out.setFromTriplets(trip.begin(), trip.end());
  out.makeCompressed();
  return out;
}

SparseMatrix Assembler::cell_volumes() const {
  const int nq = points_per_cell_;
  SparseMatrix out(space_->num_cells(), space_->num_cells());
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < space_->num_cells(); ++c) {
    double v = 0.0;
    for (int q = 0; q < nq; ++q) v += weights_[static_cast<std::size_t>(c * nq + q)];
    trip.emplace_back(c, c, v);
  }
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

std::vector<int> Assembler::facets_with_tag(BoundaryTag tag) const {
  std::vector<int> out;
  const auto& facets = space_->mesh().facets;
  for (std::size_t i = 0; i < facets.size(); ++i)
    if (facets[i].tag == tag) out.push_back(static_cast<int>(i));
  return out;
}

Vector Assembler::local_boundary_load(int facet, const VectorPointField& h) const {
  const FaceQuadrature& fq = faces_[static_cast<std::size_t>(facet)];
  const int n = space_->nodes_per_cell();
  const int nc = space_->components();
  Vector out = Vector::Zero(n * nc);
  for (std::size_t q = 0; q < fq.points.size(); ++q) {
    const auto hv = h(fq.points[q]);
    for (int j = 0; j < n; ++j)
      for (int c = 0; c < nc; ++c)
        out[j * nc + c] += fq.weights[q] * hv[static_cast<std::size_t>(c)] * fq.values(static_cast<Index>(q), j);
  }
  return out;
}

std::span<const std::pair<int, int>> Assembler::dof_contributions(Index dof) const {
  const auto b = dof_offsets_[static_cast<std::size_t>(dof)];
  const auto e = dof_offsets_[static_cast<std::size_t>(dof) + 1];
  return {dof_cells_.data() + b, static_cast<std::size_t>(e - b)};
}

// ---------------------------------------------------------------------------

bool ParametricData::contains(const Parameter& mu) const {
  if (mu.size() != lower.size()) return false;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu[i] < lower[i] || mu[i] > upper[i]) return false;
  return true;
}

void ParametricData::check(const Parameter& mu) const {
  if (outside == OutsidePolicy::ignore || lower.empty() || contains(mu)) return;
  if (outside == OutsidePolicy::error) throw InvalidArgument("parameter outside the parameter domain");
  std::clog << "warning: parameter outside the parameter domain\n";
}

Vector evaluate_field_at_quadrature(const ParametricData& data, FieldKind which, const Assembler& assembler,
                                    double t, const Parameter& mu) {
  data.check(mu);
  auto pts = assembler.quadrature_points();
  Vector out(static_cast<Index>(pts.size()));
  for (std::size_t q = 0; q < pts.size(); ++q)
    out[static_cast<Index>(q)] = which == FieldKind::alpha ? data.alpha(pts[q], t, mu) : data.f(pts[q], t, mu)[0];
  return out;
}

Vector dirichlet_lifting(const FESpace& space, const VectorField& g, double t, const Parameter& mu) {
  Vector out = Vector::Zero(space.num_dofs());
  for (Index n = 0; n < space.num_nodes(); ++n) {
    bool any = false;
    for (int c = 0; c < space.components(); ++c)
      any = any || space.constraint(space.dof(static_cast<int>(n), c)) == FESpace::Constraint::value;
    if (!any) continue;
    const auto v = g(space.node(static_cast<int>(n)), t, mu);
    for (int c = 0; c < space.components(); ++c) {
      const Index d = space.dof(static_cast<int>(n), c);
      if (space.constraint(d) == FESpace::Constraint::value) out[d] = v[static_cast<std::size_t>(c)];
    }
  }
  return out;
}

NormMatrix norm_matrix(const Assembler& assembler, NormKind kind) {
  Vector v = assembler.mass_nonzeros();
  if (kind == NormKind::H1) {
    const std::vector<double> ones(static_cast<std::size_t>(assembler.num_quadrature_points()), 1.0);
    v += assembler.stiffness_nonzeros(ones);
  }
  return NormMatrix(assembler.pattern().from_nonzeros(v));
}

}  // namespace strb
