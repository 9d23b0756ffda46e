#include "strb/hypermatrix.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>

namespace strb {

namespace {

std::size_t product(const std::vector<std::size_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

void check_labels(const std::vector<std::string>& labels, std::size_t rank) {
  require(rank == 2 || rank == 3, "hypermatrix: 2 or 3 axes required");
  require(labels.size() == rank, "hypermatrix: one label per axis required");
  std::set<char> seen;
  for (const auto& l : labels) {
    require(!l.empty(), "hypermatrix: empty axis label");
    for (char c : l) require(seen.insert(c).second, "hypermatrix: duplicate axis label '" + l + "'");
  }
}

}  // namespace

Hypermatrix::Hypermatrix(std::vector<std::string> labels, std::vector<std::size_t> dims)
    : Hypermatrix(std::move(labels), dims, std::vector<double>(product(dims), 0.0)) {}

Hypermatrix::Hypermatrix(std::vector<std::string> labels, std::vector<std::size_t> dims,
                         std::vector<double> data)
    : labels_(std::move(labels)), dims_(std::move(dims)), data_(std::move(data)) {
  check_labels(labels_, dims_.size());
  require(product(dims_) == data_.size(), "hypermatrix: extents do not match data length");
}

Hypermatrix Hypermatrix::from_matrix(const Matrix& m, std::string row_label,
                                     std::string col_label) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return Hypermatrix({std::move(row_label), std::move(col_label)},
                     {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                     std::move(data));
}

std::size_t Hypermatrix::axis_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  require(it != labels_.end(), "hypermatrix: unknown axis label '" + label + "'");
  return static_cast<std::size_t>(it - labels_.begin());
}

std::size_t Hypermatrix::extent(const std::string& label) const { return dims_[axis_of(label)]; }

Eigen::Map<const Matrix> Hypermatrix::matrix() const {
  const auto rows = static_cast<Index>(dims_.empty() ? 0 : dims_[0]);
  const auto cols = rows == 0 ? Index{0} : static_cast<Index>(data_.size()) / rows;
  return {data_.data(), rows, cols};
}

Eigen::Map<Matrix> Hypermatrix::matrix() {
  const auto rows = static_cast<Index>(dims_.empty() ? 0 : dims_[0]);
  const auto cols = rows == 0 ? Index{0} : static_cast<Index>(data_.size()) / rows;
  return {data_.data(), rows, cols};
}

Matrix Hypermatrix::slice(std::size_t k) const {
  require(rank() == 3 && k < dims_[2], "hypermatrix: slice index out of range");
  const auto r = static_cast<Index>(dims_[0]);
  const auto c = static_cast<Index>(dims_[1]);
  return Eigen::Map<const Matrix>(data_.data() + k * dims_[0] * dims_[1], r, c);
}

void Hypermatrix::set_slice(std::size_t k, const Matrix& m) {
  require(rank() == 3 && k < dims_[2], "hypermatrix: slice index out of range");
  require(m.rows() == static_cast<Index>(dims_[0]) && m.cols() == static_cast<Index>(dims_[1]),
          "hypermatrix: slice shape mismatch");
  Eigen::Map<Matrix>(data_.data() + k * dims_[0] * dims_[1], m.rows(), m.cols()) = m;
}

double Hypermatrix::frobenius_norm() const {
  // summation in sorted order makes the norm invariant under any reshape
  std::vector<double> sq(data_.size());
  std::transform(data_.begin(), data_.end(), sq.begin(), [](double x) { return x * x; });
  std::sort(sq.begin(), sq.end());
  return std::sqrt(std::accumulate(sq.begin(), sq.end(), 0.0));
}

Hypermatrix reshape(const Hypermatrix& h, const std::vector<std::string>& order,
                    std::optional<std::pair<std::size_t, std::size_t>> merge) {
  const std::size_t r = h.rank();
  require(order.size() == r, "reshape: permutation must name every axis");
  std::vector<std::size_t> perm(r);  // perm[new] = old
  for (std::size_t a = 0; a < r; ++a) perm[a] = h.axis_of(order[a]);
  {
    std::vector<std::size_t> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t a = 0; a < r; ++a) require(sorted[a] == a, "reshape: repeated axis in permutation");
  }
  if (merge) {
    require(merge->second == merge->first + 1 && merge->second < r,
            "reshape: merged axes must be adjacent after permutation");
  }

  std::vector<std::size_t> new_dims(r);
  for (std::size_t a = 0; a < r; ++a) new_dims[a] = h.dims()[perm[a]];

  // strides of the old layout, looked up in new axis order
  std::vector<std::size_t> old_stride(r, 1);
  for (std::size_t a = 1; a < r; ++a) old_stride[a] = old_stride[a - 1] * h.dims()[a - 1];

  std::vector<double> out(h.size());
  const auto src = h.data();
  if (r == 2) {
    const std::size_t s0 = old_stride[perm[0]], s1 = old_stride[perm[1]];
    std::size_t pos = 0;
    for (std::size_t j = 0; j < new_dims[1]; ++j)
      for (std::size_t i = 0; i < new_dims[0]; ++i) out[pos++] = src[i * s0 + j * s1];
  } else {
    const std::size_t s0 = old_stride[perm[0]], s1 = old_stride[perm[1]], s2 = old_stride[perm[2]];
    std::size_t pos = 0;
    for (std::size_t k = 0; k < new_dims[2]; ++k)
      for (std::size_t j = 0; j < new_dims[1]; ++j)
        for (std::size_t i = 0; i < new_dims[0]; ++i) out[pos++] = src[i * s0 + j * s1 + k * s2];
  }

  if (!merge) return Hypermatrix(order, new_dims, std::move(out));

  require(r == 3, "reshape: merging requires three axes");
  std::vector<std::string> labels;
  std::vector<std::size_t> dims;
  for (std::size_t a = 0; a < r; ++a) {
    if (a == merge->second) continue;
    if (a == merge->first) {
      labels.push_back(order[a] + order[a + 1]);
      dims.push_back(new_dims[a] * new_dims[a + 1]);
    } else {
      labels.push_back(order[a]);
      dims.push_back(new_dims[a]);
    }
  }
  return Hypermatrix(std::move(labels), std::move(dims), std::move(out));
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// ---------------------------------------------------------------------------

struct NormMatrix::Factor {
  std::once_flag once;
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
  SparseMatrix upper;
  bool ok = false;
};

NormMatrix::NormMatrix(SparseMatrix matrix)
    : matrix_(std::make_shared<const SparseMatrix>(std::move(matrix))),
      factor_(std::make_shared<Factor>()) {
  require(matrix_->rows() == matrix_->cols(), "norm matrix must be square");
}

const NormMatrix::Factor& NormMatrix::factorization() const {
  require(static_cast<bool>(matrix_), "norm matrix is empty");
  std::call_once(factor_->once, [this] {
    factor_->llt.compute(*matrix_);
    factor_->ok = factor_->llt.info() == Eigen::Success;
    if (factor_->ok) factor_->upper = factor_->llt.matrixU();
  });
  if (!factor_->ok) throw NumericalError("norm matrix: Cholesky factorization failed (matrix not SPD)");
  return *factor_;
}

Matrix NormMatrix::apply_factor(const Matrix& v) const {
  require(v.rows() == dim(), "norm matrix: dimension mismatch");
  const auto& f = factorization();
  Matrix pv = f.llt.permutationP() * v;
  return f.upper * pv;
}

Matrix NormMatrix::solve_factor(const Matrix& v) const {
  require(v.rows() == dim(), "norm matrix: dimension mismatch");
  const auto& f = factorization();
  Matrix w = f.llt.matrixU().solve(v);
  return f.llt.permutationPinv() * w;
}

Matrix NormMatrix::solve_factor_transpose(const Matrix& v) const {
  require(v.rows() == dim(), "norm matrix: dimension mismatch");
  const auto& f = factorization();
  Matrix pv = f.llt.permutationP() * v;
  return f.llt.matrixL().solve(pv);
}

Matrix NormMatrix::solve(const Matrix& v) const {
  require(v.rows() == dim(), "norm matrix: dimension mismatch");
  return factorization().llt.solve(v);
}

SparseMatrix NormMatrix::factor() const {
  const auto& f = factorization();
  return f.upper * f.llt.permutationP();
}

double weighted_norm(const Vector& v, const NormMatrix& x, NormMode mode) {
  require(v.size() == x.dim(), "weighted_norm: dimension mismatch");
  if (mode == NormMode::X) return x.apply_factor(v).norm();
  // v^T X^{-1} v = |H^{-T} v|^2
  return x.solve_factor_transpose(v).norm();
}

// ---------------------------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary hypermatrix I/O assumes a little-endian host");

constexpr char kMagic[7] = {'S', 'T', 'R', 'B', 'H', 'M', '1'};

}  // namespace

void write_hypermatrix(const std::filesystem::path& path, const Hypermatrix& h) {
  for (const auto& l : h.labels())
    require(l.size() == 1, "write_hypermatrix: merged axes cannot be serialized");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  const auto count = static_cast<std::uint8_t>(h.rank());
  out.write(reinterpret_cast<const char*>(&count), 1);
  for (const auto& l : h.labels()) out.write(l.data(), 1);
  for (std::size_t d : h.dims()) {
    const auto e = static_cast<std::uint64_t>(d);
    out.write(reinterpret_cast<const char*>(&e), sizeof(e));
  }
  out.write(reinterpret_cast<const char*>(h.data().data()),
            static_cast<std::streamsize>(h.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Hypermatrix read_hypermatrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[7];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 7, kMagic))
    throw std::runtime_error("not a hypermatrix file: " + path.string());
  std::uint8_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 1);
  std::vector<std::string> labels(count);
  for (auto& l : labels) {
    char c = 0;
    in.read(&c, 1);
    l = std::string(1, c);
  }
  std::vector<std::size_t> dims(count);
  for (auto& d : dims) {
    std::uint64_t e = 0;
    in.read(reinterpret_cast<char*>(&e), sizeof(e));
    d = static_cast<std::size_t>(e);
  }
  if (!in) throw std::runtime_error("truncated hypermatrix header: " + path.string());
  std::vector<double> data(product(dims));
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!in) throw std::runtime_error("truncated hypermatrix data: " + path.string());
  return Hypermatrix(std::move(labels), std::move(dims), std::move(data));
}

}  // namespace strb
