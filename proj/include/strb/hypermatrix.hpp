#pragma once

#include "strb/linalg.hpp"

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace strb {

/// Dense array with two or three labelled axes.
///
/// Storage is column-major in the generalized sense: axis 0 varies fastest.
/// In the canonical (s, t, p) layout the space index is therefore contiguous
/// and the flattening onto (s, tp) is a zero-copy view.
///
/// Axis labels are short strings. Simple axes carry a single character
/// ('s' space, 't' time, 'p' parameter, 'q' quadrature point, upper case for
/// reduced axes); an axis obtained by merging carries the concatenation of
/// the merged labels, fastest first.
class Hypermatrix {
 public:
  Hypermatrix() = default;
  Hypermatrix(std::vector<std::string> labels, std::vector<std::size_t> dims);
  Hypermatrix(std::vector<std::string> labels, std::vector<std::size_t> dims,
              std::vector<double> data);

  static Hypermatrix from_matrix(const Matrix& m, std::string row_label,
                                 std::string col_label);

  std::size_t rank() const { return dims_.size(); }
  const std::vector<std::size_t>& dims() const { return dims_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return data_.size(); }
  std::size_t extent(const std::string& label) const;
  std::size_t axis_of(const std::string& label) const;

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  double operator()(std::size_t i, std::size_t j) const { return data_[i + dims_[0] * j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i + dims_[0] * j]; }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[i + dims_[0] * (j + dims_[1] * k)];
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[i + dims_[0] * (j + dims_[1] * k)];
  }

  /// Axis 0 against all remaining axes merged (zero-copy).
  Eigen::Map<const Matrix> matrix() const;
  Eigen::Map<Matrix> matrix();

  /// Copy of the slice with the last axis fixed at `k` as a dims[0] x dims[1] matrix.
  Matrix slice(std::size_t k) const;
  void set_slice(std::size_t k, const Matrix& m);

  double frobenius_norm() const;

  friend bool operator==(const Hypermatrix&, const Hypermatrix&) = default;

 private:
  std::vector<std::string> labels_;
  std::vector<std::size_t> dims_;
  std::vector<double> data_;
};

/// Permutes the axes of `h` into `order` (a permutation of its labels) and
/// optionally merges two adjacent axes of the permuted array, given by their
/// positions in `order`. The first axis of a merged pair varies fastest.
Hypermatrix reshape(const Hypermatrix& h, const std::vector<std::string>& order,
                    std::optional<std::pair<std::size_t, std::size_t>> merge = std::nullopt);

/// Standard Kronecker product: block (i, j) of the result is a(i, j) * b.
Matrix kron(const Matrix& a, const Matrix& b);

/// Symmetric positive definite sparse matrix with a lazily computed sparse
/// Cholesky factor. With the fill-reducing permutation P the factorization
/// reads X = H^T H with H = L^T P, which is upper triangular in the permuted
/// ordering. Copies share the factor.
class NormMatrix {
 public:
  NormMatrix() = default;
  explicit NormMatrix(SparseMatrix matrix);

  const SparseMatrix& matrix() const { return *matrix_; }
  Index dim() const { return matrix_ ? matrix_->rows() : 0; }

  /// H v.
  Matrix apply_factor(const Matrix& v) const;
  /// H^{-1} v.
  Matrix solve_factor(const Matrix& v) const;
  /// H^{-T} v.
  Matrix solve_factor_transpose(const Matrix& v) const;
  /// X^{-1} v via the two triangular solves.
  Matrix solve(const Matrix& v) const;
  /// Explicit H (tests and small problems only).
  SparseMatrix factor() const;

 private:
  struct Factor;
  const Factor& factorization() const;

  std::shared_ptr<const SparseMatrix> matrix_;
  std::shared_ptr<Factor> factor_;
};

enum class NormMode { X, X_inverse };

/// sqrt(v^T X v) or sqrt(v^T X^{-1} v).
double weighted_norm(const Vector& v, const NormMatrix& x, NormMode mode = NormMode::X);

/// Binary hypermatrix file: magic "STRBHM1", one byte axis count, one byte
/// label per axis, extents as u64 little endian, data as f64 little endian in
/// canonical order.
void write_hypermatrix(const std::filesystem::path& path, const Hypermatrix& h);
Hypermatrix read_hypermatrix(const std::filesystem::path& path);

}  // namespace strb
