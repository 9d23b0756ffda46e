#pragma once

#include "strb/pod.hpp"

#include <Eigen/LU>

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace strb {

enum class MdeimVariant { STD, ST, FUN, STFUN };
enum class TermKind { operator_term, rhs_term };

std::string to_string(MdeimVariant v);
MdeimVariant parse_variant(const std::string& name);
/// ST and STFUN compress along time as well.
bool is_space_time(MdeimVariant v);
bool is_functional(MdeimVariant v);

/// Greedy interpolation indices of a basis: the first is the largest entry of
/// column 1, then the largest entry of the interpolation residual of each
/// further column. Ties go to the lowest index.
std::vector<Index> greedy_indices(const Matrix& basis);

/// Interpolant of a (t, mu)-dependent vector of operator nonzeros or
/// right-hand side entries. Space-time interpolants use coefficient index
/// i_s * n_t + i_t.
class MdeimInterpolant {
 public:
  MdeimInterpolant() = default;
  MdeimInterpolant(MdeimVariant variant, TermKind kind, Matrix space_basis, std::vector<Index> space_samples,
                   Matrix time_basis = {}, std::vector<Index> time_samples = {});

  MdeimVariant variant() const { return variant_; }
  TermKind kind() const { return kind_; }
  bool space_time() const { return time_basis_.size() > 0; }

  const Matrix& space_basis() const { return space_basis_; }
  const Matrix& time_basis() const { return time_basis_; }
  const std::vector<Index>& space_samples() const { return space_samples_; }
  const std::vector<Index>& time_samples() const { return time_samples_; }
  Index n_s() const { return space_basis_.cols(); }
  Index n_t() const { return time_basis_.cols(); }
  Index rows() const { return space_basis_.rows(); }

  /// P^T Phi of each axis.
  const Matrix& space_interpolation() const { return space_pphi_; }
  const Matrix& time_interpolation() const { return time_pphi_; }

  /// Frobenius norm of the inverse interpolation matrix (product over axes).
  double chi() const { return chi_space_ * (space_time() ? chi_time_ : 1.0); }
  double chi_space() const { return chi_space_; }
  double chi_time() const { return chi_time_; }

  /// Sampled entries per online evaluation: n_s for each of the N_t steps
  /// (space only) or n_s * n_t once (space-time).
  Index sampled_entries(int steps) const { return space_time() ? n_s() * n_t() : n_s() * steps; }

  /// Coefficients from entries at the samples. Space-only: one step, length
  /// n_s. Space-time: entry (i_s, i_t) at i_s * n_t + i_t.
  Vector coefficients(const Vector& sampled) const;
  /// Space-only: n_s x N_t matrix of sampled entries, one column per step.
  Matrix step_coefficients(const Matrix& sampled_steps) const;

  /// Space vector of one step. Space-only takes that step's coefficients;
  /// space-time takes all coefficients and the 1-based step index.
  Vector reconstruct(const Vector& coefficients, int step = 0) const;
  /// Space-only: Phi C for an n_s x N_t coefficient matrix.
  Matrix reconstruct_steps(const Matrix& coefficients) const;
  /// Space-time: the N x N_t matrix of all steps. Space-only: Phi c.
  Matrix reconstruct_all(const Vector& coefficients) const;

  /// Coefficients as n_s x n_t matrix.
  Matrix coefficient_matrix(const Vector& coefficients) const;

  // Training diagnostics for the error bounds.
  double eps = 0.0;
  double snapshot_norm = 0.0;    // |A_(s, t mu)|_F, or |alpha_(s, t mu)|_F (functional)
  double compressed_norm = 0.0;  // |Phi^T A|_F, or |Phi_alpha^T alpha|_F (space-time)
  double reduced_norm = 0.0;     // |Abar_(s, s^)|_F (functional)
  double assembler_constant = 1.0;  // fitted field-to-operator factor (functional)
  Vector space_spectrum;
  Vector time_spectrum;

  /// Bound factor multiplying eps * chi in the error estimate of the variant:
  /// STD |A|; ST sqrt(|A|^2 + |A~|^2); FUN |Abar| + c |alpha|;
  /// STFUN |Abar| sqrt(n_t) + c sqrt(|alpha|^2 + |alpha~|^2), with c the
  /// fitted assembler constant.
  double bound_scale() const;
  double error_bound() const { return eps * chi() * bound_scale(); }

 private:
  MdeimVariant variant_ = MdeimVariant::STD;
  TermKind kind_ = TermKind::operator_term;
  Matrix space_basis_;
  Matrix time_basis_;
  std::vector<Index> space_samples_;
  std::vector<Index> time_samples_;
  Matrix space_pphi_;
  Matrix time_pphi_;
  Eigen::PartialPivLU<Matrix> space_lu_;
  Eigen::PartialPivLU<Matrix> time_lu_;
  double chi_space_ = 0.0;
  double chi_time_ = 0.0;
};

/// STD or ST interpolant from (s, t, p) snapshots of nonzeros or rhs entries.
MdeimInterpolant build_algebraic(const Hypermatrix& snapshots, double eps, MdeimVariant variant,
                                 TermKind kind = TermKind::operator_term);

/// Maps field values at the quadrature points to operator nonzeros.
using FieldForm = std::function<Vector(std::span<const double>)>;

struct FieldCompression {
  PodResult field_space;  // Phi_alpha, N_q x n_alpha_s
  PodResult field_time;   // space-time only
  Matrix reduced_operators;  // Abar, N_z x n_alpha_s, column i = form(Phi_alpha[:, i])
};

struct FunctionalMdeim {
  FieldCompression fields;
  MdeimInterpolant interpolant;
};

/// Largest ratio |form(E)|_F / |E|_F over the parameters, with E the field
/// residuals alpha - Phi Phi^T alpha of all steps of one parameter.
double fit_assembler_constant(const FieldForm& form, const Hypermatrix& fields, const Matrix& field_basis);

/// FUN or STFUN interpolant from (q, t, p) field snapshots. The assembler
/// constant is fitted on the same snapshots.
FunctionalMdeim build_functional(const Hypermatrix& field_snapshots, const FieldForm& form, double eps,
                                 MdeimVariant variant);

/// Bases as hypermatrix binaries and a JSON manifest, all named <stem>.*.
void write_interpolant(const std::filesystem::path& stem, const MdeimInterpolant& interp);
MdeimInterpolant read_interpolant(const std::filesystem::path& stem);

}  // namespace strb
