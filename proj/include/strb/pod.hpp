#pragma once

#include "strb/hypermatrix.hpp"

#include <filesystem>

namespace strb {

struct PodResult {
  Matrix basis;            // N x n, orthonormal in the requested inner product
  Vector singular_values;  // full spectrum, nonincreasing
  Index rank = 0;
  double tolerance = 0.0;

  /// Sum of squared singular values beyond the rank.
  double tail_energy() const;
};

/// Smallest n with sum_{i<=n} sigma_i^2 >= (1 - eps^2) sum_i sigma_i^2, at least 1.
Index truncation_rank(const Vector& sigma, double eps);

/// Truncated POD of the columns of `u`. With a weight X = H^T H the basis is
/// X-orthonormal: the POD of H u is computed and mapped back through H^{-1}.
/// The singular vectors come from the eigendecomposition of the smaller of the
/// two Gram matrices.
PodResult spod(const Matrix& u, double eps, const NormMatrix* weight = nullptr);

/// Same as spod with the identity weight, applied to time-major snapshots.
PodResult tpod_time(const Matrix& u_time_major, double eps);

struct StHosvd {
  PodResult space;
  PodResult time;
  /// Frobenius norm of the space-compressed snapshots rearranged as (t, S p).
  double compressed_norm = 0.0;
};

/// Space POD of u_(s, tp), then time POD of the space-compressed snapshots
/// arranged as (t, S p).
StHosvd st_hosvd(const Hypermatrix& u, double eps, const NormMatrix* space_weight = nullptr);

/// Space-compressed snapshots Phi^T X u arranged as a (t, S p) matrix.
Matrix compress_space(const Hypermatrix& u, const Matrix& space_basis,
                      const NormMatrix* space_weight = nullptr);

/// Basis as a hypermatrix binary plus a "<stem>.spectrum.csv" sidecar.
void write_pod(const std::filesystem::path& basis_path, const PodResult& pod);
PodResult read_pod(const std::filesystem::path& basis_path);

}  // namespace strb
