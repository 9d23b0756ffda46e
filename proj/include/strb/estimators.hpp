#pragma once

#include "strb/strb.hpp"

#include <limits>
#include <vector>

namespace strb {

/// Largest eigenvalue of X^{-1} by power iteration with Cholesky solves.
struct PowerIteration {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};
PowerIteration inverse_norm(const NormMatrix& x, int max_iterations = 200, double tolerance = 1e-8);

/// |X_st^{-1}|_2 and |X_st^{-1/2}|_2 for X_st = blockdiag(delta X_s).
struct NormFactors {
  double inverse = 0.0;
  double inverse_sqrt = 0.0;
  bool converged = false;
};
NormFactors norm_factors(const NormMatrix& x_s, double delta);

/// sqrt(sum_n delta v_n^T X v_n) for the columns v_n of `states`.
double spacetime_norm(const Matrix& states, const NormMatrix& x, double delta);
/// sqrt(sum_n r_n^T X^{-1} r_n / delta) for the N_s-blocks r_n of `r`.
double spacetime_dual_norm(const Vector& r, const NormMatrix& x, double delta);

/// The space-time system with the interpolated operators and right-hand
/// sides of an online solve in place of the assembled ones.
SpaceTimeSystem interpolated_system(const RomModel& model, const FullOrderModel& fom, const Parameter& mu,
                                    const OnlineCoefficients& c);

/// |L^ - K^ Phi_st U^|_{X_st^{-1}} with the interpolated system. For saddle
/// points the continuity rows are measured in the dual of blockdiag(delta X_p).
double residual_estimator(const SpaceTimeSystem& interpolated, const NormMatrix& x_s, const Matrix& states,
                          const Matrix* pressures = nullptr, const NormMatrix* x_p = nullptr);

/// Smallest singular value of X_st^{-1/2} K_st X_st^{-1/2} (dense, capped size).
double coercivity_constant(const Matrix& k_st, const Matrix& x_st);
double coercivity_estimate(const SpaceTimeSystem& system, const NormMatrix& x_s, Index cap = 512);

/// Splitting of K_st (U - U^) into the interpolation part E^M = L - L^ +
/// (K^ - K) U^ and the reduced-basis part E^RB = L^ - K^ U^.
struct ErrorSplitting {
  Vector interpolation;
  Vector reduced_basis;
};
ErrorSplitting split_error(const SpaceTimeSystem& exact, const SpaceTimeSystem& interpolated, const Matrix& states);

/// Relative space-time X-norm error of `rom` against `reference`. Throws on a
/// zero reference.
double relative_error(const Matrix& reference, const Matrix& rom, const NormMatrix& x);

double speedup(const std::vector<double>& fom_ms, const std::vector<double>& rom_ms);

struct ErrorReport {
  static constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  double E_u = nan;
  double E_p = nan;
  double residual = 0.0;
  double rhs_term = 0.0;  // chi^l eps (L-scale) |X^{-1/2}|
  double op_term = 0.0;   // chi^a eps (A-scale) |X^{-1}| |U^|_X
  double beta = nan;
  bool certified = false;       // beta computed exactly
  bool zero_reference = false;  // reference norm vanished, errors undefined
  bool exact_interpolation = false;  // measured interpolation errors in the terms
  /// beta^{-1} (terms); with beta unavailable the terms are summed with beta = 1.
  double bound_total = 0.0;
};

struct EstimateOptions {
  const MarchResult* reference = nullptr;  // high-fidelity solution for E^u, E^p
  bool coercivity = false;                 // dense beta when within the size cap
  Index coercivity_cap = 512;
};

ErrorReport estimate_errors(const RomModel& model, const FullOrderModel& fom, const Parameter& mu,
                            const OnlineResult& rom, const NormFactors& factors, const EstimateOptions& options = {});

}  // namespace strb
