#pragma once

#include "strb/mdeim.hpp"
#include "strb/timeloop.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace strb {

/// Space basis (X-orthonormal) and time basis (orthonormal) of one variable.
struct StateBasis {
  Matrix space;
  Matrix time;
  Vector space_spectrum;
  Vector time_spectrum;
  double snapshot_norm = 0.0;    // |H U_(s, t mu)|_F
  double compressed_norm = 0.0;  // |U~_(t, s^ mu)|_F

  Index n_s() const { return space.cols(); }
  Index n_t() const { return time.cols(); }
  Index n_st() const { return n_s() * n_t(); }
  bool empty() const { return space.size() == 0; }
};

/// ST-HOSVD with the X-weighted space stage.
StateBasis build_state_basis(const Hypermatrix& snapshots, double eps, const NormMatrix& x);

/// Appends X^{-1} B^T phi_p for every pressure space mode to the velocity
/// space basis and the pressure time basis to the velocity time basis, each
/// re-orthonormalized (space in X, time in l2). Candidates whose orthogonal
/// part is below 1e-10 of their norm are dropped.
StateBasis enrich_supremizers(const StateBasis& velocity, const StateBasis& pressure, const SparseMatrix& b,
                              const NormMatrix& x);

/// Parameter-independent reduced blocks of one ST-MDEIM-RB method. Reduced
/// space-time vectors use index k_t * n_s + k_s (time blocks of space modes).
struct RomModel {
  ProblemKind kind = ProblemKind::heat;
  MdeimVariant method = MdeimVariant::STD;
  double eps = 0.0;
  double delta = 1.0;
  int steps = 1;
  std::uint64_t config_hash = 0;

  StateBasis velocity;  // the state for heat
  StateBasis pressure;  // Stokes only
  MdeimInterpolant op;
  MdeimInterpolant rhs;

  Matrix mass;   // Phi_s^T M Phi_s
  Matrix shift;  // Phi_t^T S Phi_t, S the unit subdiagonal
  std::vector<Matrix> op_space;   // Phi_s^T mat(Phi_a[:, q]) Phi_s per operator space mode
  std::vector<Matrix> op_time;    // space-time: Phi_t^T diag(Phi_a_t[:, q_t]) Phi_t
  std::vector<Matrix> step_outer; // space-only: Phi_t[n, :]^T Phi_t[n, :] per step
  Matrix rhs_space;   // Phi_s^T Phi_l (state rows)
  Matrix rhs_space_p; // Phi_ps^T Phi_l (continuity rows)
  Matrix rhs_time;    // space-time: Phi_t^T Phi_l_t
  Matrix rhs_time_p;  // space-time: Phi_pt^T Phi_l_t
  Matrix divergence;  // continuity rows against velocity, n_st^p x n_st^u
  Matrix gradient;    // momentum rows against pressure, n_st^u x n_st^p

  Index state_dim() const { return velocity.n_st(); }
  Index pressure_dim() const { return kind == ProblemKind::stokes ? pressure.n_st() : 0; }
  Index dim() const { return state_dim() + pressure_dim(); }
};

/// Precomputes the reduced blocks. The rhs interpolant covers the state rows
/// followed by the continuity rows for Stokes.
RomModel galerkin_compress(const FullOrderModel& fom, MdeimVariant method, double eps, StateBasis velocity,
                           StateBasis pressure, MdeimInterpolant op, MdeimInterpolant rhs,
                           std::uint64_t config_hash);

/// Offline phase on one snapshot set: state bases from all parameters,
/// interpolants from the parameters with system snapshots. FUN reads the
/// field snapshots for the operator; the right-hand side of FUN and STFUN
/// uses the algebraic STD and ST interpolant.
RomModel build_rom(const FullOrderModel& fom, const SnapshotSet& snapshots, MdeimVariant method, double eps,
                   bool supremizers = true);

/// Online MDEIM coefficients. Space-only: n_a x N_t (one column per step).
/// Space-time: n_s^a x n_t^a coefficient matrix.
struct OnlineCoefficients {
  Matrix op;
  Matrix rhs;
};

struct OnlineStats {
  Index entries_sampled = 0;  // operator and rhs entries assembled
  Index cells_touched = 0;
  Index coefficient_dim = 0;  // operator coefficients solved for
  Index reduced_dim = 0;
};

OnlineCoefficients sample_coefficients(const RomModel& model, const FullOrderModel& fom, const Parameter& mu,
                                       OnlineStats* stats = nullptr);
/// Reduced left-hand side (saddle point for Stokes: state block rows first).
Matrix reduced_lhs(const RomModel& model, const OnlineCoefficients& c);
Vector reduced_rhs(const RomModel& model, const OnlineCoefficients& c);

struct OnlineResult {
  Vector coefficients;           // reduced state
  Vector pressure_coefficients;  // Stokes only
  Matrix states;                 // expanded free-DOF states, N_s x N_t
  Matrix pressures;              // expanded pressures, N_p x N_t
  OnlineCoefficients mdeim;
  OnlineStats stats;
  double condition = 0.0;  // reduced system, only when requested
};

OnlineResult online_solve(const RomModel& model, const FullOrderModel& fom, const Parameter& mu,
                          bool with_condition = false);

/// Phi_s mat(c) Phi_t^T with mat(c) of size n_s x n_t.
Matrix expand(const StateBasis& basis, const Vector& coefficients);
/// Phi_st^T v_st for a space-time vector with N_s-blocks per step.
Vector project(const StateBasis& basis, const Vector& v_st);

/// Directory with one hypermatrix binary per block and manifest.json.
void write_rom(const std::filesystem::path& dir, const RomModel& model);
RomModel read_rom(const std::filesystem::path& dir);

}  // namespace strb
