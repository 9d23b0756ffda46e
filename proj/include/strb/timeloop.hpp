#pragma once

#include "strb/fem.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace strb {

enum class ProblemKind { heat, stokes };

std::string to_string(ProblemKind kind);
ProblemKind parse_problem(const std::string& name);

/// Box with the benchmark boundary tags: heat has a Dirichlet inlet at x=0,
/// a Neumann outlet at x=L and homogeneous Neumann elsewhere; Stokes has the
/// inflow at x=0, no-slip walls at y=0 and y=H, no-penetration at z=0 and
/// z=W and a free outflow at x=L.
Mesh benchmark_mesh(ProblemKind kind, const std::array<double, 3>& lengths, const std::array<int, 3>& divisions);

/// Benchmark data on [1,10]^3. For Stokes `height` is the y-extent of the
/// channel entering the parabolic inflow profile.
ParametricData benchmark_data(ProblemKind kind, double T, int steps, double height = 1.0);
/// All data zero, diffusivity one.
ParametricData zero_data(ProblemKind kind, double T, int steps);

/// Backward Euler system on the free DOFs. Block n (1-based) of the space-time
/// operator maps V to (M/delta + A(t_n)) V_n - (M/delta) V_{n-1}. The initial
/// condition and the Dirichlet lifting are already folded into rhs(n).
/// Saddle-point systems add -B^T P_n to the state rows and the rows
/// B V_n = divergence_rhs(n).
struct SpaceTimeSystem {
  SparseMatrix mass;
  std::function<SparseMatrix(int)> stiffness;
  std::function<Vector(int)> rhs;
  SparseMatrix divergence;
  std::function<Vector(int)> divergence_rhs;
  double delta = 1.0;
  int steps = 1;

  bool saddle_point() const { return divergence.rows() > 0; }
  Index state_size() const { return mass.rows(); }
  Index pressure_size() const { return divergence.rows(); }
};

struct MarchResult {
  Matrix states;     // N_s x N_t
  Matrix pressures;  // N_p x N_t (saddle point only)
  std::vector<double> step_residuals;        // relative algebraic residual per step
  std::vector<double> divergence_residuals;  // |B U_n - c_n| / |U_n| per step
};

MarchResult be_solve_heat(const SpaceTimeSystem& system);
MarchResult be_solve_stokes(const SpaceTimeSystem& system);

/// L_st - K_st V_st evaluated block by block. For saddle-point systems pass
/// the pressures too; the result then stacks the state blocks (N_s N_t) and
/// the continuity blocks (N_p N_t).
Vector spacetime_residual(const SpaceTimeSystem& system, const Vector& v_st, const Vector* p_st = nullptr);
/// L_st (state blocks followed by continuity blocks).
Vector spacetime_rhs(const SpaceTimeSystem& system);
/// Explicit K_st of the state equation (small systems only).
SparseMatrix spacetime_matrix(const SpaceTimeSystem& system);

/// Discretized heat or Stokes problem: Q1 temperature, or Q2 velocity with
/// P0 pressure.
class FullOrderModel {
 public:
  FullOrderModel(ProblemKind kind, std::shared_ptr<const Mesh> mesh, ParametricData data);

  ProblemKind kind() const { return kind_; }
  const ParametricData& data() const { return data_; }
  const Assembler& assembler() const { return *assembler_; }
  const FESpace& space() const { return assembler_->space(); }
  int steps() const { return data_.steps; }
  double delta() const { return data_.delta(); }

  Index state_size() const { return space().num_free(); }
  Index pressure_size() const { return kind_ == ProblemKind::stokes ? space().num_cells() : 0; }
  /// Rows of the lifted right-hand side: state rows, then continuity rows.
  Index rhs_size() const { return state_size() + pressure_size(); }
  Index operator_size() const { return assembler_->num_nonzeros(); }

  const SparseMatrix& mass() const { return mass_; }
  const SparseMatrix& divergence() const { return divergence_; }
  const NormMatrix& state_norm() const { return state_norm_; }
  const NormMatrix& pressure_norm() const { return pressure_norm_; }

  /// Diffusivity at all quadrature points at t_n.
  Vector field(int n, const Parameter& mu) const;
  Vector operator_nonzeros(int n, const Parameter& mu) const;
  SparseMatrix stiffness(int n, const Parameter& mu) const;
  Vector rhs(int n, const Parameter& mu) const;

  Vector sampled_operator(int n, const Parameter& mu, const std::vector<Index>& nonzeros,
                          SampleStats* stats = nullptr) const;
  Vector sampled_rhs(int n, const Parameter& mu, const std::vector<Index>& rows, SampleStats* stats = nullptr) const;

  SpaceTimeSystem system(const Parameter& mu) const;

  /// Recorded operator data of one solve.
  struct Record {
    Matrix operators;  // N_z x N_t
    Matrix rhs;        // rhs_size x N_t
    Matrix fields;     // N_q x N_t
  };
  MarchResult solve(const Parameter& mu, Record* record = nullptr) const;

  /// Free values plus the Dirichlet lifting at t_n (full length).
  Vector full_state(const Vector& free, int n, const Parameter& mu) const;

 private:
  Vector cell_rhs(int cell, int n, const Parameter& mu) const;

  ProblemKind kind_;
  std::shared_ptr<const Mesh> mesh_;
  ParametricData data_;
  std::shared_ptr<const Assembler> assembler_;
  SparseMatrix mass_;
  SparseMatrix divergence_;
  NormMatrix state_norm_;
  NormMatrix pressure_norm_;
  std::vector<std::vector<int>> neumann_facets_;  // per cell
};

/// Snapshots of a parameter sweep in (s, t, p) layout. Operator, rhs and field
/// snapshots are kept for the first `system_count` parameters only.
struct SnapshotSet {
  std::vector<Parameter> parameters;
  Hypermatrix states;
  Hypermatrix pressures;
  Hypermatrix operators;
  Hypermatrix rhs;
  Hypermatrix fields;
  std::vector<double> fom_ms;
  std::vector<std::pair<std::size_t, std::string>> failures;
  std::uint64_t config_hash = 0;

  std::size_t count() const { return parameters.size(); }
  std::size_t system_count() const { return operators.rank() == 3 ? operators.dims()[2] : 0; }
};

/// Runs the model for every parameter in order. A failing parameter is
/// recorded and skipped; the others are still processed.
SnapshotSet generate_snapshots(const FullOrderModel& model, const std::vector<Parameter>& parameters,
                               std::size_t system_count, std::uint64_t config_hash);

/// Directory with one hypermatrix binary per array and manifest.json.
void write_snapshots(const std::filesystem::path& dir, const SnapshotSet& set);
SnapshotSet read_snapshots(const std::filesystem::path& dir);

}  // namespace strb
