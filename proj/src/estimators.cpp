#include "strb/estimators.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <numeric>

namespace strb {

PowerIteration inverse_norm(const NormMatrix& x, int max_iterations, double tolerance) {
  require(x.dim() > 0, "inverse_norm: empty norm matrix");
  PowerIteration out;
  Vector v = Vector::Ones(x.dim()) / std::sqrt(static_cast<double>(x.dim()));
  for (int k = 1; k <= max_iterations; ++k) {
    const Vector w = x.solve(v);
    const double lambda = w.norm();
    out.iterations = k;
    if (!std::isfinite(lambda) || lambda == 0.0) throw NumericalError("inverse_norm: breakdown");
    const bool done = std::abs(lambda - out.value) <= tolerance * lambda;
    out.value = lambda;
    v = w / lambda;
    if (done) {
      out.converged = true;
      break;
    }
  }
  return out;
}

NormFactors norm_factors(const NormMatrix& x_s, double delta) {
  const PowerIteration p = inverse_norm(x_s);
  return {p.value / delta, std::sqrt(p.value / delta), p.converged};
}

double spacetime_norm(const Matrix& states, const NormMatrix& x, double delta) {
  require(states.rows() == x.dim(), "spacetime_norm: row mismatch");
  const Matrix xu = x.matrix() * states;
  return std::sqrt(std::max(0.0, delta * states.cwiseProduct(xu).sum()));
}

double spacetime_dual_norm(const Vector& r, const NormMatrix& x, double delta) {
  const Index ns = x.dim();
  require(ns > 0 && r.size() % ns == 0, "spacetime_dual_norm: length is not a multiple of the block size");
  const Eigen::Map<const Matrix> blocks(r.data(), ns, r.size() / ns);
  const Matrix y = x.solve(blocks);
  return std::sqrt(std::max(0.0, blocks.cwiseProduct(y).sum() / delta));
}

namespace {

Vector step_value(const MdeimInterpolant& in, const Matrix& c, int n) {
  if (in.space_time()) return in.space_basis() * (c * in.time_basis().row(n - 1).transpose());
  return in.space_basis() * c.col(n - 1);
}

Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

// Relative energy beyond the retained modes.
double tail_ratio(const Vector& sigma, Index kept) {
  const double total = sigma.squaredNorm();
  if (total == 0.0 || kept >= sigma.size()) return 0.0;
  return std::sqrt(sigma.tail(sigma.size() - kept).squaredNorm() / total);
}

bool exact_on_training(const MdeimInterpolant& in) {
  if (is_functional(in.variant())) return false;
  if (tail_ratio(in.space_spectrum, in.n_s()) > 1e-12) return false;
  return !in.space_time() || tail_ratio(in.time_spectrum, in.n_t()) <= 1e-12;
}

}  // namespace

SpaceTimeSystem interpolated_system(const RomModel& model, const FullOrderModel& fom, const Parameter& mu,
                                    const OnlineCoefficients& c) {
  SpaceTimeSystem sys = fom.system(mu);
  const RomModel* m = &model;
  const OperatorPattern* pattern = &fom.assembler().pattern();
  const Index ns = fom.state_size();
  const Index np = fom.pressure_size();
  sys.stiffness = [m, pattern, c](int n) { return pattern->from_nonzeros(step_value(m->op, c.op, n)); };
  sys.rhs = [m, c, ns](int n) { return Vector(step_value(m->rhs, c.rhs, n).head(ns)); };
  if (sys.saddle_point())
    sys.divergence_rhs = [m, c, np](int n) { return Vector(step_value(m->rhs, c.rhs, n).tail(np)); };
  return sys;
}

double residual_estimator(const SpaceTimeSystem& interpolated, const NormMatrix& x_s, const Matrix& states,
                          const Matrix* pressures, const NormMatrix* x_p) {
  const Index ns = interpolated.state_size();
  const Index nu = ns * interpolated.steps;
  require(states.rows() == ns && states.cols() == interpolated.steps, "residual_estimator: state shape mismatch");
  if (!interpolated.saddle_point()) return spacetime_dual_norm(spacetime_residual(interpolated, flatten(states)), x_s,
                                                               interpolated.delta);
  require(pressures && x_p, "residual_estimator: saddle point needs pressures and their norm");
  const Vector p = flatten(*pressures);
  const Vector r = spacetime_residual(interpolated, flatten(states), &p);
  const double ru = spacetime_dual_norm(r.head(nu), x_s, interpolated.delta);
  const double rp = spacetime_dual_norm(r.tail(r.size() - nu), *x_p, interpolated.delta);
  return std::hypot(ru, rp);
}

double coercivity_constant(const Matrix& k_st, const Matrix& x_st) {
  require(k_st.rows() == k_st.cols() && k_st.rows() == x_st.rows() && x_st.rows() == x_st.cols(),
          "coercivity_constant: shape mismatch");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(x_st);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0)
    throw NumericalError("coercivity_constant: norm matrix is not positive definite");
  const Matrix w = eig.operatorInverseSqrt();
  const Vector sv = Eigen::BDCSVD<Matrix>(w * k_st * w).singularValues();
  return sv[sv.size() - 1];
}

double coercivity_estimate(const SpaceTimeSystem& system, const NormMatrix& x_s, Index cap) {
  const Index ns = system.state_size();
  const Index n = ns * system.steps;
  require(n <= cap, "coercivity_estimate: space-time size " + std::to_string(n) + " exceeds the cap " +
                        std::to_string(cap));
  const Matrix k = Matrix(spacetime_matrix(system));
  // X_st is block diagonal, so its inverse square root is too.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Matrix(x_s.matrix()) * system.delta);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0)
    throw NumericalError("coercivity_estimate: norm matrix is not positive definite");
  const Matrix w = eig.operatorInverseSqrt();
  Matrix s = Matrix::Zero(n, n);
  for (int b = 0; b < system.steps; ++b)
    for (int c = std::max(0, b - 1); c <= b; ++c) s.block(b * ns, c * ns, ns, ns) = w * k.block(b * ns, c * ns, ns, ns) * w;
  const Vector sv = Eigen::BDCSVD<Matrix>(s).singularValues();
  return sv[sv.size() - 1];
}

ErrorSplitting split_error(const SpaceTimeSystem& exact, const SpaceTimeSystem& interpolated, const Matrix& states) {
  const Vector u = flatten(states);
  ErrorSplitting s;
  s.reduced_basis = spacetime_residual(interpolated, u);
  s.interpolation = spacetime_residual(exact, u) - s.reduced_basis;
  return s;
}

double relative_error(const Matrix& reference, const Matrix& rom, const NormMatrix& x) {
  require(reference.rows() == rom.rows() && reference.cols() == rom.cols(), "relative_error: shape mismatch");
  const double ref = spacetime_norm(reference, x, 1.0);
  require(ref > 0.0, "relative_error: zero-norm reference");
  return spacetime_norm(Matrix(rom - reference), x, 1.0) / ref;
}

double speedup(const std::vector<double>& fom_ms, const std::vector<double>& rom_ms) {
  require(!fom_ms.empty() && !rom_ms.empty(), "speedup: empty timing list");
  const double f = std::accumulate(fom_ms.begin(), fom_ms.end(), 0.0) / static_cast<double>(fom_ms.size());
  const double r = std::accumulate(rom_ms.begin(), rom_ms.end(), 0.0) / static_cast<double>(rom_ms.size());
  return f / r;
}

ErrorReport estimate_errors(const RomModel& model, const FullOrderModel& fom, const Parameter& mu,
                            const OnlineResult& rom, const NormFactors& factors, const EstimateOptions& options) {
  const bool stokes = model.kind == ProblemKind::stokes;
  const NormMatrix& xs = fom.state_norm();
  const SpaceTimeSystem sys = interpolated_system(model, fom, mu, rom.mdeim);
  ErrorReport r;
  r.residual = stokes ? residual_estimator(sys, xs, rom.states, &rom.pressures, &fom.pressure_norm())
                      : residual_estimator(sys, xs, rom.states);
  const double u_norm = spacetime_norm(rom.states, xs, model.delta);

  r.exact_interpolation = exact_on_training(model.op) && exact_on_training(model.rhs);
  if (r.exact_interpolation) {
    double l_err = 0.0;
    double a_err = 0.0;
    for (int n = 1; n <= model.steps; ++n) {
      l_err += (fom.rhs(n, mu) - step_value(model.rhs, rom.mdeim.rhs, n)).squaredNorm();
      a_err = std::max(a_err, (fom.operator_nonzeros(n, mu) - step_value(model.op, rom.mdeim.op, n)).norm());
    }
    r.rhs_term = std::sqrt(l_err) * factors.inverse_sqrt;
    r.op_term = a_err * factors.inverse * u_norm;
  } else {
    r.rhs_term = model.rhs.error_bound() * factors.inverse_sqrt;
    r.op_term = model.op.error_bound() * factors.inverse * u_norm;
  }

  const Index st_size = fom.state_size() * fom.steps();
  if (options.coercivity && !stokes && st_size <= options.coercivity_cap) {
    r.beta = coercivity_estimate(fom.system(mu), xs, options.coercivity_cap);
    r.certified = true;
  }
  r.bound_total = (r.rhs_term + r.op_term + r.residual) / (r.certified ? r.beta : 1.0);

  if (options.reference) {
    const double ref_u = spacetime_norm(options.reference->states, xs, 1.0);
    const double ref_p = stokes ? spacetime_norm(options.reference->pressures, fom.pressure_norm(), 1.0) : 1.0;
    if (ref_u == 0.0 || ref_p == 0.0) {
      r.zero_reference = true;
    } else {
      r.E_u = relative_error(options.reference->states, rom.states, xs);
      if (stokes) r.E_p = relative_error(options.reference->pressures, rom.pressures, fom.pressure_norm());
    }
  }
  return r;
}

}  // namespace strb
