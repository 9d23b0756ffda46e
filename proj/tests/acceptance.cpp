// One PASS/FAIL line per acceptance criterion.
#include "support.hpp"
#include "strb/harness.hpp"

#include <CLI11.hpp>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

using namespace strb;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what + (detail.empty() ? "" : "; " + detail);
    pass = pass && ok;
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::vector<Parameter> draw(testing::Rng& rng, int count) {
  std::vector<Parameter> p;
  for (int i = 0; i < count; ++i) p.push_back({rng.uniform(1, 10), rng.uniform(1, 10), rng.uniform(1, 10)});
  return p;
}

Matrix orthonormal(testing::Rng& rng, Index r, Index c) {
  Eigen::HouseholderQR<Matrix> qr(rng.matrix(r, c));
  return qr.householderQ() * Matrix::Identity(r, c);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------------------

Outcome tpod_optimality() {
  Outcome o;
  testing::Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Index r = rng.integer(10, 200), c = rng.integer(10, 200);
    const Index m = std::min(r, c);
    Vector s(m);
    const double decay = rng.uniform(2.0, 6.0);
    for (Index i = 0; i < m; ++i) s[i] = std::pow(10.0, -decay * static_cast<double>(i) / static_cast<double>(m));
    const Matrix u = orthonormal(rng, r, m) * s.asDiagonal() * orthonormal(rng, c, m).transpose();
    const double eps = std::array{1e-1, 3e-2, 1e-2}[static_cast<std::size_t>(trial % 3)];
    const PodResult pod = spod(u, eps);
    const Vector sigma = Eigen::BDCSVD<Matrix>(u).singularValues();
    const double tail = sigma.tail(sigma.size() - pod.rank).squaredNorm();
    o.require(pod.rank < m, "no truncation");
    const double err = (u - pod.basis * (pod.basis.transpose() * u)).squaredNorm();
    worst = std::max(worst, std::abs(err - tail) / tail);
    o.require(tail <= eps * eps * sigma.squaredNorm() * (1 + 1e-12), "energy criterion violated");
  }
  o.require(worst <= 1e-9, "tail mismatch");
  o.note("max relative |err - tail| " + sci(worst));
  return o;
}

double st_error_sq(const Hypermatrix& u, const Matrix& phi_s, const Matrix& phi_t) {
  double e = 0.0;
  for (std::size_t k = 0; k < u.dims()[2]; ++k) {
    const Matrix slice = u.slice(k);
    e += (slice - phi_s * (phi_s.transpose() * slice * phi_t) * phi_t.transpose()).squaredNorm();
  }
  return e;
}

Outcome st_hosvd_bound() {
  Outcome o;
  testing::Rng rng(102);
  double worst_ratio = 0.0;
  double worst_corollary = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto ns = static_cast<std::size_t>(rng.integer(4, 32)), nt = static_cast<std::size_t>(rng.integer(3, 16)),
               np = static_cast<std::size_t>(rng.integer(2, 8));
    Hypermatrix u = rng.hypermatrix(ns, nt, np);
    // a few dominant separable terms on top of the noise
    for (int term = 0; term < 3; ++term) {
      const Vector a = rng.vector(static_cast<Index>(ns)), b = rng.vector(static_cast<Index>(nt)),
                   c = rng.vector(static_cast<Index>(np));
      for (std::size_t k = 0; k < np; ++k)
        for (std::size_t j = 0; j < nt; ++j)
          for (std::size_t i = 0; i < ns; ++i)
            u(i, j, k) = 0.05 * u(i, j, k) + std::pow(10.0, -term) * 5 * a[static_cast<Index>(i)] *
                                                  b[static_cast<Index>(j)] * c[static_cast<Index>(k)];
    }
    for (double eps : {1e-1, 1e-2}) {
      const StHosvd h = st_hosvd(u, eps);
      const double err = st_error_sq(u, h.space.basis, h.time.basis);
      const double tails = h.space.tail_energy() + h.time.tail_energy();
      const double roundoff = 1e-14 * u.matrix().squaredNorm();
      o.require(err <= tails + roundoff, "sequential bound violated");
      if (tails > 0) worst_ratio = std::max(worst_ratio, err / tails);
      const double scale = u.matrix().squaredNorm() + h.compressed_norm * h.compressed_norm;
      o.require(err <= eps * eps * scale, "tolerance form violated");
      worst_corollary = std::max(worst_corollary, err / (eps * eps * scale));
    }
  }
  o.note("max err/tails " + sci(worst_ratio) + ", max err/(eps^2 scale) " + sci(worst_corollary));
  return o;
}

struct HeatSet {
  FullOrderModel model;
  SnapshotSet train;
  SnapshotSet test;
};

HeatSet heat_set(std::array<int, 3> divisions, int steps, int n_train, int n_test, std::uint64_t seed) {
  auto mesh = std::make_shared<const Mesh>(benchmark_mesh(ProblemKind::heat, {4, 1.5, 0.2}, divisions));
  FullOrderModel m(ProblemKind::heat, mesh, benchmark_data(ProblemKind::heat, 0.3, steps));
  testing::Rng rng(seed);
  const auto train = draw(rng, n_train), test = draw(rng, n_test);
  SnapshotSet tr = generate_snapshots(m, train, train.size(), 0);
  SnapshotSet te = generate_snapshots(m, test, test.size(), 0);
  return {std::move(m), std::move(tr), std::move(te)};
}

// Online view of one (N x N_t) slice: sampled entries in, all steps out.
Matrix approximate(const MdeimInterpolant& in, const Matrix& slice) {
  if (in.space_time()) {
    Vector s(in.n_s() * in.n_t());
    for (Index is = 0; is < in.n_s(); ++is)
      for (Index it = 0; it < in.n_t(); ++it)
        s[is * in.n_t() + it] = slice(in.space_samples()[static_cast<std::size_t>(is)],
                                      in.time_samples()[static_cast<std::size_t>(it)]);
    return in.reconstruct_all(in.coefficients(s));
  }
  Matrix s(in.n_s(), slice.cols());
  for (Index is = 0; is < in.n_s(); ++is) s.row(is) = slice.row(in.space_samples()[static_cast<std::size_t>(is)]);
  return in.reconstruct_steps(in.step_coefficients(s));
}

double sample_mismatch(const MdeimInterpolant& in, const Matrix& slice) {
  const Matrix approx = approximate(in, slice);
  double worst = 0.0;
  for (Index is : in.space_samples()) {
    if (in.space_time()) {
      for (Index it : in.time_samples()) worst = std::max(worst, std::abs(approx(is, it) - slice(is, it)));
    } else {
      worst = std::max(worst, (approx.row(is) - slice.row(is)).cwiseAbs().maxCoeff());
    }
  }
  return worst / slice.cwiseAbs().maxCoeff();
}

FieldForm stiffness_form(const Assembler& a) {
  return [&a](std::span<const double> x) { return a.stiffness_nonzeros(x); };
}

Outcome mdeim_interpolation() {
  Outcome o;
  const HeatSet h = heat_set({8, 3, 1}, 8, 12, 3, 103);
  const Assembler& a = h.model.assembler();
  const std::vector<MdeimInterpolant> all{
      build_algebraic(h.train.operators, 1e-3, MdeimVariant::STD),
      build_algebraic(h.train.operators, 1e-3, MdeimVariant::ST),
      build_functional(h.train.fields, stiffness_form(a), 1e-3, MdeimVariant::FUN).interpolant,
      build_functional(h.train.fields, stiffness_form(a), 1e-3, MdeimVariant::STFUN).interpolant};
  testing::Rng rng(3);
  double worst = 0.0;
  for (const auto& in : all) {
    for (std::size_t k = 0; k < h.test.count(); ++k) worst = std::max(worst, sample_mismatch(in, h.test.operators.slice(k)));
    // out of range: noise, and an operator far outside the parameter box
    worst = std::max(worst, sample_mismatch(in, rng.matrix(h.train.operators.dims()[0], h.train.operators.dims()[1])));
    const Matrix far = 40.0 * h.test.operators.slice(0) - 3.0 * h.train.operators.slice(1);
    worst = std::max(worst, sample_mismatch(in, far));
  }
  o.require(worst <= 1e-11, "interpolation condition");
  o.note("max sample mismatch " + sci(worst));

  // Affine families: operators mu1 A0 + mu2 A1, fields mu1 + mu2 x.
  const std::size_t nq = static_cast<std::size_t>(a.num_quadrature_points());
  std::vector<double> ones(nq, 1.0), ramp(nq);
  for (std::size_t q = 0; q < nq; ++q) ramp[q] = 1.0 + a.quadrature_points()[q][0];
  const Vector a0 = a.stiffness_nonzeros(ones), a1 = a.stiffness_nonzeros(ramp);
  const std::size_t nt = 6, np = 6;
  Hypermatrix ops({"s", "t", "p"}, {static_cast<std::size_t>(a0.size()), nt, np});
  Hypermatrix fields({"q", "t", "p"}, {nq, nt, np});
  auto theta = [](double mu, double t) { return std::array{mu, std::sin(3.0 * t) / mu}; };
  for (std::size_t k = 0; k < np; ++k)
    for (std::size_t j = 0; j < nt; ++j) {
      const auto c = theta(1.0 + 1.5 * static_cast<double>(k), 0.1 * static_cast<double>(j + 1));
      for (Index i = 0; i < a0.size(); ++i) ops(static_cast<std::size_t>(i), j, k) = c[0] * a0[i] + c[1] * a1[i];
      for (std::size_t q = 0; q < nq; ++q) fields(q, j, k) = c[0] * ones[q] + c[1] * ramp[q];
    }
  Matrix held(a0.size(), static_cast<Index>(nt));
  for (std::size_t j = 0; j < nt; ++j) {
    const auto c = theta(4.7, 0.1 * static_cast<double>(j + 1));
    held.col(static_cast<Index>(j)) = c[0] * a0 + c[1] * a1;
  }
  double affine_worst = 0.0;
  for (MdeimVariant v : {MdeimVariant::STD, MdeimVariant::ST, MdeimVariant::FUN, MdeimVariant::STFUN}) {
    const MdeimInterpolant in = is_functional(v) ? build_functional(fields, stiffness_form(a), 1e-8, v).interpolant
                                                 : build_algebraic(ops, 1e-8, v);
    o.require(in.n_s() == 2, to_string(v) + " n_s^a = " + std::to_string(in.n_s()) + " for 2 affine terms");
    affine_worst = std::max(affine_worst, (approximate(in, held) - held).norm() / held.norm());
  }
  o.require(affine_worst <= 1e-12, "affine reconstruction");
  o.note("affine relative error " + sci(affine_worst));
  return o;
}

Outcome mdeim_bounds() {
  Outcome o;
  const HeatSet h = heat_set({28, 10, 3}, 20, 30, 5, 104);
  const auto form = stiffness_form(h.model.assembler());
  double worst = 0.0;
  double drift = 0.0;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    for (MdeimVariant v : {MdeimVariant::STD, MdeimVariant::ST, MdeimVariant::FUN, MdeimVariant::STFUN}) {
      MdeimInterpolant in;
      if (is_functional(v)) {
        const FunctionalMdeim fun = build_functional(h.train.fields, form, eps, v);
        const double held_out = fit_assembler_constant(form, h.test.fields, fun.fields.field_space.basis);
        const double c = fun.interpolant.assembler_constant;
        drift = std::max(drift, std::abs(held_out - c) / c);
        in = fun.interpolant;
      } else {
        in = build_algebraic(h.train.operators, eps, v);
      }
      for (std::size_t k = 0; k < h.test.count(); ++k) {
        const Matrix s = h.test.operators.slice(k);
        const double ratio = (approximate(in, s) - s).norm() / in.error_bound();
        worst = std::max(worst, ratio);
      }
    }
  }
  o.require(worst <= 1.0, "error exceeds bound");
  o.require(drift <= 0.05, "assembler constant drifts " + sci(drift));
  o.note("max error/bound " + sci(worst) + ", assembler constant drift " + sci(drift));
  return o;
}

Vector row_major(const Matrix& c) {
  Vector out(c.size());
  for (Index i = 0; i < c.rows(); ++i)
    for (Index j = 0; j < c.cols(); ++j) out[i * c.cols() + j] = c(i, j);
  return out;
}

Vector step_value(const MdeimInterpolant& in, const Matrix& c, int n) {
  return in.space_time() ? in.reconstruct(row_major(c), n) : in.reconstruct(c.col(n - 1));
}

Outcome oracle_equivalence() {
  Outcome o;
  const HeatSet h = heat_set({4, 2, 1}, 6, 10, 2, 105);
  const FullOrderModel& fom = h.model;
  const Index ns = fom.state_size();
  const int nt = fom.steps();
  o.require(ns <= 30 && nt <= 8, "toy too large");
  double worst_lhs = 0.0, worst_rhs = 0.0, worst_orth = 0.0;
  for (MdeimVariant v : {MdeimVariant::STD, MdeimVariant::ST, MdeimVariant::FUN, MdeimVariant::STFUN}) {
    const RomModel rom = build_rom(fom, h.train, v, 1e-3);
    const Matrix phi = kron(rom.velocity.time, rom.velocity.space);
    for (const Parameter& mu : h.test.parameters) {
      const OnlineCoefficients c = sample_coefficients(rom, fom, mu);
      const Matrix m = Matrix(fom.mass()) / fom.delta();
      Matrix k = Matrix::Zero(ns * nt, ns * nt);
      Vector l(ns * nt);
      for (int n = 1; n <= nt; ++n) {
        k.block((n - 1) * ns, (n - 1) * ns, ns, ns) =
            m + Matrix(fom.assembler().pattern().from_nonzeros(step_value(rom.op, c.op, n)));
        if (n > 1) k.block((n - 1) * ns, (n - 2) * ns, ns, ns) = -m;
        l.segment((n - 1) * ns, ns) = step_value(rom.rhs, c.rhs, n).head(ns);
      }
      const Matrix k_hat = phi.transpose() * k * phi;
      const Vector l_hat = phi.transpose() * l;
      worst_lhs = std::max(worst_lhs, (reduced_lhs(rom, c) - k_hat).norm() / k_hat.norm());
      worst_rhs = std::max(worst_rhs, (reduced_rhs(rom, c) - l_hat).norm() / l_hat.norm());
      const OnlineResult r = online_solve(rom, fom, mu);
      const Vector u = Eigen::Map<const Vector>(r.states.data(), r.states.size());
      worst_orth = std::max(worst_orth, (phi.transpose() * (l - k * u)).norm() / l_hat.norm());
    }
  }
  o.require(worst_lhs <= 1e-10 && worst_rhs <= 1e-10, "projection mismatch");
  o.require(worst_orth <= 1e-9, "Galerkin orthogonality");
  o.note("lhs " + sci(worst_lhs) + ", rhs " + sci(worst_rhs) + ", orthogonality " + sci(worst_orth));
  return o;
}

RunConfig heat_desk(const fs::path& out) {
  RunConfig c;
  c.n_train = 40;
  c.n_mdeim = 30;
  c.n_online = 5;
  c.out = out;
  return c;
}

// Desk heat rows are shared by the decay and cost-surrogate criteria.
const std::vector<ReportRow>& heat_desk_rows(const fs::path& scratch) {
  static const std::vector<ReportRow> rows = [&] {
    const RunConfig c = heat_desk(scratch / "heat_desk");
    run_offline(c);
    return run_online(c);
  }();
  return rows;
}

Outcome eps_decay(const fs::path& scratch) {
  Outcome o;
  const auto& rows = heat_desk_rows(scratch);
  std::map<std::pair<std::string, double>, double> worst;
  for (const auto& r : rows) {
    o.require(std::isfinite(r.E_u), "non-finite error");
    auto& w = worst[{r.method, r.eps}];
    w = std::max(w, r.E_u);
  }
  std::string ratios;
  for (const auto& [key, e] : worst) {
    o.require(e <= 50.0 * key.second, key.first + " eps " + sci(key.second) + " E_u " + sci(e));
    ratios += " " + key.first + "@" + sci(key.second) + "=" + sci(e / key.second);
  }
  for (const char* m : {"STD", "ST", "FUN", "STFUN"}) {
    o.require(worst.count({m, 1e-2}) && worst.count({m, 1e-4}), std::string("missing rows for ") + m);
    o.require(worst[{m, 1e-4}] < worst[{m, 1e-2}], std::string("no decay for ") + m);
  }
  o.note("max E_u/eps:" + ratios);
  return o;
}

Outcome cost_ordering(const fs::path& scratch) {
  Outcome o;
  const auto& rows = heat_desk_rows(scratch);
  const RunConfig c = heat_desk(scratch);
  o.require(c.steps >= 20, "N_t < 20");
  std::string notes;
  for (double eps : c.eps) {
    const ReportRow* std_row = nullptr;
    const ReportRow* st_row = nullptr;
    for (const auto& r : rows)
      if (r.eps == eps && r.mu_index == 0) {
        if (r.method == "STD") std_row = &r;
        if (r.method == "ST") st_row = &r;
      }
    o.require(std_row && st_row, "missing rows");
    if (!std_row || !st_row) break;
    o.require(3 * st_row->entries_sampled <= std_row->entries_sampled, "entries_sampled ST > STD/3 at " + sci(eps));
    o.require(st_row->n_s_a * st_row->n_t_a < c.steps * st_row->n_s_a,
              "n_st^a >= N_t n_s^a at " + sci(eps));
    notes += " eps " + sci(eps) + ": entries " + std::to_string(st_row->entries_sampled) + " vs " +
             std::to_string(std_row->entries_sampled) + ", n_st^a " + std::to_string(st_row->n_s_a * st_row->n_t_a) +
             " vs N_t n_s^a " + std::to_string(c.steps * st_row->n_s_a) + ", speedup ST " +
             sci(st_row->speedup) + " STD " + sci(std_row->speedup) + ";";
  }
  o.note(notes);
  return o;
}

Outcome stokes_desk() {
  Outcome o;
  RunConfig c;
  c.problem = ProblemKind::stokes;
  c.divisions = {16, 6, 1};
  c.T = 0.15;
  c.steps = 16;
  c.n_train = 40;
  c.n_mdeim = 30;
  c.n_online = 5;
  c.seed = 7;
  const FullOrderModel fom = make_model(c);
  o.require(fom.state_size() <= 5000, "more than 5k velocity dofs");
  const ParameterSets sets = draw_parameter_sets(c);
  const SnapshotSet snaps = generate_snapshots(fom, sets.train, c.n_mdeim, 0);
  o.require(snaps.failures.empty(), "snapshot failures");
  std::vector<MarchResult> reference;
  for (const auto& mu : sets.test) reference.push_back(fom.solve(mu));
  const NormFactors nf = norm_factors(fom.state_norm(), fom.delta());
  std::string notes = std::to_string(fom.state_size()) + " velocity dofs;";
  for (double eps : {1e-2, 1e-3}) {
    for (MdeimVariant v : {MdeimVariant::FUN, MdeimVariant::STFUN}) {
      const RomModel with = build_rom(fom, snaps, v, eps, true);
      const RomModel without = build_rom(fom, snaps, v, eps, false);
      double eu = 0.0, ep = 0.0, cond_with = 0.0, cond_without = 0.0;
      for (std::size_t i = 0; i < sets.test.size(); ++i) {
        const OnlineResult r = online_solve(with, fom, sets.test[i], true);
        cond_with = std::max(cond_with, r.condition);
        EstimateOptions opt;
        opt.reference = &reference[i];
        const ErrorReport e = estimate_errors(with, fom, sets.test[i], r, nf, opt);
        eu = std::max(eu, e.E_u);
        ep = std::max(ep, e.E_p);
        try {
          cond_without = std::max(cond_without, online_solve(without, fom, sets.test[i], true).condition);
        } catch (const NumericalError&) {
          cond_without = std::numeric_limits<double>::infinity();
        }
      }
      const std::string tag = to_string(v) + "@" + sci(eps);
      o.require(eu <= 50 * eps && ep <= 50 * eps, tag + " E_u " + sci(eu) + " E_p " + sci(ep));
      o.require(cond_with < 1e8, tag + " condition " + sci(cond_with));
      notes += " " + tag + ": E_u/eps " + sci(eu / eps) + " E_p/eps " + sci(ep / eps) + " cond " + sci(cond_with) +
               " (without supremizers " + sci(cond_without) + ");";
    }
  }
  o.note(notes);
  return o;
}

Outcome bound_validity() {
  Outcome o;
  const HeatSet h = heat_set({4, 2, 1}, 8, 16, 3, 109);
  const FullOrderModel& m = h.model;
  const NormFactors nf = norm_factors(m.state_norm(), m.delta());
  double worst_ratio = 0.0, worst_spread = 0.0;
  for (MdeimVariant v : {MdeimVariant::STD, MdeimVariant::ST, MdeimVariant::FUN, MdeimVariant::STFUN}) {
    std::vector<std::vector<double>> scaled(h.test.count());
    for (double eps : {1e-2, 1e-3, 1e-4}) {
      const RomModel rom = build_rom(m, h.train, v, eps);
      for (std::size_t i = 0; i < h.test.count(); ++i) {
        const Parameter& mu = h.test.parameters[i];
        const MarchResult hf = m.solve(mu);
        const OnlineResult r = online_solve(rom, m, mu);
        EstimateOptions opt;
        opt.reference = &hf;
        opt.coercivity = true;
        const ErrorReport e = estimate_errors(rom, m, mu, r, nf, opt);
        o.require(e.certified, "beta not computed");
        const double actual = spacetime_norm(Matrix(hf.states - r.states), m.state_norm(), m.delta());
        worst_ratio = std::max(worst_ratio, actual / e.bound_total);
        scaled[i].push_back(e.bound_total / eps);
      }
    }
    for (const auto& s : scaled) {
      const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
      worst_spread = std::max(worst_spread, *hi / *lo);
    }
  }
  o.require(worst_ratio <= 1.0, "error exceeds bound");
  o.require(worst_spread <= 3.0, "bound not linear in eps");
  o.note("max error/bound " + sci(worst_ratio) + ", max spread of bound/eps " + sci(worst_spread));
  return o;
}

std::vector<ReportRow> untimed(std::vector<ReportRow> rows) {
  for (auto& r : rows) r.fom_ms = r.rom_online_ms = r.speedup = 0.0;
  return rows;
}

std::string report_text(const std::vector<ReportRow>& rows) {
  std::ostringstream s;
  write_report(s, rows);
  return s.str();
}

Outcome determinism(const fs::path& scratch) {
  Outcome o;
  RunConfig c;
  c.divisions = {8, 3, 1};
  c.steps = 8;
  c.n_train = 10;
  c.n_mdeim = 8;
  c.n_online = 3;
  c.eps = {1e-2, 1e-3};
  RunConfig d = c;
  c.out = scratch / "determinism_a";
  d.out = scratch / "determinism_b";
  run_offline(c);
  const auto a = run_online(c);
  run_offline(d);
  const auto b = run_online(d);
  o.require(report_text(untimed(a)) == report_text(untimed(b)), "reports differ");

  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(c.out)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), c.out);
    const std::string name = rel.filename().string();
    if (name == "report.csv" || name == "online.json" || name == "offline.json" || name == "manifest.json") continue;
    o.require(slurp(entry.path()) == slurp(d.out / rel), "artifact differs: " + rel.string());
    ++compared;
  }
  o.require(compared > 0, "no artifacts");

  // Round trips of snapshots and bases.
  const SnapshotSet s = read_snapshots(snapshot_dir(c));
  const fs::path copy = scratch / "determinism_copy";
  write_snapshots(copy, s);
  for (const char* f : {"states.bin", "operators.bin", "rhs.bin", "fields.bin"})
    o.require(slurp(copy / f) == slurp(snapshot_dir(c) / f), std::string("snapshot round trip: ") + f);
  const PodResult pod = spod(s.states.matrix(), 1e-3);
  write_pod(copy / "pod.bin", pod);
  const PodResult back = read_pod(copy / "pod.bin");
  o.require(back.basis == pod.basis && back.singular_values == pod.singular_values && back.rank == pod.rank,
            "basis round trip");
  const RomModel rom = read_rom(rom_dir(c, MdeimVariant::ST, 1e-3));
  o.require(rom.velocity.space == read_rom(rom_dir(d, MdeimVariant::ST, 1e-3)).velocity.space, "basis differs");
  o.note(std::to_string(compared) + " artifacts bit-identical, " + std::to_string(a.size()) + " report rows");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  std::string scratch = (fs::temp_directory_path() / "strb_acceptance").string();
  app.add_option("--only", only, "criteria to run (1-10)")->delimiter(',');
  app.add_option("--scratch", scratch, "work directory");
  CLI11_PARSE(app, argc, argv);
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  const fs::path dir = scratch;

  struct Criterion {
    std::string name;
    double limit_s;  // 0: no runtime limit
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"TPOD optimality", 10, tpod_optimality},
      {"ST-HOSVD error bound", 10, st_hosvd_bound},
      {"MDEIM interpolation condition", 30, mdeim_interpolation},
      {"MDEIM error bounds", 120, mdeim_bounds},
      {"reduced-system oracle equivalence", 30, oracle_equivalence},
      {"heat desk eps decay", 600, [&] { return eps_decay(dir); }},
      {"Stokes desk benchmark", 1200, stokes_desk},
      {"cost-surrogate ordering", 0, [&] { return cost_ordering(dir); }},
      {"a posteriori bound validity", 120, bound_validity},
      {"determinism and persistence", 0, [&] { return determinism(dir); }},
  };
  std::clog.setstate(std::ios::failbit);
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = criteria[i].run();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (criteria[i].limit_s > 0) r.require(s < criteria[i].limit_s, "runtime over " + sci(criteria[i].limit_s) + " s");
    failed += r.pass ? 0 : 1;
    std::printf("%s %2d %s (%.1f s): %s\n", r.pass ? "PASS" : "FAIL", id, criteria[i].name.c_str(), s,
                r.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(scratch);
  return failed == 0 ? 0 : 1;
}
