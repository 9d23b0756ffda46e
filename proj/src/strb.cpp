#include "strb/strb.hpp"

#include <json.hpp>

#include <Eigen/SVD>

#include <fstream>

namespace strb {

namespace {

double weighted_frobenius(const Matrix& u, const NormMatrix& x) {
  return std::sqrt(std::max(0.0, (u.transpose() * (x.matrix() * u)).trace()));
}

// Gram-Schmidt in the X inner product (identity when x is null), two passes.
Matrix append_orthonormal(const Matrix& q, const Matrix& candidates, const NormMatrix* x) {
  auto apply = [&](const Vector& v) -> Vector { return x ? Vector(x->matrix() * v) : v; };
  std::vector<Vector> cols;
  for (Index j = 0; j < q.cols(); ++j) cols.push_back(q.col(j));
  for (Index j = 0; j < candidates.cols(); ++j) {
    Vector c = candidates.col(j);
    const double original = std::sqrt(std::max(0.0, c.dot(apply(c))));
    if (original == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      const Vector xc = apply(c);
      for (const Vector& b : cols) c -= b.dot(xc) * b;
    }
    const double rest = std::sqrt(std::max(0.0, c.dot(apply(c))));
    if (rest < 1e-10 * original) continue;
    cols.push_back(c / rest);
  }
  Matrix out(q.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = cols[j];
  return out;
}

}  // namespace

StateBasis build_state_basis(const Hypermatrix& snapshots, double eps, const NormMatrix& x) {
  const StHosvd st = st_hosvd(snapshots, eps, &x);
  StateBasis out;
  out.space = st.space.basis;
  out.time = st.time.basis;
  out.space_spectrum = st.space.singular_values;
  out.time_spectrum = st.time.singular_values;
  out.snapshot_norm = weighted_frobenius(snapshots.matrix(), x);
  out.compressed_norm = st.compressed_norm;
  return out;
}

StateBasis enrich_supremizers(const StateBasis& velocity, const StateBasis& pressure, const SparseMatrix& b,
                              const NormMatrix& x) {
  require(b.cols() == velocity.space.rows() && b.rows() == pressure.space.rows(),
          "enrich_supremizers: divergence shape mismatch");
  StateBasis out = velocity;
  const Matrix supremizers = x.solve(Matrix(b.transpose() * pressure.space));
  out.space = append_orthonormal(velocity.space, supremizers, &x);
  out.time = append_orthonormal(velocity.time, pressure.time, nullptr);
  return out;
}

Matrix expand(const StateBasis& basis, const Vector& coefficients) {
  require(coefficients.size() == basis.n_st(), "expand: coefficient length mismatch");
  const Eigen::Map<const Matrix> c(coefficients.data(), basis.n_s(), basis.n_t());
  return basis.space * c * basis.time.transpose();
}

Vector project(const StateBasis& basis, const Vector& v_st) {
  const Index ns = basis.space.rows();
  const Index nt = basis.time.rows();
  require(v_st.size() == ns * nt, "project: space-time length mismatch");
  const Eigen::Map<const Matrix> v(v_st.data(), ns, nt);
  const Matrix r = basis.space.transpose() * v * basis.time;
  return Eigen::Map<const Vector>(r.data(), r.size());
}

RomModel galerkin_compress(const FullOrderModel& fom, MdeimVariant method, double eps, StateBasis velocity,
                           StateBasis pressure, MdeimInterpolant op, MdeimInterpolant rhs,
                           std::uint64_t config_hash) {
  const bool stokes = fom.kind() == ProblemKind::stokes;
  require(velocity.space.rows() == fom.state_size(), "galerkin_compress: state basis row mismatch");
  require(velocity.time.rows() == fom.steps(), "galerkin_compress: time basis row mismatch");
  require(op.rows() == fom.operator_size(), "galerkin_compress: operator interpolant row mismatch");
  require(rhs.rows() == fom.rhs_size(), "galerkin_compress: rhs interpolant row mismatch");
  require(op.space_time() == is_space_time(method) && rhs.space_time() == is_space_time(method),
          "galerkin_compress: interpolant variant mismatch");
  if (stokes)
    require(pressure.space.rows() == fom.pressure_size() && pressure.time.rows() == fom.steps(),
            "galerkin_compress: pressure basis mismatch");

  RomModel m;
  m.kind = fom.kind();
  m.method = method;
  m.eps = eps;
  m.delta = fom.delta();
  m.steps = fom.steps();
  m.config_hash = config_hash;
  m.velocity = std::move(velocity);
  if (stokes) m.pressure = std::move(pressure);
  m.op = std::move(op);
  m.rhs = std::move(rhs);
  const Matrix& phi_s = m.velocity.space;
  const Matrix& phi_t = m.velocity.time;
  const Index nt_full = phi_t.rows();

  m.mass = phi_s.transpose() * (fom.mass() * phi_s);
  m.shift = phi_t.bottomRows(nt_full - 1).transpose() * phi_t.topRows(nt_full - 1);

  const OperatorPattern& pattern = fom.assembler().pattern();
  m.op_space.reserve(static_cast<std::size_t>(m.op.n_s()));
  for (Index q = 0; q < m.op.n_s(); ++q) {
    const SparseMatrix a = pattern.from_nonzeros(m.op.space_basis().col(q));
    m.op_space.push_back(phi_s.transpose() * (a * phi_s));
  }
  if (m.op.space_time()) {
    for (Index q = 0; q < m.op.n_t(); ++q)
      m.op_time.push_back(phi_t.transpose() * m.op.time_basis().col(q).asDiagonal() * phi_t);
  } else {
    for (Index n = 0; n < nt_full; ++n) m.step_outer.push_back(phi_t.row(n).transpose() * phi_t.row(n));
  }

  const Index nu = fom.state_size();
  m.rhs_space = phi_s.transpose() * m.rhs.space_basis().topRows(nu);
  if (m.rhs.space_time()) m.rhs_time = phi_t.transpose() * m.rhs.time_basis();
  if (stokes) {
    const Matrix& psi_s = m.pressure.space;
    const Matrix& psi_t = m.pressure.time;
    m.rhs_space_p = psi_s.transpose() * m.rhs.space_basis().bottomRows(fom.pressure_size());
    if (m.rhs.space_time()) m.rhs_time_p = psi_t.transpose() * m.rhs.time_basis();
    const Matrix b = psi_s.transpose() * (fom.divergence() * phi_s);
    const Matrix bt = phi_s.transpose() * (fom.divergence().transpose() * psi_s);
    m.divergence = kron(Matrix(psi_t.transpose() * phi_t), b);
    m.gradient = -kron(Matrix(phi_t.transpose() * psi_t), bt);
  }
  return m;
}

RomModel build_rom(const FullOrderModel& fom, const SnapshotSet& snapshots, MdeimVariant method, double eps,
                   bool supremizers) {
  require(snapshots.count() > 0 && snapshots.system_count() > 0, "build_rom: empty snapshot set");
  const bool stokes = fom.kind() == ProblemKind::stokes;
  StateBasis velocity = build_state_basis(snapshots.states, eps, fom.state_norm());
  StateBasis pressure;
  if (stokes) {
    pressure = build_state_basis(snapshots.pressures, eps, fom.pressure_norm());
    if (supremizers) velocity = enrich_supremizers(velocity, pressure, fom.divergence(), fom.state_norm());
  }
  const MdeimVariant algebraic = is_space_time(method) ? MdeimVariant::ST : MdeimVariant::STD;
  MdeimInterpolant op;
  if (is_functional(method)) {
    const Assembler& a = fom.assembler();
    auto form = [&a](std::span<const double> x) { return a.stiffness_nonzeros(x); };
    op = build_functional(snapshots.fields, form, eps, method).interpolant;
  } else {
    op = build_algebraic(snapshots.operators, eps, method, TermKind::operator_term);
  }
  MdeimInterpolant rhs = build_algebraic(snapshots.rhs, eps, algebraic, TermKind::rhs_term);
  return galerkin_compress(fom, method, eps, std::move(velocity), std::move(pressure), std::move(op), std::move(rhs),
                           snapshots.config_hash);
}

OnlineCoefficients sample_coefficients(const RomModel& model, const FullOrderModel& fom, const Parameter& mu,
                                       OnlineStats* stats) {
  SampleStats ss;
  OnlineCoefficients c;
  auto sample = [&](const MdeimInterpolant& interp, bool is_op) {
    auto at = [&](int n) {
      return is_op ? fom.sampled_operator(n, mu, interp.space_samples(), &ss)
                   : fom.sampled_rhs(n, mu, interp.space_samples(), &ss);
    };
    const Index ns = interp.n_s();
    if (!interp.space_time()) {
      Matrix s(ns, model.steps);
      for (int n = 1; n <= model.steps; ++n) s.col(n - 1) = at(n);
      return interp.step_coefficients(s);
    }
    const Index nt = interp.n_t();
    Vector s(ns * nt);
    for (Index it = 0; it < nt; ++it) {
      const Vector v = at(static_cast<int>(interp.time_samples()[static_cast<std::size_t>(it)]) + 1);
      for (Index is = 0; is < ns; ++is) s[is * nt + it] = v[is];
    }
    return interp.coefficient_matrix(interp.coefficients(s));
  };
  c.op = sample(model.op, true);
  c.rhs = sample(model.rhs, false);
  if (stats) {
    stats->entries_sampled = ss.entries;
    stats->cells_touched = ss.cells_touched;
    stats->coefficient_dim = c.op.size();
    stats->reduced_dim = model.dim();
  }
  return c;
}

Matrix reduced_lhs(const RomModel& model, const OnlineCoefficients& c) {
  const Index ns = model.velocity.n_s();
  const Index nt = model.velocity.n_t();
  const Index nu = ns * nt;
  Matrix k = kron(Matrix(Matrix::Identity(nt, nt) - model.shift), model.mass / model.delta);
  for (Index q = 0; q < model.op.n_s(); ++q) {
    Matrix t = Matrix::Zero(nt, nt);
    if (model.op.space_time()) {
      for (Index qt = 0; qt < model.op.n_t(); ++qt) t += c.op(q, qt) * model.op_time[static_cast<std::size_t>(qt)];
    } else {
      for (int n = 0; n < model.steps; ++n) t += c.op(q, n) * model.step_outer[static_cast<std::size_t>(n)];
    }
    k += kron(t, model.op_space[static_cast<std::size_t>(q)]);
  }
  if (model.kind != ProblemKind::stokes) return k;
  const Index np = model.pressure_dim();
  Matrix s = Matrix::Zero(nu + np, nu + np);
  s.topLeftCorner(nu, nu) = k;
  s.topRightCorner(nu, np) = model.gradient;
  s.bottomLeftCorner(np, nu) = model.divergence;
  return s;
}

Vector reduced_rhs(const RomModel& model, const OnlineCoefficients& c) {
  auto flatten = [](const Matrix& r) { return Vector(Eigen::Map<const Vector>(r.data(), r.size())); };
  Matrix ru;
  Matrix rp;
  if (model.rhs.space_time()) {
    ru = model.rhs_space * c.rhs * model.rhs_time.transpose();
    if (model.kind == ProblemKind::stokes) rp = model.rhs_space_p * c.rhs * model.rhs_time_p.transpose();
  } else {
    ru = model.rhs_space * c.rhs * model.velocity.time;
    if (model.kind == ProblemKind::stokes) rp = model.rhs_space_p * c.rhs * model.pressure.time;
  }
  if (model.kind != ProblemKind::stokes) return flatten(ru);
  Vector out(model.dim());
  out << flatten(ru), flatten(rp);
  return out;
}

OnlineResult online_solve(const RomModel& model, const FullOrderModel& fom, const Parameter& mu, bool with_condition) {
  require(model.kind == fom.kind() && model.steps == fom.steps(), "online_solve: model does not match the problem");
  OnlineResult r;
  r.mdeim = sample_coefficients(model, fom, mu, &r.stats);
  const Matrix lhs = reduced_lhs(model, r.mdeim);
  const Vector rhs = reduced_rhs(model, r.mdeim);
  Eigen::PartialPivLU<Matrix> lu(lhs);
  const Vector x = lu.solve(rhs);
  if (!x.allFinite() || (lhs * x - rhs).norm() > 1e-6 * std::max(rhs.norm(), 1e-300))
    throw NumericalError("online_solve: reduced system is singular");
  if (with_condition) {
    const Vector sv = Eigen::JacobiSVD<Matrix>(lhs).singularValues();
    r.condition = sv[sv.size() - 1] > 0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
  }
  const Index nu = model.state_dim();
  r.coefficients = x.head(nu);
  r.states = expand(model.velocity, r.coefficients);
  if (model.kind == ProblemKind::stokes) {
    r.pressure_coefficients = x.tail(model.pressure_dim());
    r.pressures = expand(model.pressure, r.pressure_coefficients);
  }
  return r;
}

namespace {

Hypermatrix stack(const std::vector<Matrix>& blocks, Index rows, Index cols) {
  Hypermatrix h({"i", "j", "k"},
                {static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), blocks.size()});
  for (std::size_t k = 0; k < blocks.size(); ++k) h.set_slice(k, blocks[k]);
  return h;
}

std::vector<Matrix> unstack(const Hypermatrix& h) {
  std::vector<Matrix> out;
  for (std::size_t k = 0; k < h.dims()[2]; ++k) out.push_back(h.slice(k));
  return out;
}

void put(const std::filesystem::path& dir, const std::string& name, const Matrix& m) {
  write_hypermatrix(dir / (name + ".bin"), Hypermatrix::from_matrix(m, "i", "j"));
}

Matrix get(const std::filesystem::path& dir, const std::string& name) {
  return read_hypermatrix(dir / (name + ".bin")).matrix();
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

nlohmann::json basis_json(const StateBasis& b) {
  return {{"n_s", b.n_s()},
          {"n_t", b.n_t()},
          {"space_spectrum", to_std(b.space_spectrum)},
          {"time_spectrum", to_std(b.time_spectrum)},
          {"snapshot_norm", b.snapshot_norm},
          {"compressed_norm", b.compressed_norm}};
}

StateBasis read_basis(const std::filesystem::path& dir, const std::string& name, const nlohmann::json& j) {
  StateBasis b;
  b.space = get(dir, name + "_space");
  b.time = get(dir, name + "_time");
  b.space_spectrum = to_eigen(j.at("space_spectrum").get<std::vector<double>>());
  b.time_spectrum = to_eigen(j.at("time_spectrum").get<std::vector<double>>());
  b.snapshot_norm = j.at("snapshot_norm").get<double>();
  b.compressed_norm = j.at("compressed_norm").get<double>();
  return b;
}

}  // namespace

void write_rom(const std::filesystem::path& dir, const RomModel& m) {
  std::filesystem::create_directories(dir);
  const bool stokes = m.kind == ProblemKind::stokes;
  put(dir, "velocity_space", m.velocity.space);
  put(dir, "velocity_time", m.velocity.time);
  if (stokes) {
    put(dir, "pressure_space", m.pressure.space);
    put(dir, "pressure_time", m.pressure.time);
    put(dir, "rhs_space_p", m.rhs_space_p);
    put(dir, "divergence", m.divergence);
    put(dir, "gradient", m.gradient);
    if (m.rhs.space_time()) put(dir, "rhs_time_p", m.rhs_time_p);
  }
  put(dir, "mass", m.mass);
  put(dir, "shift", m.shift);
  put(dir, "rhs_space", m.rhs_space);
  if (m.rhs.space_time()) put(dir, "rhs_time", m.rhs_time);
  const Index ns = m.velocity.n_s();
  const Index nt = m.velocity.n_t();
  write_hypermatrix(dir / "op_space.bin", stack(m.op_space, ns, ns));
  if (m.op.space_time())
    write_hypermatrix(dir / "op_time.bin", stack(m.op_time, nt, nt));
  else
    write_hypermatrix(dir / "step_outer.bin", stack(m.step_outer, nt, nt));
  write_interpolant(dir / "operator", m.op);
  write_interpolant(dir / "rhs", m.rhs);

  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(m.config_hash));
  nlohmann::json j;
  j["kind"] = to_string(m.kind);
  j["method"] = to_string(m.method);
  j["eps"] = m.eps;
  j["delta"] = m.delta;
  j["steps"] = m.steps;
  j["config_hash"] = hash;
  j["velocity"] = basis_json(m.velocity);
  if (stokes) j["pressure"] = basis_json(m.pressure);
  j["n_s_a"] = m.op.n_s();
  j["n_t_a"] = m.op.n_t();
  j["n_s_l"] = m.rhs.n_s();
  j["n_t_l"] = m.rhs.n_t();
  j["reduced_dim"] = m.dim();
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  out << j.dump(2) << '\n';
}

RomModel read_rom(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("missing reduced model manifest in " + dir.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  RomModel m;
  m.kind = parse_problem(j.at("kind").get<std::string>());
  m.method = parse_variant(j.at("method").get<std::string>());
  m.eps = j.at("eps").get<double>();
  m.delta = j.at("delta").get<double>();
  m.steps = j.at("steps").get<int>();
  m.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
  const bool stokes = m.kind == ProblemKind::stokes;
  m.velocity = read_basis(dir, "velocity", j.at("velocity"));
  m.op = read_interpolant(dir / "operator");
  m.rhs = read_interpolant(dir / "rhs");
  if (stokes) {
    m.pressure = read_basis(dir, "pressure", j.at("pressure"));
    m.rhs_space_p = get(dir, "rhs_space_p");
    m.divergence = get(dir, "divergence");
    m.gradient = get(dir, "gradient");
    if (m.rhs.space_time()) m.rhs_time_p = get(dir, "rhs_time_p");
  }
  m.mass = get(dir, "mass");
  m.shift = get(dir, "shift");
  m.rhs_space = get(dir, "rhs_space");
  if (m.rhs.space_time()) m.rhs_time = get(dir, "rhs_time");
  m.op_space = unstack(read_hypermatrix(dir / "op_space.bin"));
  if (m.op.space_time())
    m.op_time = unstack(read_hypermatrix(dir / "op_time.bin"));
  else
    m.step_outer = unstack(read_hypermatrix(dir / "step_outer.bin"));
  return m;
}

}  // namespace strb
