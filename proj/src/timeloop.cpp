#include "strb/timeloop.hpp"

#include <json.hpp>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

namespace strb {

std::string to_string(ProblemKind kind) { return kind == ProblemKind::heat ? "heat" : "stokes"; }

ProblemKind parse_problem(const std::string& name) {
  if (name == "heat") return ProblemKind::heat;
  if (name == "stokes") return ProblemKind::stokes;
  throw InvalidArgument("unknown problem '" + name + "'");
}

Mesh benchmark_mesh(ProblemKind kind, const std::array<double, 3>& lengths, const std::array<int, 3>& divisions) {
  std::vector<TagRule> rules;
  if (kind == ProblemKind::heat) {
    rules = {on_plane(0, 0.0, BoundaryTag::dirichlet), on_plane(0, lengths[0], BoundaryTag::neumann)};
  } else {
    rules = {on_plane(0, 0.0, BoundaryTag::dirichlet),           on_plane(1, 0.0, BoundaryTag::dirichlet_zero),
             on_plane(1, lengths[1], BoundaryTag::dirichlet_zero), on_plane(2, 0.0, BoundaryTag::dirichlet_nopen),
             on_plane(2, lengths[2], BoundaryTag::dirichlet_nopen), on_plane(0, lengths[0], BoundaryTag::neumann_zero)};
  }
  return build_box_mesh(lengths, divisions, rules, BoundaryTag::neumann_zero);
}

namespace {

double sum(const Parameter& mu) {
  double s = 0;
  for (double m : mu) s += m;
  return s;
}

VectorField constant_field(double v) {
  return [v](const Point&, double, const Parameter&) { return std::array<double, 3>{v, v, v}; };
}

}  // namespace

ParametricData benchmark_data(ProblemKind kind, double T, int steps, double height) {
  require(T > 0 && steps > 0, "benchmark_data: T and steps must be positive");
  ParametricData d;
  d.T = T;
  d.steps = steps;
  d.lower = {1, 1, 1};
  d.upper = {10, 10, 10};
  d.alpha = [](const Point& x, double t, const Parameter& mu) {
    return std::exp(x[0] * (std::sin(t) + std::cos(t)) / sum(mu));
  };
  d.u0 = constant_field(0.0);
  if (kind == ProblemKind::heat) {
    d.f = constant_field(1.0);
    d.g = [T](const Point& x, double t, const Parameter& mu) {
      const double v = mu[0] * std::exp(-x[0] / mu[1]) * std::abs(std::sin(std::numbers::pi * t / (mu[2] * T)));
      return std::array<double, 3>{v, v, v};
    };
    d.h = [T](const Point&, double t, const Parameter& mu) {
      const double v = std::abs(std::cos(std::numbers::pi * t / (mu[2] * T)));
      return std::array<double, 3>{v, v, v};
    };
  } else {
    d.f = constant_field(0.0);
    d.h = constant_field(0.0);
    // parabolic inflow directed into the channel (+x)
    d.g = [T, height](const Point& x, double t, const Parameter& mu) {
      const double pt = std::numbers::pi * t;
      const double v = mu[0] * x[1] * (height - x[1]) *
                       std::abs(1.0 - std::cos(pt / T) + std::sin(pt / (mu[2] * T)) / mu[1]);
      return std::array<double, 3>{v, 0.0, 0.0};
    };
  }
  return d;
}

ParametricData zero_data(ProblemKind kind, double T, int steps) {
  ParametricData d = benchmark_data(kind, T, steps);
  d.alpha = [](const Point&, double, const Parameter&) { return 1.0; };
  d.f = d.g = d.h = d.u0 = constant_field(0.0);
  return d;
}

// ---------------------------------------------------------------------------

namespace {

double relative(const Vector& r, const Vector& b) {
  const double nb = b.norm();
  return nb == 0.0 ? r.norm() : r.norm() / nb;
}

}  // namespace

MarchResult be_solve_heat(const SpaceTimeSystem& system) {
  require(!system.saddle_point(), "be_solve_heat: saddle-point system given");
  const Index ns = system.state_size();
  MarchResult out;
  out.states.resize(ns, system.steps);
  const SparseMatrix m_delta = system.mass / system.delta;
  Eigen::SimplicialLDLT<SparseMatrix> solver;
  for (int n = 1; n <= system.steps; ++n) {
    SparseMatrix k = m_delta + system.stiffness(n);
    if (n == 1) solver.analyzePattern(k);
    solver.factorize(k);
    if (solver.info() != Eigen::Success)
      throw NumericalError("singular step matrix at step " + std::to_string(n));
    Vector b = system.rhs(n);
    if (n >= 2) b += m_delta * out.states.col(n - 2);
    Vector x = solver.solve(b);
    out.step_residuals.push_back(relative(k * x - b, b));
    out.states.col(n - 1) = x;
  }
  return out;
}

MarchResult be_solve_stokes(const SpaceTimeSystem& system) {
  require(system.saddle_point(), "be_solve_stokes: divergence operator missing");
  const Index ns = system.state_size(), np = system.pressure_size();
  MarchResult out;
  out.states.resize(ns, system.steps);
  out.pressures.resize(np, system.steps);
  const SparseMatrix m_delta = system.mass / system.delta;
  const SparseMatrix& b = system.divergence;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> solver;
  for (int n = 1; n <= system.steps; ++n) {
    SparseMatrix k = m_delta + system.stiffness(n);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(k.nonZeros() + 2 * b.nonZeros()));
    for (Index j = 0; j < k.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(k, j); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
    for (Index j = 0; j < b.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(b, j); it; ++it) {
        trip.emplace_back(ns + it.row(), it.col(), it.value());
        trip.emplace_back(it.col(), ns + it.row(), -it.value());
      }
    SparseMatrix s(ns + np, ns + np);
    s.setFromTriplets(trip.begin(), trip.end());
    s.makeCompressed();
    if (n == 1) solver.analyzePattern(s);
    solver.factorize(s);
    if (solver.info() != Eigen::Success)
      throw NumericalError("singular saddle-point matrix at step " + std::to_string(n));
    Vector r(ns + np);
    r.head(ns) = system.rhs(n);
    if (n >= 2) r.head(ns) += m_delta * out.states.col(n - 2);
    const Vector c = system.divergence_rhs(n);
    r.tail(np) = c;
    Vector x = solver.solve(r);
    out.step_residuals.push_back(relative(s * x - r, r));
    out.states.col(n - 1) = x.head(ns);
    out.pressures.col(n - 1) = x.tail(np);
    const double un = x.head(ns).norm();
    const double div = (b * x.head(ns) - c).norm();
    out.divergence_residuals.push_back(un == 0.0 ? div : div / un);
  }
  return out;
}

Vector spacetime_residual(const SpaceTimeSystem& system, const Vector& v_st, const Vector* p_st) {
  const Index ns = system.state_size(), np = system.pressure_size();
  const int nt = system.steps;
  require(v_st.size() == ns * nt, "spacetime_residual: state length must be N_s * N_t");
  require(!system.saddle_point() || (p_st && p_st->size() == np * nt),
          "spacetime_residual: pressure of length N_p * N_t required");
  Vector r(ns * nt + (system.saddle_point() ? np * nt : 0));
  for (int n = 1; n <= nt; ++n) {
    const auto vn = v_st.segment((n - 1) * ns, ns);
    Vector block = system.rhs(n) - (system.mass * vn) / system.delta - system.stiffness(n) * vn;
    if (n >= 2) block += (system.mass * v_st.segment((n - 2) * ns, ns)) / system.delta;
    if (system.saddle_point()) {
      block += system.divergence.transpose() * p_st->segment((n - 1) * np, np);
      r.segment(ns * nt + (n - 1) * np, np) = system.divergence_rhs(n) - system.divergence * vn;
    }
    r.segment((n - 1) * ns, ns) = block;
  }
  return r;
}

Vector spacetime_rhs(const SpaceTimeSystem& system) {
  const Index ns = system.state_size(), np = system.pressure_size();
  const int nt = system.steps;
  Vector l(ns * nt + (system.saddle_point() ? np * nt : 0));
  for (int n = 1; n <= nt; ++n) {
    l.segment((n - 1) * ns, ns) = system.rhs(n);
    if (system.saddle_point()) l.segment(ns * nt + (n - 1) * np, np) = system.divergence_rhs(n);
  }
  return l;
}

SparseMatrix spacetime_matrix(const SpaceTimeSystem& system) {
  const Index ns = system.state_size();
  const int nt = system.steps;
  std::vector<Eigen::Triplet<double>> trip;
  for (int n = 1; n <= nt; ++n) {
    const SparseMatrix d = system.mass / system.delta + system.stiffness(n);
    const Index o = (n - 1) * ns;
    for (Index j = 0; j < d.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(d, j); it; ++it) trip.emplace_back(o + it.row(), o + it.col(), it.value());
    if (n >= 2)
      for (Index j = 0; j < system.mass.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(system.mass, j); it; ++it)
          trip.emplace_back(o + it.row(), o - ns + it.col(), -it.value() / system.delta);
  }
  SparseMatrix k(ns * nt, ns * nt);
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

// ---------------------------------------------------------------------------

FullOrderModel::FullOrderModel(ProblemKind kind, std::shared_ptr<const Mesh> mesh, ParametricData data)
    : kind_(kind), mesh_(std::move(mesh)), data_(std::move(data)) {
  mesh_->validate();
  const Element e = kind_ == ProblemKind::heat ? Element::Q1 : Element::Q2;
  const int comps = kind_ == ProblemKind::heat ? 1 : 3;
  auto space = std::make_shared<const FESpace>(mesh_, e, comps);
  require(space->num_free() > 0, "FullOrderModel: no free degrees of freedom");
  assembler_ = std::make_shared<const Assembler>(space);
  mass_ = assembler_->mass();
  state_norm_ = norm_matrix(*assembler_, NormKind::H1);
  if (kind_ == ProblemKind::stokes) {
    divergence_ = assembler_->divergence();
    pressure_norm_ = NormMatrix(assembler_->cell_volumes());
  }
  neumann_facets_.resize(mesh_->cells.size());
  for (int f : assembler_->facets_with_tag(BoundaryTag::neumann))
    neumann_facets_[static_cast<std::size_t>(mesh_->facets[static_cast<std::size_t>(f)].cell)].push_back(f);
}

Vector FullOrderModel::field(int n, const Parameter& mu) const {
  return evaluate_field_at_quadrature(data_, FieldKind::alpha, *assembler_, data_.time(n), mu);
}

Vector FullOrderModel::operator_nonzeros(int n, const Parameter& mu) const {
  const Vector f = field(n, mu);
  return assembler_->stiffness_nonzeros({f.data(), static_cast<std::size_t>(f.size())});
}

SparseMatrix FullOrderModel::stiffness(int n, const Parameter& mu) const {
  return assembler_->pattern().from_nonzeros(operator_nonzeros(n, mu));
}

Vector FullOrderModel::cell_rhs(int cell, int n, const Parameter& mu) const {
  const FESpace& s = space();
  const int nc = s.components();
  const int nn = s.nodes_per_cell();
  const int ndl = nn * nc;
  const double t = data_.time(n);
  const double tp = data_.time(n - 1);
  auto nodes = s.cell_nodes(cell);

  Vector z = Vector::Zero(ndl), prev = Vector::Zero(ndl);
  for (int i = 0; i < nn; ++i) {
    const int node = nodes[static_cast<std::size_t>(i)];
    const Point& x = s.node(node);
    bool lifted = false;
    for (int c = 0; c < nc; ++c) lifted = lifted || s.constraint(s.dof(node, c)) == FESpace::Constraint::value;
    std::array<double, 3> gz{}, gp{}, u0{};
    if (lifted) {
      gz = data_.g(x, t, mu);
      if (n >= 2) gp = data_.g(x, tp, mu);
    }
    if (n == 1) u0 = data_.u0(x, 0.0, mu);
    for (int c = 0; c < nc; ++c) {
      const bool value = s.constraint(s.dof(node, c)) == FESpace::Constraint::value;
      z[i * nc + c] = value ? gz[static_cast<std::size_t>(c)] : 0.0;
      prev[i * nc + c] = n == 1 ? u0[static_cast<std::size_t>(c)] : (value ? gp[static_cast<std::size_t>(c)] : 0.0);
    }
  }

  Vector out(ndl + (kind_ == ProblemKind::stokes ? 1 : 0));
  out.head(ndl) = assembler_->local_load(cell, [&](const Point& x) { return data_.f(x, t, mu); });
  for (int f : neumann_facets_[static_cast<std::size_t>(cell)])
    out.head(ndl) += assembler_->local_boundary_load(f, [&](const Point& x) { return data_.h(x, t, mu); });

  const Vector diff = z - prev;
  const bool has_z = z.cwiseAbs().maxCoeff() > 0.0;
  const bool has_diff = diff.cwiseAbs().maxCoeff() > 0.0;
  auto apply_blocks = [&](const Matrix& local, const Vector& v, double scale) {
    for (int c = 0; c < nc; ++c)
      for (int i = 0; i < nn; ++i) {
        double acc = 0.0;
        for (int j = 0; j < nn; ++j) acc += local(i, j) * v[j * nc + c];
        out[i * nc + c] -= scale * acc;
      }
  };
  if (has_z) {
    auto pts = assembler_->cell_points(cell);
    std::vector<double> alpha(pts.size());
    for (std::size_t q = 0; q < pts.size(); ++q) alpha[q] = data_.alpha(pts[q], t, mu);
    apply_blocks(assembler_->local_stiffness(cell, alpha), z, 1.0);
  }
  if (has_diff) apply_blocks(assembler_->local_mass(cell), diff, 1.0 / data_.delta());
  if (kind_ == ProblemKind::stokes) out[ndl] = has_z ? -assembler_->local_divergence(cell).dot(z) : 0.0;
  return out;
}

Vector FullOrderModel::rhs(int n, const Parameter& mu) const {
  data_.check(mu);
  const FESpace& s = space();
  const int nc = s.components();
  Vector r = Vector::Zero(rhs_size());
  for (int cell = 0; cell < s.num_cells(); ++cell) {
    const Vector local = cell_rhs(cell, n, mu);
    auto nodes = s.cell_nodes(cell);
    for (int i = 0; i < s.nodes_per_cell(); ++i)
      for (int c = 0; c < nc; ++c) {
        const Index f = s.free_index(s.dof(nodes[static_cast<std::size_t>(i)], c));
        if (f >= 0) r[f] += local[i * nc + c];
      }
    if (kind_ == ProblemKind::stokes) r[state_size() + cell] = local[s.dofs_per_cell()];
  }
  return r;
}

Vector FullOrderModel::sampled_operator(int n, const Parameter& mu, const std::vector<Index>& nonzeros,
                                        SampleStats* stats) const {
  const double t = data_.time(n);
  return assembler_->sampled_stiffness(nonzeros, [&](const Point& x) { return data_.alpha(x, t, mu); }, stats);
}

Vector FullOrderModel::sampled_rhs(int n, const Parameter& mu, const std::vector<Index>& rows,
                                   SampleStats* stats) const {
  const FESpace& s = space();
  const Index ns = state_size();
  std::vector<int> cells;
  for (Index r : rows) {
    require(r >= 0 && r < rhs_size(), "sampled_rhs: row out of range");
    if (r >= ns) {
      cells.push_back(static_cast<int>(r - ns));
      continue;
    }
    for (const auto& [cell, local] : assembler_->dof_contributions(s.free_dofs()[static_cast<std::size_t>(r)]))
      cells.push_back(cell);
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  std::map<int, Vector> locals;
  for (int c : cells) locals.emplace(c, cell_rhs(c, n, mu));
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index r = rows[k];
    if (r >= ns) {
      out[static_cast<Index>(k)] = locals.at(static_cast<int>(r - ns))[s.dofs_per_cell()];
      continue;
    }
    double v = 0.0;
    for (const auto& [cell, local] : assembler_->dof_contributions(s.free_dofs()[static_cast<std::size_t>(r)]))
      v += locals.at(cell)[local];
    out[static_cast<Index>(k)] = v;
  }
  if (stats) {
    stats->cells_touched += static_cast<Index>(cells.size());
    stats->entries += static_cast<Index>(rows.size());
  }
  return out;
}

SpaceTimeSystem FullOrderModel::system(const Parameter& mu) const {
  SpaceTimeSystem sys;
  sys.mass = mass_;
  sys.delta = data_.delta();
  sys.steps = data_.steps;
  const Index ns = state_size();
  sys.stiffness = [this, mu](int n) { return stiffness(n, mu); };
  if (kind_ == ProblemKind::heat) {
    sys.rhs = [this, mu](int n) { return rhs(n, mu); };
  } else {
    sys.divergence = divergence_;
    sys.rhs = [this, mu, ns](int n) { return Vector(rhs(n, mu).head(ns)); };
    sys.divergence_rhs = [this, mu, ns](int n) { return Vector(rhs(n, mu).tail(pressure_size())); };
  }
  return sys;
}

MarchResult FullOrderModel::solve(const Parameter& mu, Record* record) const {
  data_.check(mu);
  SpaceTimeSystem sys = system(mu);
  const Index ns = state_size();
  if (record) {
    record->operators.resize(operator_size(), steps());
    record->rhs.resize(rhs_size(), steps());
    record->fields.resize(assembler_->num_quadrature_points(), steps());
  }
  sys.stiffness = [this, mu, record](int n) {
    const Vector f = field(n, mu);
    const Vector nz = assembler_->stiffness_nonzeros({f.data(), static_cast<std::size_t>(f.size())});
    if (record) {
      record->fields.col(n - 1) = f;
      record->operators.col(n - 1) = nz;
    }
    return assembler_->pattern().from_nonzeros(nz);
  };
  // one rhs assembly per step shared by the state and continuity rows
  auto cache = std::make_shared<std::pair<int, Vector>>(-1, Vector());
  auto full_rhs = [this, mu, record, cache](int n) -> const Vector& {
    if (cache->first != n) {
      cache->second = rhs(n, mu);
      cache->first = n;
      if (record) record->rhs.col(n - 1) = cache->second;
    }
    return cache->second;
  };
  sys.rhs = [full_rhs, ns](int n) { return Vector(full_rhs(n).head(ns)); };
  if (kind_ == ProblemKind::heat) return be_solve_heat(sys);
  const Index np = pressure_size();
  sys.divergence_rhs = [full_rhs, np](int n) { return Vector(full_rhs(n).tail(np)); };
  return be_solve_stokes(sys);
}

Vector FullOrderModel::full_state(const Vector& free, int n, const Parameter& mu) const {
  return space().extend(free, dirichlet_lifting(space(), data_.g, data_.time(n), mu));
}

// ---------------------------------------------------------------------------

SnapshotSet generate_snapshots(const FullOrderModel& model, const std::vector<Parameter>& parameters,
                               std::size_t system_count, std::uint64_t config_hash) {
  SnapshotSet set;
  set.config_hash = config_hash;
  const auto nt = static_cast<std::size_t>(model.steps());
  std::vector<double> states, pressures, ops, rhs, fields;
  std::size_t kept_system = 0;
  for (std::size_t i = 0; i < parameters.size(); ++i) {
    const bool with_system = i < system_count;
    FullOrderModel::Record rec;
    MarchResult res;
    const auto start = std::chrono::steady_clock::now();
    try {
      res = model.solve(parameters[i], with_system ? &rec : nullptr);
    } catch (const std::exception& e) {
      set.failures.emplace_back(i, e.what());
      continue;
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    set.parameters.push_back(parameters[i]);
    set.fom_ms.push_back(ms);
    states.insert(states.end(), res.states.data(), res.states.data() + res.states.size());
    if (model.kind() == ProblemKind::stokes)
      pressures.insert(pressures.end(), res.pressures.data(), res.pressures.data() + res.pressures.size());
    if (with_system) {
      ++kept_system;
      ops.insert(ops.end(), rec.operators.data(), rec.operators.data() + rec.operators.size());
      rhs.insert(rhs.end(), rec.rhs.data(), rec.rhs.data() + rec.rhs.size());
      fields.insert(fields.end(), rec.fields.data(), rec.fields.data() + rec.fields.size());
    }
  }
  const std::size_t count = set.parameters.size();
  if (count == 0) return set;
  set.states = Hypermatrix({"s", "t", "p"}, {static_cast<std::size_t>(model.state_size()), nt, count}, std::move(states));
  if (model.kind() == ProblemKind::stokes)
    set.pressures = Hypermatrix({"s", "t", "p"}, {static_cast<std::size_t>(model.pressure_size()), nt, count},
                                std::move(pressures));
  if (kept_system > 0) {
    set.operators = Hypermatrix({"s", "t", "p"}, {static_cast<std::size_t>(model.operator_size()), nt, kept_system},
                                std::move(ops));
    set.rhs = Hypermatrix({"s", "t", "p"}, {static_cast<std::size_t>(model.rhs_size()), nt, kept_system}, std::move(rhs));
    set.fields = Hypermatrix({"q", "t", "p"},
                             {static_cast<std::size_t>(model.assembler().num_quadrature_points()), nt, kept_system},
                             std::move(fields));
  }
  return set;
}

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void write_snapshots(const std::filesystem::path& dir, const SnapshotSet& set) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["config_hash"] = hex(set.config_hash);
  j["parameters"] = set.parameters;
  j["fom_ms"] = set.fom_ms;
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& [i, what] : set.failures) failures.push_back({{"index", i}, {"error", what}});
  j["failures"] = failures;
  std::vector<std::string> arrays;
  auto put = [&](const std::string& name, const Hypermatrix& h) {
    if (h.rank() == 0) return;
    write_hypermatrix(dir / (name + ".bin"), h);
    arrays.push_back(name);
  };
  put("states", set.states);
  put("pressures", set.pressures);
  put("operators", set.operators);
  put("rhs", set.rhs);
  put("fields", set.fields);
  j["arrays"] = arrays;
  std::ofstream out(dir / "manifest.json");
  out << j.dump(2) << '\n';
}

SnapshotSet read_snapshots(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("missing snapshot manifest in " + dir.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  SnapshotSet set;
  set.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
  set.parameters = j.at("parameters").get<std::vector<Parameter>>();
  set.fom_ms = j.at("fom_ms").get<std::vector<double>>();
  for (const auto& f : j.at("failures")) set.failures.emplace_back(f.at("index").get<std::size_t>(), f.at("error").get<std::string>());
  for (const auto& name : j.at("arrays").get<std::vector<std::string>>()) {
    Hypermatrix h = read_hypermatrix(dir / (name + ".bin"));
    if (name == "states") set.states = std::move(h);
    else if (name == "pressures") set.pressures = std::move(h);
    else if (name == "operators") set.operators = std::move(h);
    else if (name == "rhs") set.rhs = std::move(h);
    else if (name == "fields") set.fields = std::move(h);
  }
  return set;
}

}  // namespace strb
