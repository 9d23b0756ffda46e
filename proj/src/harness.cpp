#include "strb/harness.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

namespace strb {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<std::string> split_list(const std::string& s) {
  std::string t = s;
  for (char& ch : t)
    if (ch == ',') ch = ' ';
  std::istringstream in(t);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::vector<double> doubles(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const auto& w : split_list(s)) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(w, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    require(pos == w.size() && pos > 0, "config: '" + key + "' expects numbers, got '" + w + "'");
    out.push_back(v);
  }
  return out;
}

template <class T>
T integer(const std::string& key, const std::string& s) {
  const auto v = doubles(key, s);
  require(v.size() == 1 && v[0] >= 0 && std::floor(v[0]) == v[0], "config: '" + key + "' expects a count");
  return static_cast<T>(v[0]);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string eps_tag(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", eps);
  return buf;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  static const std::map<std::string, std::vector<std::string>> known = {
      {"problem", {"kind"}},
      {"mesh", {"lengths", "divisions"}},
      {"time", {"T", "steps", "delta"}},
      {"parameters", {"lower", "upper", "train", "mdeim", "online", "seed", "outside"}},
      {"reduction", {"eps", "methods", "supremizers", "coercivity_cap"}},
      {"output", {"dir"}}};
  RunConfig c;
  bool has_steps = false;
  double delta = 0.0;
  for (const auto& [section, body] : tree) {
    const auto sec = known.find(section);
    require(sec != known.end() && !body.empty(), "config: unknown section or key '" + section + "'");
    for (const auto& [key, node] : body) {
      const std::string name = section + "." + key;
      require(std::find(sec->second.begin(), sec->second.end(), key) != sec->second.end(),
              "config: unknown key '" + name + "'");
      std::string v = node.get_value<std::string>();
      for (char mark : {'#', ';'})
        if (auto p = v.find(mark); p != std::string::npos) v.erase(p);
      if (name == "problem.kind") {
        c.problem = parse_problem(split_list(v).at(0));
      } else if (name == "mesh.lengths") {
        const auto l = doubles(name, v);
        require(l.size() == 3 && l[0] > 0 && l[1] > 0 && l[2] > 0, "config: mesh.lengths needs 3 positive values");
        c.lengths = {l[0], l[1], l[2]};
      } else if (name == "mesh.divisions") {
        const auto d = doubles(name, v);
        require(d.size() == 3 && d[0] >= 1 && d[1] >= 1 && d[2] >= 1, "config: mesh.divisions needs 3 counts");
        c.divisions = {static_cast<int>(d[0]), static_cast<int>(d[1]), static_cast<int>(d[2])};
      } else if (name == "time.T") {
        c.T = doubles(name, v).at(0);
      } else if (name == "time.steps") {
        c.steps = integer<int>(name, v);
        has_steps = true;
      } else if (name == "time.delta") {
        delta = doubles(name, v).at(0);
      } else if (name == "parameters.lower") {
        c.lower = doubles(name, v);
      } else if (name == "parameters.upper") {
        c.upper = doubles(name, v);
      } else if (name == "parameters.train") {
        c.n_train = integer<std::size_t>(name, v);
      } else if (name == "parameters.mdeim") {
        c.n_mdeim = integer<std::size_t>(name, v);
      } else if (name == "parameters.online") {
        c.n_online = integer<std::size_t>(name, v);
      } else if (name == "parameters.seed") {
        c.seed = integer<std::uint64_t>(name, v);
      } else if (name == "parameters.outside") {
        const std::string p = split_list(v).at(0);
        if (p == "ignore") c.outside = ParametricData::OutsidePolicy::ignore;
        else if (p == "warn") c.outside = ParametricData::OutsidePolicy::warn;
        else if (p == "error") c.outside = ParametricData::OutsidePolicy::error;
        else throw InvalidArgument("config: parameters.outside must be ignore, warn or error");
      } else if (name == "reduction.eps") {
        c.eps = doubles(name, v);
      } else if (name == "reduction.methods") {
        c.methods.clear();
        for (const auto& w : split_list(v)) c.methods.push_back(parse_variant(w));
      } else if (name == "reduction.supremizers") {
        const std::string b = split_list(v).at(0);
        require(b == "true" || b == "false", "config: reduction.supremizers must be true or false");
        c.supremizers = b == "true";
      } else if (name == "reduction.coercivity_cap") {
        c.coercivity_cap = integer<Index>(name, v);
      } else if (name == "output.dir") {
        c.out = split_list(v).at(0);
      }
    }
  }
  require(c.T > 0, "config: time.T must be positive");
  if (delta > 0) {
    const double n = c.T / delta;
    require(std::abs(n - std::round(n)) <= 1e-9 * n, "config: time.delta must divide T");
    require(!has_steps || static_cast<int>(std::round(n)) == c.steps, "config: time.steps and time.delta disagree");
    c.steps = static_cast<int>(std::round(n));
  }
  require(c.steps >= 1, "config: time.steps must be positive");
  require(c.lower.size() == c.upper.size() && !c.lower.empty(), "config: parameter bounds differ in length");
  for (std::size_t i = 0; i < c.lower.size(); ++i)
    require(c.lower[i] <= c.upper[i], "config: empty parameter box");
  require(c.n_train >= 1 && c.n_mdeim >= 1 && c.n_mdeim <= c.n_train,
          "config: need 1 <= parameters.mdeim <= parameters.train");
  require(!c.eps.empty() && !c.methods.empty(), "config: eps and methods must not be empty");
  for (double e : c.eps) require(e > 0 && e < 1, "config: eps values must lie in (0, 1)");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path.string());
  return parse_config(in);
}

std::string canonical_text(const RunConfig& c) {
  std::ostringstream s;
  auto list = [&s](const auto& v) {
    for (std::size_t i = 0; i < v.size(); ++i) s << (i ? " " : "") << fmt(v[i]);
    s << '\n';
  };
  s << "kind=" << to_string(c.problem) << '\n';
  s << "lengths=";
  list(c.lengths);
  s << "divisions=" << c.divisions[0] << ' ' << c.divisions[1] << ' ' << c.divisions[2] << '\n';
  s << "T=" << fmt(c.T) << "\nsteps=" << c.steps << '\n';
  s << "lower=";
  list(c.lower);
  s << "upper=";
  list(c.upper);
  s << "train=" << c.n_train << "\nmdeim=" << c.n_mdeim << "\nseed=" << c.seed << '\n';
  s << "supremizers=" << (c.supremizers ? "true" : "false") << '\n';
  return s.str();
}

std::uint64_t config_hash(const RunConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_text(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double uniform_draw(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + (k + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

ParameterStream::ParameterStream(Parameter lower, Parameter upper, std::uint64_t seed)
    : lower_(std::move(lower)), upper_(std::move(upper)), seed_(seed) {
  require(!lower_.empty() && lower_.size() == upper_.size(), "ParameterStream: bounds differ in length");
  for (std::size_t i = 0; i < lower_.size(); ++i) require(lower_[i] <= upper_[i], "ParameterStream: empty box");
}

Parameter ParameterStream::next() {
  Parameter mu(lower_.size());
  for (std::size_t j = 0; j < mu.size(); ++j) {
    const double u = uniform_draw(seed_, counter_ * mu.size() + j);
    mu[j] = lower_[j] == upper_[j] ? lower_[j] : lower_[j] + u * (upper_[j] - lower_[j]);
  }
  ++counter_;
  return mu;
}

std::vector<Parameter> sample_parameters(const Parameter& lower, const Parameter& upper, std::size_t n,
                                         std::uint64_t seed) {
  require(n >= 1, "sample_parameters: need at least one point");
  ParameterStream s(lower, upper, seed);
  std::vector<Parameter> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(s.next());
  return out;
}

bool near_duplicate(const Parameter& a, const Parameter& b, double tol) {
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return diff <= tol * scale;
}

ParameterSets draw_parameter_sets(const RunConfig& c) {
  ParameterStream s(c.lower, c.upper, c.seed);
  ParameterSets out;
  for (std::size_t i = 0; i < c.n_train; ++i) out.train.push_back(s.next());
  const std::uint64_t limit = s.counter() + 1000 * (c.n_online + 1);
  while (out.test.size() < c.n_online) {
    if (s.counter() >= limit) throw InvalidArgument("draw_parameter_sets: cannot draw distinct test parameters");
    Parameter mu = s.next();
    bool clash = false;
    for (const auto& t : out.train) clash = clash || near_duplicate(mu, t);
    for (const auto& t : out.test) clash = clash || near_duplicate(mu, t);
    if (!clash) out.test.push_back(std::move(mu));
  }
  return out;
}

FullOrderModel make_model(const RunConfig& c) {
  auto mesh = std::make_shared<const Mesh>(benchmark_mesh(c.problem, c.lengths, c.divisions));
  ParametricData data =
      benchmark_data(c.problem, c.T, c.steps, c.lengths[1]);
  data.lower = c.lower;
  data.upper = c.upper;
  data.outside = c.outside;
  return FullOrderModel(c.problem, std::move(mesh), std::move(data));
}

std::filesystem::path snapshot_dir(const RunConfig& c) { return c.out / "snapshots"; }

std::filesystem::path rom_dir(const RunConfig& c, MdeimVariant method, double eps) {
  return c.out / "rom" / (to_string(method) + "_" + eps_tag(eps));
}

SnapshotSet training_snapshots(const RunConfig& c, const FullOrderModel& fom, bool reuse) {
  const std::uint64_t hash = config_hash(c);
  const auto dir = snapshot_dir(c);
  if (reuse && std::filesystem::exists(dir / "manifest.json")) {
    SnapshotSet s = read_snapshots(dir);
    if (s.config_hash == hash) return s;
    std::clog << "snapshots in " << dir.string() << " belong to another configuration, regenerating\n";
  }
  const ParameterSets sets = draw_parameter_sets(c);
  SnapshotSet s = generate_snapshots(fom, sets.train, c.n_mdeim, hash);
  for (const auto& [i, msg] : s.failures) std::clog << "training parameter " << i << " failed: " << msg << '\n';
  write_snapshots(dir, s);
  return s;
}

OfflineResult run_offline(const RunConfig& c, const MemoryProbe& memory) {
  const FullOrderModel fom = make_model(c);
  OfflineResult result;
  result.config_hash = config_hash(c);
  auto t0 = Clock::now();
  const SnapshotSet snaps = training_snapshots(c, fom);
  result.snapshot_ms = ms_since(t0);
  result.failures = snaps.failures;
  require(snaps.count() > 0 && snaps.system_count() > 0, "run_offline: no usable training snapshots");
  const bool stokes = c.problem == ProblemKind::stokes;
  std::vector<Parameter> mdeim_params(snaps.parameters.begin(),
                                      snaps.parameters.begin() + static_cast<std::ptrdiff_t>(snaps.system_count()));

  for (double eps : c.eps) {
    t0 = Clock::now();
    StateBasis velocity = build_state_basis(snaps.states, eps, fom.state_norm());
    StateBasis pressure;
    if (stokes) {
      pressure = build_state_basis(snaps.pressures, eps, fom.pressure_norm());
      if (c.supremizers) velocity = enrich_supremizers(velocity, pressure, fom.divergence(), fom.state_norm());
    }
    const double basis_ms = ms_since(t0);

    for (MdeimVariant method : c.methods) {
      OfflineEntry e;
      e.method = method;
      e.eps = eps;
      e.basis_ms = basis_ms;
      std::size_t baseline = 0;
      if (memory) {
        memory.reset_peak();
        baseline = memory.peak();
      }
      t0 = Clock::now();
      MdeimInterpolant op;
      if (is_functional(method)) {
        const Assembler& a = fom.assembler();
        auto form = [&a](std::span<const double> x) { return a.stiffness_nonzeros(x); };
        op = build_functional(snaps.fields, form, eps, method).interpolant;
        e.operator_rows = static_cast<Index>(snaps.fields.dims()[0]);
      } else {
        op = build_algebraic(snaps.operators, eps, method, TermKind::operator_term);
        e.operator_rows = static_cast<Index>(snaps.operators.dims()[0]);
      }
      e.operator_ms = ms_since(t0);
      if (memory) e.operator_peak_bytes = memory.peak() - baseline;

      t0 = Clock::now();
      const MdeimVariant algebraic = is_space_time(method) ? MdeimVariant::ST : MdeimVariant::STD;
      MdeimInterpolant rhs = build_algebraic(snaps.rhs, eps, algebraic, TermKind::rhs_term);
      e.rhs_ms = ms_since(t0);

      t0 = Clock::now();
      const RomModel rom = galerkin_compress(fom, method, eps, velocity, pressure, std::move(op), std::move(rhs),
                                             result.config_hash);
      e.compress_ms = ms_since(t0);
      for (std::size_t i = 0; i < mdeim_params.size(); ++i) {
        try {
          online_solve(rom, fom, mdeim_params[i]);
        } catch (const NumericalError& err) {
          throw NumericalError(to_string(method) + " eps=" + eps_tag(eps) + ": reduced system fails on training parameter " +
                               std::to_string(i) + ": " + err.what());
        }
      }
      e.n_s = rom.velocity.n_s();
      e.n_t = rom.velocity.n_t();
      e.n_s_a = rom.op.n_s();
      e.n_t_a = rom.op.n_t();
      e.dir = rom_dir(c, method, eps);
      write_rom(e.dir, rom);
      std::clog << to_string(method) << " eps=" << eps_tag(eps) << ": n_s=" << e.n_s << " n_t=" << e.n_t
                << " n_s^a=" << e.n_s_a << " n_t^a=" << e.n_t_a << " mdeim " << std::fixed << std::setprecision(1)
                << e.operator_ms << " ms\n"
                << std::defaultfloat;
      result.entries.push_back(std::move(e));
    }
  }

  nlohmann::json j;
  j["config_hash"] = hash_hex(result.config_hash);
  j["problem"] = to_string(c.problem);
  j["state_dofs"] = fom.state_size();
  j["pressure_dofs"] = fom.pressure_size();
  j["operator_nonzeros"] = fom.operator_size();
  j["quadrature_points"] = fom.assembler().num_quadrature_points();
  j["steps"] = c.steps;
  j["snapshot_ms"] = result.snapshot_ms;
  j["snapshot_failures"] = nlohmann::json::array();
  for (const auto& [i, msg] : result.failures) j["snapshot_failures"].push_back({{"index", i}, {"message", msg}});
  j["models"] = nlohmann::json::array();
  for (const auto& e : result.entries)
    j["models"].push_back({{"method", to_string(e.method)},
                           {"eps", e.eps},
                           {"dir", e.dir.lexically_relative(c.out).generic_string()},
                           {"basis_ms", e.basis_ms},
                           {"operator_ms", e.operator_ms},
                           {"operator_peak_bytes", e.operator_peak_bytes},
                           {"operator_rows", e.operator_rows},
                           {"rhs_ms", e.rhs_ms},
                           {"compress_ms", e.compress_ms},
                           {"n_s", e.n_s},
                           {"n_t", e.n_t},
                           {"n_s_a", e.n_s_a},
                           {"n_t_a", e.n_t_a}});
  std::ofstream out(c.out / "offline.json");
  if (!out) throw std::runtime_error("cannot write " + (c.out / "offline.json").string());
  out << j.dump(2) << '\n';
  return result;
}

const char* const report_header =
    "method,eps,mu_index,mu_values,E_u,E_p,residual_estimate,bound_total,beta_certified,fom_ms,rom_online_ms,speedup,"
    "n_s,n_t,n_s_a,n_t_a,entries_sampled";

ReportRow report_row(const RomModel& m, std::size_t mu_index, const Parameter& mu, const OnlineResult& r,
                     const ErrorReport& e, double fom_ms, double rom_ms) {
  const bool stokes = m.kind == ProblemKind::stokes;
  ReportRow row;
  row.method = to_string(m.method);
  row.eps = m.eps;
  row.mu_index = mu_index;
  row.mu = mu;
  row.E_u = e.E_u;
  row.E_p = stokes ? e.E_p : 0.0;
  if (e.zero_reference) {
    const bool rom_zero = r.states.norm() == 0.0 && (!stokes || r.pressures.norm() == 0.0);
    row.E_u = rom_zero ? 0.0 : ErrorReport::nan;
    row.E_p = stokes && !rom_zero ? ErrorReport::nan : 0.0;
  }
  row.residual_estimate = e.residual;
  row.bound_total = e.bound_total;
  row.beta_certified = e.certified;
  row.fom_ms = fom_ms;
  row.rom_online_ms = rom_ms;
  row.speedup = speedup({fom_ms}, {rom_ms});
  row.n_s = m.velocity.n_s();
  row.n_t = m.velocity.n_t();
  row.n_s_a = m.op.n_s();
  row.n_t_a = m.op.n_t();
  row.entries_sampled = r.stats.entries_sampled;
  return row;
}

void write_report(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << report_header << '\n';
  for (const auto& r : rows) {
    std::string mu;
    for (std::size_t i = 0; i < r.mu.size(); ++i) mu += (i ? ";" : "") + fmt(r.mu[i]);
    out << r.method << ',' << fmt(r.eps) << ',' << r.mu_index << ',' << mu << ',' << fmt(r.E_u) << ',' << fmt(r.E_p)
        << ',' << fmt(r.residual_estimate) << ',' << fmt(r.bound_total) << ',' << (r.beta_certified ? 1 : 0) << ','
        << fmt(r.fom_ms) << ',' << fmt(r.rom_online_ms) << ',' << fmt(r.speedup) << ',' << r.n_s << ',' << r.n_t
        << ',' << r.n_s_a << ',' << r.n_t_a << ',' << r.entries_sampled << '\n';
  }
}

std::vector<ReportRow> read_report(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == report_header, "read_report: unexpected header");
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream s(line);
    for (std::string cell; std::getline(s, cell, ',');) f.push_back(cell);
    require(f.size() == 17, "read_report: expected 17 columns");
    ReportRow r;
    r.method = f[0];
    r.eps = std::stod(f[1]);
    r.mu_index = std::stoull(f[2]);
    std::istringstream mu(f[3]);
    for (std::string v; std::getline(mu, v, ';');) r.mu.push_back(std::stod(v));
    r.E_u = std::stod(f[4]);
    r.E_p = std::stod(f[5]);
    r.residual_estimate = std::stod(f[6]);
    r.bound_total = std::stod(f[7]);
    r.beta_certified = f[8] == "1";
    r.fom_ms = std::stod(f[9]);
    r.rom_online_ms = std::stod(f[10]);
    r.speedup = std::stod(f[11]);
    r.n_s = std::stoll(f[12]);
    r.n_t = std::stoll(f[13]);
    r.n_s_a = std::stoll(f[14]);
    r.n_t_a = std::stoll(f[15]);
    r.entries_sampled = std::stoll(f[16]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ReportRow> run_online(const RunConfig& c) {
  const FullOrderModel fom = make_model(c);
  const std::uint64_t hash = config_hash(c);
  const ParameterSets sets = draw_parameter_sets(c);

  std::vector<RomModel> models;
  for (double eps : c.eps)
    for (MdeimVariant method : c.methods) {
      const auto dir = rom_dir(c, method, eps);
      if (!std::filesystem::exists(dir / "manifest.json"))
        throw InvalidArgument("run_online: missing reduced model " + dir.string() + " (run offline first)");
      RomModel m = read_rom(dir);
      if (m.config_hash != hash)
        throw InvalidArgument("run_online: " + dir.string() + " was built for configuration " +
                              hash_hex(m.config_hash) + ", current is " + hash_hex(hash));
      models.push_back(std::move(m));
    }

  std::vector<MarchResult> reference;
  std::vector<double> fom_ms;
  for (const auto& mu : sets.test) {
    const auto t0 = Clock::now();
    reference.push_back(fom.solve(mu));
    fom_ms.push_back(ms_since(t0));
  }

  const NormFactors factors = norm_factors(fom.state_norm(), fom.delta());
  std::vector<ReportRow> rows;
  nlohmann::json zero_refs = nlohmann::json::array();
  for (const RomModel& m : models) {
    for (std::size_t i = 0; i < sets.test.size(); ++i) {
      const Parameter& mu = sets.test[i];
      const auto t0 = Clock::now();
      const OnlineResult r = online_solve(m, fom, mu);
      const double rom_ms = ms_since(t0);
      EstimateOptions o;
      o.reference = &reference[i];
      o.coercivity = true;
      o.coercivity_cap = c.coercivity_cap;
      const ErrorReport e = estimate_errors(m, fom, mu, r, factors, o);
      ReportRow row = report_row(m, i, mu, r, e, fom_ms[i], rom_ms);
      if (e.zero_reference) zero_refs.push_back({{"method", row.method}, {"eps", row.eps}, {"mu_index", i}});
      rows.push_back(std::move(row));
    }
  }

  std::filesystem::create_directories(c.out);
  std::ofstream csv(c.out / "report.csv");
  if (!csv) throw std::runtime_error("cannot write " + (c.out / "report.csv").string());
  write_report(csv, rows);
  nlohmann::json j;
  j["config_hash"] = hash_hex(hash);
  j["test_parameters"] = sets.test;
  j["fom_ms"] = fom_ms;
  j["norm_factors"] = {{"inverse", factors.inverse}, {"inverse_sqrt", factors.inverse_sqrt},
                       {"converged", factors.converged}};
  j["zero_reference"] = zero_refs;
  std::ofstream js(c.out / "online.json");
  js << j.dump(2) << '\n';
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<ReportRow>& rows) {
  std::vector<SummaryRow> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const SummaryRow& s) { return s.method == r.method && s.eps == r.eps; });
    if (it == out.end()) {
      out.push_back({r.method, r.eps});
      it = out.end() - 1;
    }
    it->E_u += r.E_u;
    it->E_p += r.E_p;
    it->fom_ms += r.fom_ms;
    it->rom_online_ms += r.rom_online_ms;
    it->entries_sampled += static_cast<double>(r.entries_sampled);
    ++it->count;
  }
  for (auto& s : out) {
    const double n = static_cast<double>(s.count);
    s.E_u /= n;
    s.E_p /= n;
    s.fom_ms /= n;
    s.rom_online_ms /= n;
    s.entries_sampled /= n;
    s.speedup = s.fom_ms / s.rom_online_ms;
  }
  return out;
}

void print_summary(std::ostream& out, const std::vector<SummaryRow>& summary, bool pressure) {
  std::vector<std::string> methods;
  std::vector<double> eps;
  for (const auto& s : summary) {
    if (std::find(methods.begin(), methods.end(), s.method) == methods.end()) methods.push_back(s.method);
    if (std::find(eps.begin(), eps.end(), s.eps) == eps.end()) eps.push_back(s.eps);
  }
  out << std::setw(8) << "eps";
  for (const auto& m : methods) out << " | " << std::setw(9) << (m + " SU") << ' ' << std::setw(pressure ? 21 : 10) << "E";
  out << '\n';
  for (double e : eps) {
    out << std::setw(8) << eps_tag(e);
    for (const auto& m : methods) {
      auto it = std::find_if(summary.begin(), summary.end(),
                             [&](const SummaryRow& s) { return s.method == m && s.eps == e; });
      if (it == summary.end()) {
        out << " | " << std::setw(pressure ? 31 : 20) << "-";
        continue;
      }
      std::ostringstream err;
      err << std::setprecision(3) << it->E_u;
      if (pressure) err << ", " << std::setprecision(3) << it->E_p;
      out << " | " << std::setw(9) << std::fixed << std::setprecision(2) << it->speedup << std::defaultfloat << ' '
          << std::setw(pressure ? 21 : 10) << err.str();
    }
    out << '\n';
  }
}

}  // namespace strb
