#include "support.hpp"
#include "strb/harness.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace strb;

namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("strb_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig tiny(const fs::path& out) {
  std::istringstream in(R"(
[problem]
kind = heat
[mesh]
lengths = 4 1.5 0.2
divisions = 1 1 1
[time]
T = 0.3
steps = 2
[parameters]
train = 2
mdeim = 2
online = 1
seed = 3
[reduction]
eps = 1e-3
)");
  RunConfig c = parse_config(in);
  c.out = out;
  return c;
}

// Drops the *_ms columns and speedup.
std::vector<ReportRow> untimed(std::vector<ReportRow> rows) {
  for (auto& r : rows) r.fom_ms = r.rom_online_ms = r.speedup = 0.0;
  return rows;
}

bool same(const ReportRow& a, const ReportRow& b) {
  auto eq = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
  return a.method == b.method && a.eps == b.eps && a.mu_index == b.mu_index && a.mu == b.mu && eq(a.E_u, b.E_u) &&
         eq(a.E_p, b.E_p) && eq(a.residual_estimate, b.residual_estimate) && eq(a.bound_total, b.bound_total) &&
         a.beta_certified == b.beta_certified && eq(a.fom_ms, b.fom_ms) && eq(a.rom_online_ms, b.rom_online_ms) &&
         eq(a.speedup, b.speedup) && a.n_s == b.n_s && a.n_t == b.n_t && a.n_s_a == b.n_s_a && a.n_t_a == b.n_t_a &&
         a.entries_sampled == b.entries_sampled;
}

}  // namespace

TEST_CASE("degenerate box gives the corner") {
  const auto p = sample_parameters({2.5, 2.5, 2.5}, {2.5, 2.5, 2.5}, 7, 11);
  REQUIRE(p.size() == 7);
  for (const auto& mu : p) CHECK(mu == Parameter{2.5, 2.5, 2.5});
  CHECK_THROWS_AS(sample_parameters({1.0}, {0.0}, 3, 1), InvalidArgument);
  CHECK_THROWS_AS(sample_parameters({0.0}, {1.0}, 0, 1), InvalidArgument);
}

TEST_CASE("parameter stream is deterministic and follows the documented generator") {
  CHECK(sample_parameters({1, 1, 1}, {10, 10, 10}, 20, 42) == sample_parameters({1, 1, 1}, {10, 10, 10}, 20, 42));
  CHECK(sample_parameters({1, 1, 1}, {10, 10, 10}, 20, 42) != sample_parameters({1, 1, 1}, {10, 10, 10}, 20, 43));
  // SplitMix64 reference output for state 0: 0xe220a8397b1dcdaf.
  CHECK(uniform_draw(0, 0) == static_cast<double>(0xe220a8397b1dcdafULL >> 11) * 0x1.0p-53);
  const auto p = sample_parameters({0.0, 10.0}, {1.0, 20.0}, 3, 5);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(p[i][0] == uniform_draw(5, 2 * i));
    CHECK(p[i][1] == 10.0 + 10.0 * uniform_draw(5, 2 * i + 1));
  }
}

TEST_CASE("uniform draws have the right mean") {
  for (std::uint64_t seed : {1u, 2u, 77u}) {
    const auto p = sample_parameters({0, 0, 0}, {1, 1, 1}, 1000, seed);
    for (std::size_t j = 0; j < 3; ++j) {
      double mean = 0.0;
      for (const auto& mu : p) {
        CHECK(mu[j] >= 0.0);
        CHECK(mu[j] < 1.0);
        mean += mu[j] / 1000.0;
      }
      CHECK(std::abs(mean - 0.5) <= 0.03);
    }
  }
}

TEST_CASE("test parameters avoid the training set") {
  RunConfig c;
  c.n_train = 50;
  c.n_online = 20;
  c.seed = 9;
  const ParameterSets s = draw_parameter_sets(c);
  CHECK(s.train == sample_parameters(c.lower, c.upper, 50, 9));
  REQUIRE(s.test.size() == 20);
  for (const auto& t : s.test)
    for (const auto& r : s.train) CHECK_FALSE(near_duplicate(t, r));

  // A degenerate box cannot provide distinct test points.
  c.lower = c.upper = {3.0, 3.0, 3.0};
  CHECK_THROWS_AS(draw_parameter_sets(c), InvalidArgument);

  CHECK(near_duplicate({1.0, 2.0}, {1.0, 2.0 + 1e-13}));
  CHECK_FALSE(near_duplicate({1.0, 2.0}, {1.0, 2.0 + 1e-10}));
}

TEST_CASE("config parsing") {
  std::istringstream in(R"(
# comment
[problem]
kind = stokes
[mesh]
lengths = 4, 1.5, 0.2
divisions = 16 6 1
[time]
T = 0.15
delta = 0.009375   ; 16 steps
[parameters]
train = 12
mdeim = 10
online = 3
seed = 5
outside = error
[reduction]
eps = 1e-2, 1e-3
methods = FUN STFUN
supremizers = false
[output]
dir = results/stokes
)");
  const RunConfig c = parse_config(in);
  CHECK(c.problem == ProblemKind::stokes);
  CHECK(c.lengths == std::array<double, 3>{4, 1.5, 0.2});
  CHECK(c.divisions == std::array<int, 3>{16, 6, 1});
  CHECK(c.steps == 16);
  CHECK(c.n_train == 12);
  CHECK(c.n_mdeim == 10);
  CHECK(c.n_online == 3);
  CHECK(c.seed == 5);
  CHECK(c.outside == ParametricData::OutsidePolicy::error);
  CHECK(c.eps == std::vector<double>{1e-2, 1e-3});
  CHECK(c.methods == std::vector<MdeimVariant>{MdeimVariant::FUN, MdeimVariant::STFUN});
  CHECK_FALSE(c.supremizers);
  CHECK(c.out == fs::path("results/stokes"));

  auto bad = [](const std::string& text) {
    std::istringstream s(text);
    CHECK_THROWS_AS(parse_config(s), InvalidArgument);
  };
  bad("[mesh]\nsize = 3\n");
  bad("[solver]\nkind = cg\n");
  bad("[mesh]\ndivisions = 2 2\n");
  bad("[time]\nT = 1\nsteps = 3\ndelta = 0.5\n");
  bad("[time]\nT = 1\ndelta = 0.3\n");
  bad("[parameters]\ntrain = 5\nmdeim = 6\n");
  bad("[parameters]\nlower = 1 1\nupper = 2 2 2\n");
  bad("[reduction]\neps = 2\n");
  bad("[reduction]\nmethods = POD\n");
  bad("[parameters]\ntrain = many\n");
}

TEST_CASE("configuration hash") {
  const RunConfig a;
  RunConfig b;
  CHECK(config_hash(a) == config_hash(b));
  b.out = "elsewhere";
  b.eps = {0.5};
  b.methods = {MdeimVariant::ST};
  b.n_online = 3;
  CHECK(config_hash(a) == config_hash(b));
  b.n_train = 81;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.seed = 2;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.divisions[2] = 4;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(hash_hex(0xabcULL) == "0000000000000abc");
  // FNV-1a 64 of the empty string is the offset basis.
  CHECK(hash_hex(0xcbf29ce484222325ULL) == "cbf29ce484222325");
}

TEST_CASE("report round trip") {
  testing::Rng rng(4);
  std::vector<ReportRow> rows;
  for (int i = 0; i < 5; ++i) {
    ReportRow r;
    r.method = i % 2 ? "ST" : "STFUN";
    r.eps = std::pow(10.0, -1 - i);
    r.mu_index = static_cast<std::size_t>(i);
    r.mu = {rng.uniform(1, 10), rng.uniform(1, 10), rng.uniform(1, 10)};
    r.E_u = rng.uniform(0, 1) * 1e-3;
    r.E_p = i == 3 ? ErrorReport::nan : rng.uniform(0, 1);
    r.residual_estimate = rng.uniform(0, 1) / 3.0;
    r.bound_total = 1.0 / 7.0;
    r.beta_certified = i % 3 == 0;
    r.fom_ms = 123.456;
    r.rom_online_ms = 0.1;
    r.speedup = 1234.56;
    r.n_s = 7;
    r.n_t = 3;
    r.n_s_a = 11;
    r.n_t_a = i;
    r.entries_sampled = 1000 + i;
    rows.push_back(r);
  }
  std::stringstream s;
  write_report(s, rows);
  std::string header;
  std::getline(s, header);
  CHECK(header ==
        "method,eps,mu_index,mu_values,E_u,E_p,residual_estimate,bound_total,beta_certified,fom_ms,rom_online_ms,"
        "speedup,n_s,n_t,n_s_a,n_t_a,entries_sampled");
  s.seekg(0);
  const auto back = read_report(s);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(same(back[i], rows[i]));

  std::istringstream wrong("method,eps\n");
  CHECK_THROWS_AS(read_report(wrong), InvalidArgument);
}

TEST_CASE("summary averages per method and eps") {
  std::vector<ReportRow> rows(4);
  for (int i = 0; i < 4; ++i) {
    rows[i].method = i < 2 ? "STD" : "ST";
    rows[i].eps = 1e-2;
    rows[i].E_u = 0.01 * (i + 1);
    rows[i].fom_ms = 100.0;
    rows[i].rom_online_ms = i + 1.0;
    rows[i].entries_sampled = 10 * (i + 1);
  }
  const auto s = summarize(rows);
  REQUIRE(s.size() == 2);
  CHECK(s[0].method == "STD");
  CHECK(s[0].count == 2);
  CHECK(s[0].E_u == doctest::Approx(0.015));
  CHECK(s[0].speedup == doctest::Approx(100.0 / 1.5));
  CHECK(s[1].entries_sampled == doctest::Approx(35.0));
  std::ostringstream out;
  print_summary(out, s, false);
  CHECK(out.str().find("STD SU") != std::string::npos);
  CHECK(out.str().find("0.01") != std::string::npos);
}

TEST_CASE("tiny configuration runs end to end and reproduces itself") {
  const fs::path root = scratch("tiny");
  RunConfig c = tiny(root / "a");
  std::size_t peak = 0;
  MemoryProbe probe{[&] { return ++peak; }, [] {}};
  const OfflineResult off = run_offline(c, probe);
  CHECK(off.failures.empty());
  REQUIRE(off.entries.size() == 4);
  for (const auto& e : off.entries) {
    CHECK(e.operator_peak_bytes > 0);
    CHECK(fs::exists(e.dir / "manifest.json"));
    CHECK(fs::exists(e.dir / "velocity_space.bin"));
    CHECK(fs::exists(e.dir / "operator.json"));
    CHECK(fs::exists(e.dir / "rhs.json"));
  }
  CHECK(fs::exists(c.out / "offline.json"));
  CHECK(fs::exists(snapshot_dir(c) / "manifest.json"));
  const auto rows = run_online(c);
  CHECK(rows.size() == 4);
  CHECK(fs::exists(c.out / "report.csv"));
  CHECK(fs::exists(c.out / "online.json"));
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.E_u));
    CHECK(r.E_p == 0.0);
    CHECK(r.entries_sampled > 0);
  }

  RunConfig d = c;
  d.out = root / "b";
  run_offline(d);
  const auto again = run_online(d);
  const auto u = untimed(rows), v = untimed(again);
  REQUIRE(u.size() == v.size());
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(same(u[i], v[i]));
  for (const auto& e : off.entries) {
    const fs::path rel = e.dir.lexically_relative(c.out);
    for (const char* f : {"velocity_space.bin", "velocity_time.bin"})
      CHECK(slurp(c.out / rel / f) == slurp(d.out / rel / f));
    for (const auto& entry : fs::directory_iterator(c.out / rel))
      CHECK(slurp(entry.path()) == slurp(d.out / rel / entry.path().filename()));
  }

  // Models built for another configuration are refused.
  RunConfig other = c;
  other.seed = 4;
  CHECK_THROWS_AS(run_online(other), InvalidArgument);
  RunConfig missing = c;
  missing.out = root / "none";
  CHECK_THROWS_AS(run_online(missing), InvalidArgument);
  fs::remove_all(root);
}

TEST_CASE("zero data gives zero errors with a flag") {
  const fs::path root = scratch("zero");
  RunConfig c = tiny(root);
  c.methods = {MdeimVariant::STD, MdeimVariant::STFUN};
  run_offline(c);
  const FullOrderModel zero(ProblemKind::heat, std::make_shared<const Mesh>(benchmark_mesh(ProblemKind::heat, c.lengths, c.divisions)),
                            zero_data(ProblemKind::heat, c.T, c.steps));
  const Parameter mu{2.0, 3.0, 4.0};
  const MarchResult ref = zero.solve(mu);
  REQUIRE(ref.states.norm() == 0.0);
  const NormFactors f = norm_factors(zero.state_norm(), zero.delta());
  for (MdeimVariant method : c.methods) {
    const RomModel m = read_rom(rom_dir(c, method, 1e-3));
    const OnlineResult r = online_solve(m, zero, mu);
    EstimateOptions o;
    o.reference = &ref;
    const ErrorReport e = estimate_errors(m, zero, mu, r, f, o);
    CHECK(e.zero_reference);
    const ReportRow row = report_row(m, 0, mu, r, e, 1.0, 1.0);
    CHECK(row.E_u == 0.0);
    CHECK(row.E_p == 0.0);
    CHECK(row.residual_estimate == 0.0);
  }
  fs::remove_all(root);
}
