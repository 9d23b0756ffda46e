#include "alloc_counter.hpp"
#include "strb/harness.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace {

struct Overrides {
  std::string config;
  std::vector<double> eps;
  std::vector<std::string> methods;
  std::uint64_t seed = 0;
  std::string out;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "INI configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--eps", o.eps, "tolerances, comma separated")->delimiter(',');
  cmd->add_option("--methods", o.methods, "STD, ST, FUN, STFUN, comma separated")->delimiter(',');
  cmd->add_option("--seed", o.seed, "parameter sampling seed");
  cmd->add_option("--out", o.out, "output directory");
}

strb::RunConfig resolve(const CLI::App& cmd, const Overrides& o) {
  strb::RunConfig c = o.config.empty() ? strb::RunConfig{} : strb::load_config(o.config);
  if (!o.eps.empty()) c.eps = o.eps;
  if (!o.methods.empty()) {
    c.methods.clear();
    for (const auto& m : o.methods) c.methods.push_back(strb::parse_variant(m));
  }
  if (cmd.count("--seed")) c.seed = o.seed;
  if (!o.out.empty()) c.out = o.out;
  return c;
}

int fom(const strb::RunConfig& c) {
  const auto model = strb::make_model(c);
  std::cout << strb::to_string(c.problem) << ": " << model.state_size() << " state dofs, " << model.pressure_size()
            << " pressure dofs, " << model.operator_size() << " operator nonzeros, "
            << model.assembler().num_quadrature_points() << " quadrature points, " << c.steps << " steps\n";
  const auto s = strb::training_snapshots(c, model, false);
  double total = 0.0;
  for (double t : s.fom_ms) total += t;
  std::cout << s.count() << " snapshots in " << strb::snapshot_dir(c).string() << ", mean solve "
            << std::setprecision(4) << total / std::max<std::size_t>(s.fom_ms.size(), 1) << " ms, "
            << s.failures.size() << " failures\n";
  return s.failures.empty() ? 0 : 1;
}

int offline(const strb::RunConfig& c) {
  const auto r = strb::run_offline(c, tools::allocation_probe());
  std::cout << "config " << strb::hash_hex(r.config_hash) << ", snapshots " << std::fixed << std::setprecision(1)
            << r.snapshot_ms << " ms\n";
  std::cout << std::setw(6) << "method" << std::setw(8) << "eps" << std::setw(6) << "n_s" << std::setw(6) << "n_t"
            << std::setw(7) << "n_s^a" << std::setw(7) << "n_t^a" << std::setw(9) << "rows" << std::setw(12)
            << "mdeim ms" << std::setw(12) << "peak MB" << '\n';
  for (const auto& e : r.entries)
    std::cout << std::setw(6) << strb::to_string(e.method) << std::setw(8) << std::defaultfloat << e.eps << std::fixed
              << std::setw(6) << e.n_s << std::setw(6) << e.n_t << std::setw(7) << e.n_s_a << std::setw(7) << e.n_t_a
              << std::setw(9) << e.operator_rows << std::setw(12) << e.operator_ms << std::setw(12)
              << e.operator_peak_bytes / 1048576.0 << '\n';
  return r.failures.empty() ? 0 : 1;
}

void summary(const std::vector<strb::ReportRow>& rows) {
  bool pressure = false;
  for (const auto& r : rows) pressure = pressure || r.E_p != 0.0;
  strb::print_summary(std::cout, strb::summarize(rows), pressure);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time reduced basis experiments"};
  app.require_subcommand(1);
  Overrides o;
  auto* fom_cmd = app.add_subcommand("fom", "solve the training parameters and store snapshots");
  auto* off_cmd = app.add_subcommand("offline", "build bases, interpolants and reduced models");
  auto* on_cmd = app.add_subcommand("online", "evaluate reduced models on test parameters");
  auto* rep_cmd = app.add_subcommand("report", "per-method mean tables from report CSVs");
  for (auto* cmd : {fom_cmd, off_cmd, on_cmd, rep_cmd}) add_common(cmd, o);
  std::vector<std::string> csvs;
  rep_cmd->add_option("csv", csvs, "report files (default <out>/report.csv)");
  CLI11_PARSE(app, argc, argv);

  try {
    if (*fom_cmd) return fom(resolve(*fom_cmd, o));
    if (*off_cmd) return offline(resolve(*off_cmd, o));
    if (*on_cmd) {
      const auto c = resolve(*on_cmd, o);
      summary(strb::run_online(c));
      std::cout << "wrote " << (c.out / "report.csv").string() << '\n';
      return 0;
    }
    const auto c = resolve(*rep_cmd, o);
    if (csvs.empty()) csvs.push_back((c.out / "report.csv").string());
    std::vector<strb::ReportRow> rows;
    for (const auto& f : csvs) {
      std::ifstream in(f);
      if (!in) throw strb::InvalidArgument("cannot open " + f);
      auto more = strb::read_report(in);
      rows.insert(rows.end(), more.begin(), more.end());
    }
    summary(rows);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
