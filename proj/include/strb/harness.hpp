#pragma once

#include "strb/estimators.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace strb {

/// Experiment configuration. Text form (INI style):
///
///   [problem]     kind = heat | stokes
///   [mesh]        lengths = L W H ; divisions = nx ny nz
///   [time]        T = 0.3 ; steps = 20   (or delta instead of steps)
///   [parameters]  lower = 1 1 1 ; upper = 10 10 10 ; train = 80 ; mdeim = 30 ;
///                 online = 10 ; seed = 1 ; outside = ignore | warn | error
///   [reduction]   eps = 1e-2 1e-3 1e-4 ; methods = STD ST FUN STFUN ;
///                 supremizers = true ; coercivity_cap = 512
///   [output]      dir = out
///
/// Lists are separated by blanks or commas; '#' and ';' start comments.
struct RunConfig {
  ProblemKind problem = ProblemKind::heat;
  std::array<double, 3> lengths{4.0, 1.5, 0.2};
  std::array<int, 3> divisions{28, 10, 3};
  double T = 0.3;
  int steps = 20;
  Parameter lower{1.0, 1.0, 1.0};
  Parameter upper{10.0, 10.0, 10.0};
  std::size_t n_train = 80;
  std::size_t n_mdeim = 30;
  std::size_t n_online = 10;
  std::uint64_t seed = 1;
  ParametricData::OutsidePolicy outside = ParametricData::OutsidePolicy::warn;
  std::vector<double> eps{1e-2, 1e-3, 1e-4};
  std::vector<MdeimVariant> methods{MdeimVariant::STD, MdeimVariant::ST, MdeimVariant::FUN, MdeimVariant::STFUN};
  bool supremizers = true;
  Index coercivity_cap = 512;
  std::filesystem::path out = "out";

  double delta() const { return T / steps; }
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);
/// Normalized text of every field that affects snapshots or reduced models.
std::string canonical_text(const RunConfig& c);
/// FNV-1a 64 of canonical_text.
std::uint64_t config_hash(const RunConfig& c);
std::string hash_hex(std::uint64_t h);

/// Counter-based uniform stream: draw k maps through SplitMix64 of
/// seed + (k + 1) * 0x9E3779B97F4A7C15 to u = (z >> 11) * 2^-53 in [0, 1).
class ParameterStream {
 public:
  ParameterStream(Parameter lower, Parameter upper, std::uint64_t seed);
  Parameter next();
  std::uint64_t counter() const { return counter_; }

 private:
  Parameter lower_;
  Parameter upper_;
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

double uniform_draw(std::uint64_t seed, std::uint64_t k);
std::vector<Parameter> sample_parameters(const Parameter& lower, const Parameter& upper, std::size_t n,
                                         std::uint64_t seed);

/// First n_train draws of the stream, then n_online further draws rejecting
/// any point within 1e-12 relative l-infinity distance of a training point.
struct ParameterSets {
  std::vector<Parameter> train;
  std::vector<Parameter> test;
};
ParameterSets draw_parameter_sets(const RunConfig& c);
bool near_duplicate(const Parameter& a, const Parameter& b, double tol = 1e-12);

FullOrderModel make_model(const RunConfig& c);

/// Current and peak heap bytes, provided by the executable when it counts
/// allocations.
struct MemoryProbe {
  std::function<std::size_t()> peak;
  std::function<void()> reset_peak;
  explicit operator bool() const { return static_cast<bool>(peak); }
};

struct OfflineEntry {
  MdeimVariant method;
  double eps;
  double basis_ms = 0.0;
  double operator_ms = 0.0;  // operator interpolant
  double rhs_ms = 0.0;
  double compress_ms = 0.0;
  std::size_t operator_peak_bytes = 0;  // heap high-water of the operator build above its start
  Index operator_rows = 0;  // rows of the compressed operator snapshots (N_q or N_z)
  Index n_s = 0, n_t = 0, n_s_a = 0, n_t_a = 0;
  std::filesystem::path dir;
};

struct OfflineResult {
  std::uint64_t config_hash = 0;
  double snapshot_ms = 0.0;
  std::vector<OfflineEntry> entries;
  std::vector<std::pair<std::size_t, std::string>> failures;  // snapshot failures
};

std::filesystem::path snapshot_dir(const RunConfig& c);
std::filesystem::path rom_dir(const RunConfig& c, MdeimVariant method, double eps);

/// Snapshots of the training set (reused from disk when the hash matches).
SnapshotSet training_snapshots(const RunConfig& c, const FullOrderModel& fom, bool reuse = true);

/// Builds, checks and persists one reduced model per (method, eps). Each model
/// must solve every MDEIM training parameter; a failure aborts the run.
OfflineResult run_offline(const RunConfig& c, const MemoryProbe& memory = {});

struct ReportRow {
  std::string method;
  double eps = 0.0;
  std::size_t mu_index = 0;
  Parameter mu;
  double E_u = 0.0;
  double E_p = 0.0;
  double residual_estimate = 0.0;
  double bound_total = 0.0;
  bool beta_certified = false;
  double fom_ms = 0.0;
  double rom_online_ms = 0.0;
  double speedup = 0.0;
  Index n_s = 0, n_t = 0, n_s_a = 0, n_t_a = 0;
  Index entries_sampled = 0;
};

extern const char* const report_header;
/// One CSV row. A zero-norm reference reports E = 0 when the ROM solution is
/// zero too and NaN otherwise.
ReportRow report_row(const RomModel& model, std::size_t mu_index, const Parameter& mu, const OnlineResult& rom,
                     const ErrorReport& errors, double fom_ms, double rom_ms);
void write_report(std::ostream& out, const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_report(std::istream& in);

/// Solves FOM and ROM on the test parameters for every persisted model and
/// writes <out>/report.csv. Zero-norm references give E = 0 when the ROM
/// solution vanishes too, and are listed in <out>/online.json.
std::vector<ReportRow> run_online(const RunConfig& c);

/// Per (method, eps) means: E_u, E_p, speedup from mean timings, entries.
struct SummaryRow {
  std::string method;
  double eps = 0.0;
  double E_u = 0.0;
  double E_p = 0.0;
  double fom_ms = 0.0;
  double rom_online_ms = 0.0;
  double speedup = 0.0;
  double entries_sampled = 0.0;
  std::size_t count = 0;
};
std::vector<SummaryRow> summarize(const std::vector<ReportRow>& rows);
/// Rows per eps, columns per method: speedup and {E_u[, E_p]}.
void print_summary(std::ostream& out, const std::vector<SummaryRow>& summary, bool pressure);

}  // namespace strb
