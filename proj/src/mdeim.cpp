#include "strb/mdeim.hpp"

#include <json.hpp>

#include <Eigen/SVD>

#include <cmath>
#include <fstream>
#include <limits>

namespace strb {

std::string to_string(MdeimVariant v) {
  switch (v) {
    case MdeimVariant::STD: return "STD";
    case MdeimVariant::ST: return "ST";
    case MdeimVariant::FUN: return "FUN";
    case MdeimVariant::STFUN: return "STFUN";
  }
  return "?";
}

MdeimVariant parse_variant(const std::string& name) {
  for (MdeimVariant v : {MdeimVariant::STD, MdeimVariant::ST, MdeimVariant::FUN, MdeimVariant::STFUN})
    if (to_string(v) == name) return v;
  throw InvalidArgument("unknown MDEIM variant '" + name + "'");
}

bool is_space_time(MdeimVariant v) { return v == MdeimVariant::ST || v == MdeimVariant::STFUN; }
bool is_functional(MdeimVariant v) { return v == MdeimVariant::FUN || v == MdeimVariant::STFUN; }

namespace {

Index argmax_abs(const Vector& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  return best;
}

Matrix rows_of(const Matrix& m, const std::vector<Index>& idx) {
  Matrix out(static_cast<Index>(idx.size()), m.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Index>(k)) = m.row(idx[k]);
  return out;
}

Vector entries_of(const Vector& v, const std::vector<Index>& idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Index>(k)] = v[idx[k]];
  return out;
}

// Factorizes P^T Phi after checking its conditioning; returns chi.
double factorize(const Matrix& pphi, Eigen::PartialPivLU<Matrix>& lu, const char* axis) {
  Eigen::JacobiSVD<Matrix> svd(pphi);
  const Vector s = svd.singularValues();
  const double limit = 1.0 / (100.0 * std::numeric_limits<double>::epsilon());
  if (s.size() == 0 || !(s[s.size() - 1] > 0.0) || s[0] / s[s.size() - 1] >= limit)
    throw NumericalError(std::string("MDEIM: singular ") + axis + " interpolation matrix");
  lu.compute(pphi);
  return lu.inverse().norm();
}

}  // namespace

std::vector<Index> greedy_indices(const Matrix& basis) {
  require(basis.cols() >= 1, "greedy_indices: empty basis");
  require(basis.rows() >= basis.cols(), "greedy_indices: more columns than rows");
  std::vector<Index> idx;
  const Index first = argmax_abs(basis.col(0));
  if (basis(first, 0) == 0.0) throw NumericalError("greedy_indices: zero column at iteration 1");
  idx.push_back(first);
  for (Index k = 1; k < basis.cols(); ++k) {
    const Matrix v = basis.leftCols(k);
    Eigen::PartialPivLU<Matrix> lu(rows_of(v, idx));
    if (!(lu.rcond() > 1e-14))
      throw NumericalError("greedy_indices: singular interpolation matrix at iteration " + std::to_string(k + 1));
    Vector r = basis.col(k) - v * lu.solve(entries_of(basis.col(k), idx));
    // residual vanishes at the chosen indices up to rounding
    for (Index i : idx) r[i] = 0.0;
    const Index next = argmax_abs(r);
    if (r[next] == 0.0)
      throw NumericalError("greedy_indices: dependent column at iteration " + std::to_string(k + 1));
    idx.push_back(next);
  }
  return idx;
}

MdeimInterpolant::MdeimInterpolant(MdeimVariant variant, TermKind kind, Matrix space_basis,
                                   std::vector<Index> space_samples, Matrix time_basis,
                                   std::vector<Index> time_samples)
    : variant_(variant),
      kind_(kind),
      space_basis_(std::move(space_basis)),
      time_basis_(std::move(time_basis)),
      space_samples_(std::move(space_samples)),
      time_samples_(std::move(time_samples)) {
  require(space_basis_.cols() >= 1, "MdeimInterpolant: empty space basis");
  require(static_cast<Index>(space_samples_.size()) == space_basis_.cols(),
          "MdeimInterpolant: one space sample per basis vector required");
  require(is_space_time(variant_) == (time_basis_.size() > 0),
          "MdeimInterpolant: time basis required exactly for space-time variants");
  require(static_cast<Index>(time_samples_.size()) == time_basis_.cols(),
          "MdeimInterpolant: one time sample per time basis vector required");
  for (Index i : space_samples_) require(i >= 0 && i < space_basis_.rows(), "MdeimInterpolant: sample out of range");
  for (Index i : time_samples_) require(i >= 0 && i < time_basis_.rows(), "MdeimInterpolant: time sample out of range");
  space_pphi_ = rows_of(space_basis_, space_samples_);
  chi_space_ = factorize(space_pphi_, space_lu_, "space");
  if (space_time()) {
    time_pphi_ = rows_of(time_basis_, time_samples_);
    chi_time_ = factorize(time_pphi_, time_lu_, "time");
  }
}

Vector MdeimInterpolant::coefficients(const Vector& sampled) const {
  if (!space_time()) {
    require(sampled.size() == n_s(), "coefficients: expected n_s sampled entries");
    return space_lu_.solve(sampled);
  }
  require(sampled.size() == n_s() * n_t(), "coefficients: expected n_s * n_t sampled entries");
  const Matrix s = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      sampled.data(), n_s(), n_t());
  const Matrix c = space_lu_.solve(s);
  const Matrix ct = time_lu_.solve(Matrix(c.transpose()));  // (P_t Phi_t)^{-1} C^T
  Vector out(n_s() * n_t());
  for (Index is = 0; is < n_s(); ++is)
    for (Index it = 0; it < n_t(); ++it) out[is * n_t() + it] = ct(it, is);
  return out;
}

Matrix MdeimInterpolant::step_coefficients(const Matrix& sampled_steps) const {
  require(!space_time(), "coefficients: per-step sampling applies to space-only interpolants");
  require(sampled_steps.rows() == n_s(), "coefficients: expected n_s rows");
  return space_lu_.solve(sampled_steps);
}

Matrix MdeimInterpolant::coefficient_matrix(const Vector& coefficients) const {
  require(space_time() && coefficients.size() == n_s() * n_t(), "coefficient_matrix: length mismatch");
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      coefficients.data(), n_s(), n_t());
}

Vector MdeimInterpolant::reconstruct(const Vector& coefficients, int step) const {
  if (!space_time()) {
    require(coefficients.size() == n_s(), "reconstruct: coefficient length mismatch");
    return space_basis_ * coefficients;
  }
  require(step >= 1 && step <= time_basis_.rows(), "reconstruct: step out of range");
  return space_basis_ * (coefficient_matrix(coefficients) * time_basis_.row(step - 1).transpose());
}

Matrix MdeimInterpolant::reconstruct_steps(const Matrix& coefficients) const {
  require(!space_time() && coefficients.rows() == n_s(), "reconstruct_steps: coefficient shape mismatch");
  return space_basis_ * coefficients;
}

Matrix MdeimInterpolant::reconstruct_all(const Vector& coefficients) const {
  if (!space_time()) return reconstruct_steps(Matrix(coefficients));
  return space_basis_ * coefficient_matrix(coefficients) * time_basis_.transpose();
}

double MdeimInterpolant::bound_scale() const {
  const double st = std::hypot(snapshot_norm, compressed_norm);
  switch (variant_) {
    case MdeimVariant::STD: return snapshot_norm;
    case MdeimVariant::ST: return st;
    case MdeimVariant::FUN: return reduced_norm + assembler_constant * snapshot_norm;
    case MdeimVariant::STFUN: return reduced_norm * std::sqrt(static_cast<double>(n_t())) + assembler_constant * st;
  }
  return 0.0;
}

MdeimInterpolant build_algebraic(const Hypermatrix& snapshots, double eps, MdeimVariant variant, TermKind kind) {
  require(variant == MdeimVariant::STD || variant == MdeimVariant::ST,
          "build_algebraic: STD or ST variant required");
  require(snapshots.rank() == 3, "build_algebraic: (s, t, p) snapshots required");
  const double norm = snapshots.frobenius_norm();
  require(norm > 0.0, "build_algebraic: degenerate (all-zero) snapshots");
  MdeimInterpolant out;
  if (variant == MdeimVariant::STD) {
    PodResult pod = spod(snapshots.matrix(), eps);
    auto idx = greedy_indices(pod.basis);
    out = MdeimInterpolant(variant, kind, pod.basis, std::move(idx));
    out.space_spectrum = pod.singular_values;
  } else {
    StHosvd h = st_hosvd(snapshots, eps);
    auto is = greedy_indices(h.space.basis);
    auto it = greedy_indices(h.time.basis);
    out = MdeimInterpolant(variant, kind, h.space.basis, std::move(is), h.time.basis, std::move(it));
    out.space_spectrum = h.space.singular_values;
    out.time_spectrum = h.time.singular_values;
    out.compressed_norm = h.compressed_norm;
  }
  out.eps = eps;
  out.snapshot_norm = norm;
  return out;
}

double fit_assembler_constant(const FieldForm& form, const Hypermatrix& fields, const Matrix& field_basis) {
  require(fields.rank() == 3 && static_cast<Index>(fields.dims()[0]) == field_basis.rows(),
          "fit_assembler_constant: field snapshots do not match the basis");
  double worst = 0.0;
  for (std::size_t p = 0; p < fields.dims()[2]; ++p) {
    const Matrix f = fields.slice(p);
    const Matrix e = f - field_basis * (field_basis.transpose() * f);
    const double en = e.norm();
    if (en <= 1e-14 * f.norm()) continue;
    double image = 0.0;
    for (Index j = 0; j < e.cols(); ++j)
      image += form({e.col(j).data(), static_cast<std::size_t>(e.rows())}).squaredNorm();
    worst = std::max(worst, std::sqrt(image) / en);
  }
  return worst;
}

FunctionalMdeim build_functional(const Hypermatrix& field_snapshots, const FieldForm& form, double eps,
                                 MdeimVariant variant) {
  require(is_functional(variant), "build_functional: FUN or STFUN variant required");
  require(field_snapshots.rank() == 3, "build_functional: (q, t, p) field snapshots required");
  const double norm = field_snapshots.frobenius_norm();
  require(norm > 0.0, "build_functional: degenerate (all-zero) field snapshots");
  FunctionalMdeim out;
  double compressed = 0.0;
  if (variant == MdeimVariant::STFUN) {
    StHosvd h = st_hosvd(field_snapshots, eps);
    out.fields.field_space = std::move(h.space);
    out.fields.field_time = std::move(h.time);
    compressed = h.compressed_norm;
  } else {
    out.fields.field_space = spod(field_snapshots.matrix(), eps);
  }
  const Matrix& phi = out.fields.field_space.basis;
  Matrix abar;
  for (Index i = 0; i < phi.cols(); ++i) {
    const Vector nz = form({phi.col(i).data(), static_cast<std::size_t>(phi.rows())});
    if (i == 0) abar.resize(nz.size(), phi.cols());
    abar.col(i) = nz;
  }
  out.fields.reduced_operators = abar;
  PodResult pod = spod(abar, eps);
  auto is = greedy_indices(pod.basis);
  if (variant == MdeimVariant::STFUN) {
    const Matrix& tb = out.fields.field_time.basis;
    auto it = greedy_indices(tb);
    out.interpolant = MdeimInterpolant(variant, TermKind::operator_term, pod.basis, std::move(is), tb, std::move(it));
    out.interpolant.time_spectrum = out.fields.field_time.singular_values;
  } else {
    out.interpolant = MdeimInterpolant(variant, TermKind::operator_term, pod.basis, std::move(is));
  }
  out.interpolant.space_spectrum = pod.singular_values;
  out.interpolant.eps = eps;
  out.interpolant.snapshot_norm = norm;
  out.interpolant.compressed_norm = compressed;
  out.interpolant.reduced_norm = abar.norm();
  out.interpolant.assembler_constant = fit_assembler_constant(form, field_snapshots, phi);
  return out;
}

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem, const std::string& suffix) {
  return stem.string() + suffix;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector to_eigen(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())); }

}  // namespace

void write_interpolant(const std::filesystem::path& stem, const MdeimInterpolant& interp) {
  nlohmann::json j;
  j["variant"] = to_string(interp.variant());
  j["kind"] = interp.kind() == TermKind::operator_term ? "operator" : "rhs";
  j["space_samples"] = interp.space_samples();
  j["time_samples"] = interp.time_samples();
  j["eps"] = interp.eps;
  j["snapshot_norm"] = interp.snapshot_norm;
  j["compressed_norm"] = interp.compressed_norm;
  j["reduced_norm"] = interp.reduced_norm;
  j["assembler_constant"] = interp.assembler_constant;
  j["chi"] = interp.chi();
  j["space_spectrum"] = to_std(interp.space_spectrum);
  j["time_spectrum"] = to_std(interp.time_spectrum);
  write_hypermatrix(with_suffix(stem, ".space.bin"), Hypermatrix::from_matrix(interp.space_basis(), "s", "S"));
  if (interp.space_time())
    write_hypermatrix(with_suffix(stem, ".time.bin"), Hypermatrix::from_matrix(interp.time_basis(), "t", "T"));
  std::ofstream out(with_suffix(stem, ".json"));
  if (!out) throw std::runtime_error("cannot write " + with_suffix(stem, ".json").string());
  out << j.dump(2) << '\n';
}

MdeimInterpolant read_interpolant(const std::filesystem::path& stem) {
  std::ifstream in(with_suffix(stem, ".json"));
  if (!in) throw std::runtime_error("missing interpolant manifest " + with_suffix(stem, ".json").string());
  const nlohmann::json j = nlohmann::json::parse(in);
  const MdeimVariant v = parse_variant(j.at("variant").get<std::string>());
  const TermKind kind = j.at("kind").get<std::string>() == "operator" ? TermKind::operator_term : TermKind::rhs_term;
  Matrix space = read_hypermatrix(with_suffix(stem, ".space.bin")).matrix();
  Matrix time;
  if (is_space_time(v)) time = read_hypermatrix(with_suffix(stem, ".time.bin")).matrix();
  MdeimInterpolant out(v, kind, std::move(space), j.at("space_samples").get<std::vector<Index>>(), std::move(time),
                       j.at("time_samples").get<std::vector<Index>>());
  out.eps = j.at("eps").get<double>();
  out.snapshot_norm = j.at("snapshot_norm").get<double>();
  out.compressed_norm = j.at("compressed_norm").get<double>();
  out.reduced_norm = j.at("reduced_norm").get<double>();
  out.assembler_constant = j.at("assembler_constant").get<double>();
  out.space_spectrum = to_eigen(j.at("space_spectrum").get<std::vector<double>>());
  out.time_spectrum = to_eigen(j.at("time_spectrum").get<std::vector<double>>());
  return out;
}

}  // namespace strb
