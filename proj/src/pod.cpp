#include "strb/pod.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace strb {

namespace {

// Two passes of classical Gram-Schmidt, keeping column order.
void reorthonormalize(Matrix& q) {
  for (Index j = 0; j < q.cols(); ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      if (j > 0) {
        Vector c = q.leftCols(j).transpose() * q.col(j);
        q.col(j) -= q.leftCols(j) * c;
      }
      q.col(j).normalize();
    }
  }
}

void fix_signs(Matrix& basis) {
  for (Index j = 0; j < basis.cols(); ++j) {
    Index imax = 0;
    double best = -1.0;
    for (Index i = 0; i < basis.rows(); ++i) {
      if (std::abs(basis(i, j)) > best) {
        best = std::abs(basis(i, j));
        imax = i;
      }
    }
    if (basis(imax, j) < 0) basis.col(j) *= -1.0;
  }
}

}  // namespace

double PodResult::tail_energy() const {
  double tail = 0.0;
  for (Index i = singular_values.size() - 1; i >= rank; --i) tail += singular_values[i] * singular_values[i];
  return tail;
}

Index truncation_rank(const Vector& sigma, double eps) {
  require(sigma.size() > 0, "truncation_rank: empty spectrum");
  require(eps > 0.0 && eps < 1.0, "truncation_rank: eps must lie in (0, 1)");
  for (Index i = 0; i < sigma.size(); ++i) {
    require(sigma[i] >= 0.0, "truncation_rank: negative singular value");
    require(i == 0 || sigma[i] <= sigma[i - 1], "truncation_rank: spectrum not sorted");
  }
  // tail sums accumulated from the small end stay accurate for tiny eps
  const Index n = sigma.size();
  Vector tail(n + 1);
  tail[n] = 0.0;
  for (Index i = n - 1; i >= 0; --i) tail[i] = tail[i + 1] + sigma[i] * sigma[i];
  const double total = tail[0];
  if (total == 0.0) return 1;
  for (Index r = 1; r <= n; ++r)
    if (tail[r] <= eps * eps * total) return r;
  return n;
}

namespace {

struct GramPod {
  Matrix left;   // unit left singular vectors of the resolved modes
  Vector sigma;  // resolved singular values, nonincreasing
};

// Singular pairs from the eigendecomposition of the smaller Gram matrix. Values
// below sqrt(machine eps) * sigma_max are not resolved by this path and dropped.
GramPod gram_pod(const Matrix& a) {
  const Index m = std::min(a.rows(), a.cols());
  Vector sigma(m);
  Matrix left(a.rows(), m);
  const bool tall = a.cols() <= a.rows();
  if (tall) {
    const Matrix gram = a.transpose() * a;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    if (eig.info() != Eigen::Success) throw NumericalError("spod: eigendecomposition failed");
    for (Index i = 0; i < m; ++i) {
      const Vector v = eig.eigenvectors().col(m - 1 - i);
      left.col(i) = a * v;
      sigma[i] = left.col(i).norm();
    }
  } else {
    const Matrix gram = a * a.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    if (eig.info() != Eigen::Success) throw NumericalError("spod: eigendecomposition failed");
    for (Index i = 0; i < m; ++i) {
      left.col(i) = eig.eigenvectors().col(m - 1 - i);
      sigma[i] = (a.transpose() * left.col(i)).norm();
    }
  }

  // singular values recomputed as column norms can lose their ordering by a
  // few ulps, restore it
  std::vector<Index> order(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return sigma[x] > sigma[y]; });
  const double cutoff = std::sqrt(std::numeric_limits<double>::epsilon()) * sigma[order[0]];
  Index nonzero = 0;
  while (nonzero < m && sigma[order[static_cast<std::size_t>(nonzero)]] >= cutoff && sigma[order[static_cast<std::size_t>(nonzero)]] > 0.0)
    ++nonzero;
  GramPod out{Matrix(a.rows(), nonzero), Vector(nonzero)};
  for (Index i = 0; i < nonzero; ++i) {
    const Index k = order[static_cast<std::size_t>(i)];
    out.sigma[i] = sigma[k];
    out.left.col(i) = tall ? Vector(left.col(k) / sigma[k]) : Vector(left.col(k));
  }
  return out;
}

}  // namespace

PodResult spod(const Matrix& u, double eps, const NormMatrix* weight) {
  require(u.size() > 0, "spod: empty snapshot matrix");
  require(!weight || weight->dim() == u.rows(), "spod: weight dimension mismatch");
  require(eps > 0.0 && eps < 1.0, "spod: eps must lie in (0, 1)");
  const Matrix a = weight ? weight->apply_factor(u) : u;
  require(a.cwiseAbs().maxCoeff() > 0.0, "spod: all-zero snapshots");

  GramPod g = gram_pod(a);
  Matrix left = g.left;
  std::vector<double> sig(g.sigma.data(), g.sigma.data() + g.sigma.size());

  // When the resolved modes do not meet the tolerance, the unresolved part is
  // recovered by a Gram POD of the projection residual, which is resolved
  // relative to its own size.
  const double norm = a.norm();
  const Index m = std::min(a.rows(), a.cols());
  for (int pass = 0; pass < 3 && static_cast<Index>(sig.size()) < m; ++pass) {
    Matrix q = left;
    reorthonormalize(q);
    const Matrix resid = a - q * (q.transpose() * a);
    const double rn = resid.norm();
    if (rn <= eps * norm || rn <= 1e-13 * norm) break;
    GramPod extra = gram_pod(resid);
    const Index add = std::min(extra.sigma.size(), m - static_cast<Index>(sig.size()));
    if (add == 0) break;
    left.conservativeResize(Eigen::NoChange, left.cols() + add);
    left.rightCols(add) = extra.left.leftCols(add);
    sig.insert(sig.end(), extra.sigma.data(), extra.sigma.data() + add);
  }

  const Index resolved = static_cast<Index>(sig.size());
  std::vector<Index> order(static_cast<std::size_t>(resolved));
  for (Index i = 0; i < resolved; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return sig[static_cast<std::size_t>(x)] > sig[static_cast<std::size_t>(y)]; });
  Vector sigma = Vector::Zero(m);
  for (Index i = 0; i < resolved; ++i) sigma[i] = sig[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];

  PodResult out;
  out.tolerance = eps;
  out.singular_values = sigma;
  out.rank = std::min(truncation_rank(sigma, eps), resolved);
  Matrix q(a.rows(), out.rank);
  for (Index i = 0; i < out.rank; ++i) q.col(i) = left.col(order[static_cast<std::size_t>(i)]);
  reorthonormalize(q);
  fix_signs(q);
  if (weight) {
    out.basis = weight->solve_factor(q);
    // sign convention applies to the returned basis
    fix_signs(out.basis);
  } else {
    out.basis = std::move(q);
  }
  return out;
}

PodResult tpod_time(const Matrix& u_time_major, double eps) { return spod(u_time_major, eps); }

Matrix compress_space(const Hypermatrix& u, const Matrix& space_basis, const NormMatrix* space_weight) {
  require(u.rank() == 3, "compress_space: (s, t, p) snapshots required");
  require(static_cast<Index>(u.dims()[0]) == space_basis.rows(), "compress_space: basis row mismatch");
  const Matrix xu = space_weight ? Matrix(space_weight->matrix() * u.matrix()) : Matrix(u.matrix());
  const Matrix c = space_basis.transpose() * xu;
  Hypermatrix compressed({"S", "t", "p"},
                         {static_cast<std::size_t>(space_basis.cols()), u.dims()[1], u.dims()[2]},
                         std::vector<double>(c.data(), c.data() + c.size()));
  Hypermatrix tm = reshape(compressed, {"t", "S", "p"}, std::pair<std::size_t, std::size_t>{1, 2});
  return tm.matrix();
}

StHosvd st_hosvd(const Hypermatrix& u, double eps, const NormMatrix* space_weight) {
  require(u.rank() == 3, "st_hosvd: (s, t, p) snapshots required");
  StHosvd out;
  out.space = spod(u.matrix(), eps, space_weight);
  const Matrix tm = compress_space(u, out.space.basis, space_weight);
  out.compressed_norm = tm.norm();
  out.time = tpod_time(tm, eps);
  return out;
}

void write_pod(const std::filesystem::path& basis_path, const PodResult& pod) {
  write_hypermatrix(basis_path, Hypermatrix::from_matrix(pod.basis, "s", "S"));
  auto sidecar = basis_path;
  sidecar.replace_extension(".spectrum.csv");
  std::ofstream out(sidecar);
  if (!out) throw std::runtime_error("cannot write " + sidecar.string());
  out << "index,sigma\n" << std::setprecision(17);
  for (Index i = 0; i < pod.singular_values.size(); ++i) out << i << ',' << pod.singular_values[i] << '\n';
  out << "# rank=" << pod.rank << " tolerance=" << pod.tolerance << '\n';
}

PodResult read_pod(const std::filesystem::path& basis_path) {
  PodResult pod;
  Hypermatrix h = read_hypermatrix(basis_path);
  pod.basis = h.matrix();
  pod.rank = pod.basis.cols();
  auto sidecar = basis_path;
  sidecar.replace_extension(".spectrum.csv");
  std::ifstream in(sidecar);
  if (!in) throw std::runtime_error("missing spectrum sidecar " + sidecar.string());
  std::string line;
  std::getline(in, line);
  std::vector<double> sigma;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto pos = line.find("tolerance=");
      if (pos != std::string::npos) pod.tolerance = std::stod(line.substr(pos + 10));
      continue;
    }
    sigma.push_back(std::stod(line.substr(line.find(',') + 1)));
  }
  pod.singular_values = Eigen::Map<Vector>(sigma.data(), static_cast<Index>(sigma.size()));
  return pod;
}

}  // namespace strb
