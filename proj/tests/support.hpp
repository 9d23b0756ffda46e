#pragma once

#include "strb/hypermatrix.hpp"

#include <cstdint>
#include <random>

namespace testing {

// Seeded helpers for the hand-rolled property tests.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double a = -1.0, double b = 1.0) {
    return std::uniform_real_distribution<double>(a, b)(gen_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }

  strb::Matrix matrix(strb::Index r, strb::Index c) {
    strb::Matrix m(r, c);
    for (strb::Index j = 0; j < c; ++j)
      for (strb::Index i = 0; i < r; ++i) m(i, j) = uniform();
    return m;
  }
  strb::Vector vector(strb::Index n) { return matrix(n, 1).col(0); }

  strb::Matrix spd(strb::Index n) {
    strb::Matrix a = matrix(n, n);
    return a * a.transpose() + static_cast<double>(n) * strb::Matrix::Identity(n, n);
  }

  strb::Hypermatrix hypermatrix(std::size_t a, std::size_t b, std::size_t c) {
    strb::Hypermatrix h({"s", "t", "p"}, {a, b, c});
    for (auto& x : h.data()) x = uniform();
    return h;
  }

 private:
  std::mt19937_64 gen_;
};

inline strb::SparseMatrix sparse(const strb::Matrix& m) { return m.sparseView(); }

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing
