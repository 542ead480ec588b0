#pragma once

// Deterministic random generation for tests and randomized checks.
// SplitMix64 core with a Box-Muller normal; identical streams on every
// platform regardless of libstdc++ distribution internals.

#include <cmath>
#include <complex>
#include <cstdint>
#include <Eigen/Dense>

namespace polspec {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::complex<double> cnormal() {
    double re = normal();
    double im = normal();
    return {re * M_SQRT1_2, im * M_SQRT1_2};
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

inline Eigen::MatrixXcd rand_matrix(Rng& rng, int rows, int cols) {
  Eigen::MatrixXcd a(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) a(i, j) = rng.cnormal();
  return a;
}

inline Eigen::MatrixXcd rand_hermitian(Rng& rng, int n) {
  Eigen::MatrixXcd a = rand_matrix(rng, n, n);
  return 0.5 * (a + a.adjoint()).eval();
}

inline Eigen::MatrixXcd rand_posdef(Rng& rng, int n, double shift = 0.1) {
  Eigen::MatrixXcd b = rand_matrix(rng, n, n);
  return (b * b.adjoint() + shift * Eigen::MatrixXcd::Identity(n, n)).eval();
}

inline Eigen::MatrixXcd rand_psd_singular(Rng& rng, int n, int rank) {
  Eigen::MatrixXcd b = rand_matrix(rng, n, rank);
  return (b * b.adjoint()).eval();
}

inline Eigen::MatrixXcd rand_unitary(Rng& rng, int n) {
  Eigen::MatrixXcd a = rand_matrix(rng, n, n);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
  Eigen::MatrixXcd q = qr.householderQ();
  Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    std::complex<double> d = r(j, j);
    double ad = std::abs(d);
    q.col(j) *= (ad > 0) ? d / ad : 1.0;
  }
  return q;
}

// Hermitian with prescribed inertia (pos, neg, zero counts must sum to n).
inline Eigen::MatrixXcd rand_with_inertia(Rng& rng, int pos, int neg, int zero) {
  int n = pos + neg + zero;
  Eigen::VectorXd d(n);
  int k = 0;
  for (int i = 0; i < pos; ++i) d(k++) = 0.2 + rng.uniform();
  for (int i = 0; i < neg; ++i) d(k++) = -(0.2 + rng.uniform());
  for (int i = 0; i < zero; ++i) d(k++) = 0.0;
  Eigen::MatrixXcd u = rand_unitary(rng, n);
  return (u * d.asDiagonal() * u.adjoint()).eval();
}

}  // namespace polspec
