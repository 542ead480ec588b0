#pragma once

// Independent oracles for the test suite. Everything here is deliberately
// implemented through a different route than the library under test:
// residues by contour quadrature, eigenvalues by a plain dense solver on an
// explicitly inverted companion, matrix entries by direct quadrature. Tests
// compare library output against these, never against the library itself.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "polspec/core.hpp"
#include "polspec/rng.hpp"

namespace oracle {

using polspec::cd;
using polspec::Mat;
using polspec::MatrixPolynomial;
using polspec::Vec;

// Laurent coefficient C_j of A(lambda)^-1 about lambda0, j may be negative.
// Trapezoid rule on a circle is spectrally accurate for analytic integrands.
inline Mat laurent_coefficient(const MatrixPolynomial& p, cd lambda0, int j,
                               double radius, int nodes = 64) {
  const int m = p.size();
  Mat acc = Mat::Zero(m, m);
  for (int t = 0; t < nodes; ++t) {
    double th = 2.0 * M_PI * t / nodes;
    cd w = radius * std::exp(cd(0, th));
    cd lam = lambda0 + w;
    Mat inv = p.evaluate(lam).partialPivLu().solve(Mat::Identity(m, m));
    // 1/(2 pi i) \oint A^-1 (lam-lam0)^{-j-1} dlam, trapezoid on the circle
    acc += inv * std::pow(w, -j) * (1.0 / nodes);
  }
  return acc;
}

// Eigenvalues of a regular matrix polynomial through a dense standard
// eigensolver on the (possibly shifted) monic companion. Independent of the
// QZ path used by the library.
inline std::vector<cd> dense_polyeig(const MatrixPolynomial& p) {
  const int m = p.size();
  const int n = p.degree();
  if (n == 0) return {};

  // shift so the leading and trailing coefficients are safely invertible
  double shift = 0.0;
  auto leading_ok = [&](const MatrixPolynomial& q) {
    Eigen::JacobiSVD<Mat> svd(q.coeff(q.degree()));
    const auto& sv = svd.singularValues();
    return sv(sv.size() - 1) > 1e-8 * std::max(1.0, sv(0));
  };
  MatrixPolynomial q = p;
  polspec::Rng rng(12345);
  for (int attempt = 0; attempt < 8 && !leading_ok(q); ++attempt) {
    // reverse: eigenvalues invert; mu = 1/lambda handles singular leaders
    std::vector<Mat> rev;
    for (int t = n; t >= 0; --t) rev.push_back(p.coeff(t));
    q = MatrixPolynomial(rev);
    if (leading_ok(q)) {
      std::vector<cd> mus = dense_polyeig(q);
      std::vector<cd> out;
      for (cd mu : mus)
        if (std::abs(mu) > 1e-10) out.push_back(1.0 / mu);
      return out;
    }
    // random real shift as a fallback
    shift = rng.uniform(-2.0, 2.0);
    std::vector<Mat> shifted(n + 1, Mat::Zero(m, m));
    for (int t = 0; t <= n; ++t) {
      // coefficients of A(lambda + shift)
      double binom = 1.0;
      for (int s = t; s <= n; ++s) {
        if (s > t) binom = binom * s / (s - t);
        double c = 1.0;
        for (int u = 0; u < s - t; ++u) c *= shift;
        double ch = 1.0;  // choose(s, t)
        for (int u = 0; u < t; ++u) ch = ch * (s - u) / (u + 1);
        shifted[t] += ch * c * p.coeff(s);
      }
    }
    q = MatrixPolynomial(shifted);
  }

  Mat an_inv = q.coeff(n).partialPivLu().solve(Mat::Identity(m, m));
  Mat comp = Mat::Zero(m * n, m * n);
  for (int j = 0; j < n; ++j)
    comp.block(0, j * m, m, m) = -an_inv * q.coeff(n - 1 - j);
  if (n > 1) comp.block(m, 0, m * (n - 1), m * (n - 1)) =
      Mat::Identity(m * (n - 1), m * (n - 1));
  Eigen::ComplexEigenSolver<Mat> es(comp, false);
  std::vector<cd> out;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    out.push_back(es.eigenvalues()(i) + shift);
  return out;
}

// residual of the chain equations sum_{s'<=s} (1/s'!) A^(s')(lambda0) y^{s-s'}
inline double chain_residual(const MatrixPolynomial& p, cd lambda0,
                             const std::vector<Vec>& chain) {
  double worst = 0.0;
  std::vector<Mat> dv;
  for (int s = 0; s < static_cast<int>(chain.size()); ++s) {
    double fact = 1.0;
    for (int t = 1; t <= s; ++t) fact *= t;
    dv.push_back(p.derivative(s).evaluate(lambda0) / fact);
  }
  for (int s = 0; s < static_cast<int>(chain.size()); ++s) {
    Vec acc = Vec::Zero(p.size());
    for (int sp = 0; sp <= s; ++sp) acc += dv[sp] * chain[s - sp];
    worst = std::max(worst, acc.norm());
  }
  return worst;
}

// u_k^s(t) = e^{i lambda t} sum_j (it)^j / j! y^{s-j} and its trace
// ((-i d/dt)^r u)(0), r = 0..depth-1.
inline Vec elementary_solution(const std::vector<Vec>& chain, int s, cd lambda, double t) {
  Vec acc = Vec::Zero(chain[0].size());
  double fact = 1.0;
  for (int j = 0; j <= s; ++j) {
    if (j > 0) fact *= j;
    acc += std::pow(cd(0, t), j) / fact * chain[s - j];
  }
  return std::exp(cd(0, 1) * lambda * t) * acc;
}

inline std::vector<Vec> elementary_trace(const std::vector<Vec>& chain, int s,
                                         cd lambda, int depth) {
  // coefficients c_j of the polynomial part, then repeated application of
  // (-i d/dt): term_j -> lambda term_j + term_{j-1}
  std::vector<Vec> terms(s + 1, Vec::Zero(chain[0].size()));
  for (int j = 0; j <= s; ++j) terms[j] = chain[s - j];
  std::vector<Vec> out;
  std::vector<Vec> cur = terms;
  for (int r = 0; r < depth; ++r) {
    out.push_back(cur[0]);
    std::vector<Vec> next(cur.size(), Vec::Zero(chain[0].size()));
    for (int j = 0; j < static_cast<int>(cur.size()); ++j) {
      next[j] = lambda * cur[j];
      if (j + 1 < static_cast<int>(cur.size())) next[j] += cur[j + 1];
    }
    cur = next;
  }
  return out;
}

// ---- structured random instances ------------------------------------------

// Hermitian quadratic with invertible leading coefficient.
inline MatrixPolynomial random_hermitian_quadratic(polspec::Rng& rng, int m) {
  Mat a0 = polspec::rand_hermitian(rng, m);
  Mat a1 = polspec::rand_hermitian(rng, m);
  Mat a2 = polspec::rand_hermitian(rng, m);
  // push the leading coefficient away from singularity
  Eigen::SelfAdjointEigenSolver<Mat> es(a2);
  Eigen::VectorXd d = es.eigenvalues();
  for (int i = 0; i < m; ++i)
    if (std::abs(d(i)) < 0.3) d(i) = d(i) >= 0 ? 0.3 : -0.3;
  a2 = es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
  return MatrixPolynomial({a0, a1, a2});
}

// Dissipative quadratic satisfying: invertible leading coefficient,
// Im (A(t)x,x) <= 0 on the real axis, and a real point with numerical range
// off zero (the Hermitian part of A2 is positive definite, so large real
// points qualify).
inline MatrixPolynomial random_dissipative_quadratic(polspec::Rng& rng, int m,
                                                     bool strict_damping = false) {
  Mat h0 = polspec::rand_hermitian(rng, m);
  Mat h1 = polspec::rand_hermitian(rng, m);
  Mat h2 = polspec::rand_posdef(rng, m, 0.4);
  Mat p0 = strict_damping ? polspec::rand_posdef(rng, m, 0.2)
                          : polspec::rand_psd_singular(rng, m, std::max(1, m / 2));
  Mat p2 = polspec::rand_psd_singular(rng, m, std::max(1, m / 2));
  cd mi(0, -1);
  return MatrixPolynomial({h0 + mi * p0, h1, h2 + mi * p2});
}

// W-dissipative linear pair: T = S + iP with P >= 0, W Hermitian invertible.
struct LinearPair {
  Mat t, w;
};

inline LinearPair random_w_dissipative(polspec::Rng& rng, int n, int p_rank) {
  Mat s = polspec::rand_hermitian(rng, n);
  Mat p = p_rank == 0 ? Mat::Zero(n, n) : polspec::rand_psd_singular(rng, n, p_rank);
  int neg = rng.uniform_int(0, n / 2);
  Mat w = polspec::rand_with_inertia(rng, n - neg, neg, 0);
  return {s + cd(0, 1) * p, w};
}

// direct-quadrature Fourier coefficient of a smooth periodic function
inline cd fourier_coeff(const std::function<cd(double)>& f, int j, int grid = 512) {
  cd acc = 0;
  for (int t = 0; t < grid; ++t) {
    double x = 2.0 * M_PI * t / grid;
    acc += f(x) * std::exp(cd(0, -j * x));
  }
  return acc / static_cast<double>(grid);
}

inline double eckart_young_distance(const Mat& a, int rank) {
  Eigen::JacobiSVD<Mat> svd(a);
  const auto& sv = svd.singularValues();
  if (rank >= sv.size()) return 0.0;
  return sv(rank);
}

// finite-difference derivative of a tracked eigenvalue branch
inline cd fd_eigenvalue_derivative(const std::function<std::vector<cd>(double)>& spectrum,
                                   double w0, cd lambda0, double h) {
  auto nearest = [&](double w) {
    std::vector<cd> eigs = spectrum(w);
    cd best = eigs[0];
    for (cd e : eigs)
      if (std::abs(e - lambda0) < std::abs(best - lambda0)) best = e;
    return best;
  };
  return (nearest(w0 + h) - nearest(w0 - h)) / (2.0 * h);
}

}  // namespace oracle
