#pragma once

// Matrix polynomials A(lambda) = A0 + lambda A1 + ... + lambda^n An with
// square complex coefficients, plus the algebraic operations the rest of
// the toolkit builds on: evaluation, derivatives, adjoint, multiplication,
// right division by a monic polynomial, and structural classification
// (Hermitian-on-the-real-axis, dissipativity certificates, invertibility
// of the extreme coefficients).

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>
#include <Eigen/Dense>

#include "polspec/lapack.hpp"

namespace polspec {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// Error taxonomy shared with the CLI: malformed or inconsistent inputs
// (exit 2), algorithms that lost the numerical ground under their feet
// (exit 3), and asserted mathematical claims that came out false (exit 4).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ClaimFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Tolerances {
  double rank_scale = 0x1.0p-40;  // rank cutoff = m*n*2^-40 * sigma_max
  double real_snap = 1e-8;
  double cluster = 1e-7;
  double residual = 1e-9;

  double rank_cut(int m, int n) const { return m * n * rank_scale; }
};

class MatrixPolynomial {
 public:
  MatrixPolynomial() = default;

  explicit MatrixPolynomial(std::vector<Mat> coeffs) : a_(std::move(coeffs)) {
    if (a_.empty()) throw ValidationError("matrix polynomial needs at least one coefficient");
    const auto rows = a_[0].rows();
    for (const auto& c : a_) {
      if (c.rows() != rows || c.cols() != rows)
        throw ValidationError("coefficients must be square and equal-sized");
      if (!c.allFinite()) throw ValidationError("coefficient contains NaN or Inf");
    }
  }

  int size() const { return static_cast<int>(a_[0].rows()); }
  int degree() const { return static_cast<int>(a_.size()) - 1; }
  const Mat& coeff(int j) const { return a_[j]; }
  Mat& coeff(int j) { return a_[j]; }
  const std::vector<Mat>& coeffs() const { return a_; }

  Mat evaluate(cd lambda) const {
    Mat acc = a_.back();
    for (int j = degree() - 1; j >= 0; --j) acc = (acc * lambda + a_[j]).eval();
    return acc;
  }

  // s-th derivative as a matrix polynomial.
  MatrixPolynomial derivative(int s = 1) const {
    if (s < 0) throw ValidationError("derivative order must be nonnegative");
    if (s > degree()) {
      return MatrixPolynomial({Mat::Zero(size(), size())});
    }
    std::vector<Mat> out;
    out.reserve(degree() - s + 1);
    for (int j = s; j <= degree(); ++j) {
      double f = 1.0;
      for (int t = 0; t < s; ++t) f *= (j - t);
      out.push_back(f * a_[j]);
    }
    return MatrixPolynomial(std::move(out));
  }

  // A~(lambda) = A(conj(lambda))^*, coefficientwise adjoint.
  MatrixPolynomial adjoint() const {
    std::vector<Mat> out;
    out.reserve(a_.size());
    for (const auto& c : a_) out.push_back(c.adjoint());
    return MatrixPolynomial(std::move(out));
  }

  double coeff_scale() const {
    double s = 0;
    for (const auto& c : a_) s = std::max(s, c.norm());
    return s;
  }

  double total_norm() const {
    double s = 0;
    for (const auto& c : a_) s += c.norm();
    return s;
  }

  bool leading_invertible(double tol_factor = 1e-10) const {
    const Mat& an = a_.back();
    Eigen::JacobiSVD<Mat> svd(an);
    double smax = svd.singularValues()(0);
    double smin = svd.singularValues()(svd.singularValues().size() - 1);
    return smax > 0 && smin > tol_factor * std::max(1.0, smax);
  }

  bool zero_invertible(double tol_factor = 1e-10) const {
    Eigen::JacobiSVD<Mat> svd(a_[0]);
    double smax = svd.singularValues()(0);
    double smin = svd.singularValues()(svd.singularValues().size() - 1);
    return smax > 0 && smin > tol_factor * std::max(1.0, smax);
  }

 private:
  std::vector<Mat> a_;
};

inline MatrixPolynomial operator*(const MatrixPolynomial& p, const MatrixPolynomial& q) {
  if (p.size() != q.size()) throw ValidationError("product needs equal matrix sizes");
  std::vector<Mat> out(p.degree() + q.degree() + 1, Mat::Zero(p.size(), p.size()));
  for (int i = 0; i <= p.degree(); ++i)
    for (int j = 0; j <= q.degree(); ++j) out[i + j] += p.coeff(i) * q.coeff(j);
  return MatrixPolynomial(std::move(out));
}

inline MatrixPolynomial operator+(const MatrixPolynomial& p, const MatrixPolynomial& q) {
  if (p.size() != q.size()) throw ValidationError("sum needs equal matrix sizes");
  std::vector<Mat> out(std::max(p.degree(), q.degree()) + 1, Mat::Zero(p.size(), p.size()));
  for (int i = 0; i <= p.degree(); ++i) out[i] += p.coeff(i);
  for (int j = 0; j <= q.degree(); ++j) out[j] += q.coeff(j);
  return MatrixPolynomial(std::move(out));
}

struct DivisionResult {
  MatrixPolynomial quotient;
  MatrixPolynomial remainder;  // degree < divisor degree
};

// A = L*K + R with K monic (leading coefficient I) of degree k <= deg A.
inline DivisionResult right_divide(const MatrixPolynomial& a, const MatrixPolynomial& k) {
  if (a.size() != k.size()) throw ValidationError("right_divide: size mismatch");
  int dk = k.degree();
  if (dk == 0) throw ValidationError("right_divide: divisor must have positive degree");
  if ((k.coeff(dk) - Mat::Identity(k.size(), k.size())).norm() > 1e-12 * (1 + k.coeff_scale()))
    throw ValidationError("right_divide: divisor must be monic");
  if (a.degree() < dk) throw ValidationError("right_divide: divisor degree exceeds dividend");

  int m = a.size();
  std::vector<Mat> rem(a.coeffs());
  std::vector<Mat> quo(a.degree() - dk + 1, Mat::Zero(m, m));
  for (int j = a.degree(); j >= dk; --j) {
    Mat c = rem[j];  // K monic: quotient coefficient is the current leader
    quo[j - dk] = c;
    for (int t = 0; t <= dk; ++t) rem[j - dk + t] -= c * k.coeff(t);
  }
  rem.resize(dk);
  if (rem.empty()) rem.push_back(Mat::Zero(m, m));
  return {MatrixPolynomial(std::move(quo)), MatrixPolynomial(std::move(rem))};
}

enum class DissipativeCertificate { CertifiedByV0, CertifiedByV1, GridVerified, Unknown };

inline const char* to_string(DissipativeCertificate c) {
  switch (c) {
    case DissipativeCertificate::CertifiedByV0: return "certified_by_v0";
    case DissipativeCertificate::CertifiedByV1: return "certified_by_v1";
    case DissipativeCertificate::GridVerified: return "grid_verified";
    default: return "unknown";
  }
}

struct PencilClassification {
  bool is_hermitian_on_real_axis = false;
  bool is_dissipative = false;           // Im (A(t)x,x) <= 0 for all real t
  bool is_dissipative_weighted = false;  // Im (t A(t)x,x) <= 0 for all real t
  DissipativeCertificate dissipative_certificate = DissipativeCertificate::Unknown;
  double max_grid_violation = 0.0;
  bool leading_invertible = false;
  bool zero_invertible = false;
};

namespace detail {

inline Mat imag_part(const Mat& c) { return (c - c.adjoint()) / cd(0, 2); }

// Block tridiagonal certificate matrices. With xi = (x, t x, ..., t^l x):
//   (V0 xi, xi) = 2 Im (A(t)x, x)               all real t
//   (V1 xi, xi) = 2 Im (A(t)x, x) / t           when A0 is Hermitian
// so V0 <= 0 certifies dissipativity and, for Hermitian A0, V1 <= 0
// certifies the lambda-weighted variant Im (t A(t)x, x) <= 0.
inline Mat certificate_block(const MatrixPolynomial& p, int parity) {
  int m = p.size();
  int n = p.degree();
  int nb = (n - parity + 3) / 2;  // smallest block count covering all coefficients
  Mat v = Mat::Zero(nb * m, nb * m);
  auto coeff_imag = [&](int j) -> Mat {
    if (j < 0 || j > n) return Mat::Zero(m, m);
    return imag_part(p.coeff(j));
  };
  for (int h = 0; h < nb; ++h) {
    v.block(h * m, h * m, m, m) = 2.0 * coeff_imag(2 * h + parity);
    if (h + 1 < nb) {
      Mat off = coeff_imag(2 * h + 1 + parity);
      v.block(h * m, (h + 1) * m, m, m) = off;
      v.block((h + 1) * m, h * m, m, m) = off.adjoint();
    }
  }
  return v;
}

}  // namespace detail

inline Mat dissipativity_v0(const MatrixPolynomial& p) { return detail::certificate_block(p, 0); }
inline Mat dissipativity_v1(const MatrixPolynomial& p) { return detail::certificate_block(p, 1); }

// Hermitian check with silent symmetrization within tolerance; a coefficient
// that is close to Hermitian but not within tolerance is left untouched.
inline PencilClassification classify(MatrixPolynomial& p) {
  PencilClassification out;
  out.leading_invertible = p.leading_invertible();
  out.zero_invertible = p.zero_invertible();

  bool herm = true;
  for (int j = 0; j <= p.degree(); ++j) {
    double tol = 1e-12 * (1.0 + p.coeff(j).norm());
    if ((p.coeff(j) - p.coeff(j).adjoint()).norm() <= tol) {
      p.coeff(j) = 0.5 * (p.coeff(j) + p.coeff(j).adjoint()).eval();
    } else {
      herm = false;
    }
  }
  out.is_hermitian_on_real_axis = herm;

  double scale = 1.0 + p.coeff_scale();
  double psd_tol = 1e-10 * scale;

  auto max_eig = [](const Mat& h) {
    Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
  };

  if (herm) {
    // real-axis values are Hermitian: Im (A(t)x,x) identically zero
    out.is_dissipative = true;
    out.is_dissipative_weighted = true;
    out.dissipative_certificate = DissipativeCertificate::CertifiedByV0;
    return out;
  }

  bool v0_ok = max_eig(dissipativity_v0(p)) <= psd_tol;
  bool a0_herm = (p.coeff(0) - p.coeff(0).adjoint()).norm() <= 1e-12 * (1 + p.coeff(0).norm());
  bool v1_ok = a0_herm && max_eig(dissipativity_v1(p)) <= psd_tol;

  // Chebyshev grid on [-R, R], R = 1 + 2 max_j ||A_j||, for both flavors.
  double radius = 1.0 + 2.0 * p.coeff_scale();
  double worst_plain = 0.0, worst_weighted = 0.0;
  const int npts = 101;
  for (int i = 0; i < npts; ++i) {
    double t = radius * std::cos(M_PI * (2 * i + 1) / (2.0 * npts));
    Mat im = detail::imag_part(p.evaluate(cd(t, 0)));
    worst_plain = std::max(worst_plain, max_eig(im));
    worst_weighted = std::max(worst_weighted, max_eig((t * im).eval()));
  }
  out.max_grid_violation = std::max(worst_plain, 0.0);
  out.is_dissipative = v0_ok || worst_plain <= psd_tol * radius;
  out.is_dissipative_weighted = v1_ok || worst_weighted <= psd_tol * radius * radius;

  if (v0_ok)
    out.dissipative_certificate = DissipativeCertificate::CertifiedByV0;
  else if (v1_ok)
    out.dissipative_certificate = DissipativeCertificate::CertifiedByV1;
  else if (out.is_dissipative)
    out.dissipative_certificate = DissipativeCertificate::GridVerified;
  else
    out.dissipative_certificate = DissipativeCertificate::Unknown;
  return out;
}

}  // namespace polspec
