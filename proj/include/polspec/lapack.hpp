#pragma once

// Thin wrappers over the LAPACK routines Eigen lacks: the complex QZ
// iteration (zggev) and Schur reordering (ztrsen). Column-major Eigen
// storage maps directly onto LAPACK's expectations.

#include <complex>
#include <stdexcept>
#include <vector>
#include <Eigen/Dense>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace polspec {

struct GeneralizedEigen {
  Eigen::VectorXcd alpha;
  Eigen::VectorXcd beta;
  Eigen::MatrixXcd vectors;  // right eigenvectors, one column per pair
};

// det(A - lambda B) = 0; eigenvalues are alpha(i)/beta(i), beta ~ 0 meaning
// an infinite eigenvalue.
inline GeneralizedEigen qz_eigen(Eigen::MatrixXcd a, Eigen::MatrixXcd b,
                                 bool with_vectors = true) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw std::invalid_argument("qz_eigen: square matrices of equal size required");
  lapack_int n = static_cast<lapack_int>(a.rows());
  GeneralizedEigen out;
  out.alpha.resize(n);
  out.beta.resize(n);
  out.vectors.resize(n, with_vectors ? n : 0);
  Eigen::MatrixXcd vl(1, 1);
  lapack_int info = LAPACKE_zggev(
      LAPACK_COL_MAJOR, 'N', with_vectors ? 'V' : 'N', n, a.data(), n,
      b.data(), n, out.alpha.data(), out.beta.data(), vl.data(), 1,
      with_vectors ? out.vectors.data() : vl.data(), with_vectors ? n : 1);
  if (info != 0) throw std::runtime_error("qz_eigen: zggev failed to converge");
  return out;
}

struct SchurDecomposition {
  Eigen::MatrixXcd t;  // upper triangular
  Eigen::MatrixXcd q;  // unitary, M = Q T Q^*
  Eigen::VectorXcd eigenvalues;
};

inline SchurDecomposition schur(const Eigen::MatrixXcd& m) {
  Eigen::ComplexSchur<Eigen::MatrixXcd> cs(m, true);
  if (cs.info() != Eigen::Success)
    throw std::runtime_error("schur: iteration failed");
  SchurDecomposition out;
  out.t = cs.matrixT();
  out.q = cs.matrixU();
  out.eigenvalues = out.t.diagonal();
  return out;
}

// Reorder a Schur form so the eigenvalues flagged in `select` occupy the
// leading block; the first sum(select) columns of q then span the invariant
// subspace for the selected cluster.
inline void schur_reorder(SchurDecomposition& s, const std::vector<int>& select) {
  lapack_int n = static_cast<lapack_int>(s.t.rows());
  if (static_cast<lapack_int>(select.size()) != n)
    throw std::invalid_argument("schur_reorder: select size mismatch");
  std::vector<lapack_int> sel(select.begin(), select.end());
  Eigen::VectorXcd w(n);
  lapack_int m_out = 0;
  double cond_s = 0, cond_sep = 0;
  lapack_int info = LAPACKE_ztrsen(LAPACK_COL_MAJOR, 'N', 'V', sel.data(), n,
                                   s.t.data(), n, s.q.data(), n, w.data(),
                                   &m_out, &cond_s, &cond_sep);
  if (info != 0) throw std::runtime_error("schur_reorder: ztrsen failed");
  s.eigenvalues = w;
}

inline Eigen::MatrixXcd pinv(const Eigen::MatrixXcd& m, double rtol = 1e-13) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double cut = sv.size() ? sv(0) * rtol : 0.0;
  Eigen::VectorXd inv = sv;
  for (int i = 0; i < sv.size(); ++i) inv(i) = sv(i) > cut ? 1.0 / sv(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

// Least-squares minimum-norm solve via SVD.
inline Eigen::MatrixXcd lstsq(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
                              double rtol = 1e-13) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double cut = sv.size() ? sv(0) * rtol : 0.0;
  Eigen::MatrixXcd ub = svd.matrixU().adjoint() * b;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut)
      ub.row(i) /= sv(i);
    else
      ub.row(i).setZero();
  }
  return svd.matrixV() * ub;
}

// Orthonormal basis of the numerical null space (columns).
inline Eigen::MatrixXcd null_basis(const Eigen::MatrixXcd& m, double tol) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  return svd.matrixV().rightCols(m.cols() - rank);
}

inline int numerical_rank(const Eigen::MatrixXcd& m, double tol) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  return rank;
}

struct Inertia {
  int pos = 0, neg = 0, zero = 0;
};

inline Inertia hermitian_inertia(const Eigen::MatrixXcd& h, double tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  Inertia out;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    double v = es.eigenvalues()(i);
    if (v > tol)
      ++out.pos;
    else if (v < -tol)
      ++out.neg;
    else
      ++out.zero;
  }
  return out;
}

}  // namespace polspec
