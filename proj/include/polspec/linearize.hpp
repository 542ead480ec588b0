#pragma once

#include "polspec/core.hpp"
#include "polspec/lapack.hpp"

namespace polspec {

// Block-companion pencil P0 - lambda*P1 acting on stacked vectors
// (y, lambda*y, ..., lambda^{n-1} y).  Works for any regular polynomial,
// singular leading or trailing coefficients included.
struct CompanionPair {
  Mat p0;  // first block row [A_0 ... A_{n-1}], identity shifts below
  Mat p1;  // top-right block -A_n, identity subdiagonal
  Eigen::Index block_size = 0;
  Eigen::Index blocks = 0;
};

inline CompanionPair companion_first(const MatrixPolynomial& p) {
  const Eigen::Index n = p.degree();
  const Eigen::Index m = p.size();
  if (n == 0)
    throw ValidationError("companion_first: degree must be at least 1");
  CompanionPair cp;
  cp.block_size = m;
  cp.blocks = n;
  cp.p0 = Mat::Zero(m * n, m * n);
  cp.p1 = Mat::Zero(m * n, m * n);
  for (Eigen::Index j = 0; j < n; ++j)
    cp.p0.block(0, j * m, m, m) = p.coeff(j);
  for (Eigen::Index r = 1; r < n; ++r)
    cp.p0.block(r * m, r * m, m, m) = Mat::Identity(m, m);
  cp.p1.block(0, (n - 1) * m, m, m) = -p.coeff(n);
  for (Eigen::Index r = 1; r < n; ++r)
    cp.p1.block(r * m, (r - 1) * m, m, m) = Mat::Identity(m, m);
  return cp;
}

// Monic companion for invertible leading coefficient, descending stacking
// (lambda^{n-1} y, ..., lambda*y, y): first block row holds
// [-An^{-1}A_{n-1} ... -An^{-1}A_0], identity subdiagonal below.
struct MonicCompanion {
  Mat a;
  Eigen::Index block_size = 0;
  Eigen::Index blocks = 0;
};

inline MonicCompanion companion_monic(const MatrixPolynomial& p) {
  const Eigen::Index n = p.degree();
  const Eigen::Index m = p.size();
  if (n == 0)
    throw ValidationError("companion_monic: degree must be at least 1");
  if (!p.leading_invertible())
    throw ValidationError("companion_monic: leading coefficient is singular");
  Eigen::PartialPivLU<Mat> lu(p.coeff(n));
  MonicCompanion mc;
  mc.block_size = m;
  mc.blocks = n;
  mc.a = Mat::Zero(m * n, m * n);
  for (Eigen::Index j = 0; j < n; ++j)
    mc.a.block(0, j * m, m, m) = -lu.solve(p.coeff(n - 1 - j));
  for (Eigen::Index r = 1; r < n; ++r)
    mc.a.block(r * m, (r - 1) * m, m, m) = Mat::Identity(m, m);
  return mc;
}

// Ascending linearization for invertible A_0: the pencil I + lambda*B with
// B block row 0 = [A0^{-1}A_1 ... A0^{-1}A_n] and -I on the subdiagonal,
// acting on (y, lambda*y, ..., lambda^{n-1} y).
inline Mat companion_ascending(const MatrixPolynomial& p) {
  const Eigen::Index n = p.degree();
  const Eigen::Index m = p.size();
  if (n == 0)
    throw ValidationError("companion_ascending: degree must be at least 1");
  if (!p.zero_invertible())
    throw ValidationError("companion_ascending: constant coefficient is singular");
  Eigen::PartialPivLU<Mat> lu(p.coeff(0));
  Mat b = Mat::Zero(m * n, m * n);
  for (Eigen::Index j = 1; j <= n; ++j)
    b.block(0, (j - 1) * m, m, m) = lu.solve(p.coeff(j));
  for (Eigen::Index r = 1; r < n; ++r)
    b.block(r * m, (r - 1) * m, m, m) = -Mat::Identity(m, m);
  return b;
}

inline cd cpow_int(cd base, Eigen::Index e) {
  cd acc(1.0, 0.0);
  for (Eigen::Index i = 0; i < e; ++i) acc *= base;
  return acc;
}

// Derived chain: lift a root chain y^0..y^s at lambda0 to the stacked space
// of ell blocks, block r of the height-s lift being
// sum_{q=0}^{min(r,s)} C(r,q) lambda0^{r-q} y^{s-q}.
inline std::vector<Vec> derived_chain(const std::vector<Vec>& chain, cd lambda0,
                                      Eigen::Index ell) {
  if (chain.empty())
    throw ValidationError("derived_chain: empty chain");
  const Eigen::Index m = chain.front().size();
  std::vector<std::vector<double>> binom(ell);
  for (Eigen::Index r = 0; r < ell; ++r) {
    binom[r].assign(static_cast<size_t>(r) + 1, 1.0);
    for (Eigen::Index q = 1; q < r; ++q)
      binom[r][q] = binom[r - 1][q - 1] + binom[r - 1][q];
  }
  std::vector<Vec> lifted;
  lifted.reserve(chain.size());
  for (size_t s = 0; s < chain.size(); ++s) {
    Vec v = Vec::Zero(m * ell);
    for (Eigen::Index r = 0; r < ell; ++r) {
      Vec block = Vec::Zero(m);
      const Eigen::Index qmax = std::min<Eigen::Index>(r, static_cast<Eigen::Index>(s));
      for (Eigen::Index q = 0; q <= qmax; ++q)
        block += binom[r][q] * cpow_int(lambda0, r - q) * chain[s - q];
      v.segment(r * m, m) = block;
    }
    lifted.push_back(std::move(v));
  }
  return lifted;
}

namespace detail {

// Two-block family underlying both the plain symmetrizers G_q and the
// indefinite weights W_q.  For q in 0..n the matrix splits as
// diag(T0, T1) with T0 the (n-q)^2 anti-Hankel block built from
// (-1)^q A_{i+j-(n-q-1)} and T1 the q^2 Hankel block built from
// (-1)^{q-1} A_{n-q+1+i+j}; indices outside 0..n give zero blocks.
inline Mat gq_block(const MatrixPolynomial& p, Eigen::Index q, bool adjoint_t0) {
  const Eigen::Index n = p.degree();
  const Eigen::Index m = p.size();
  if (q < 0 || q > n) throw ValidationError("gq_block: q out of range");
  Mat g = Mat::Zero(m * n, m * n);
  const double s0 = (q % 2 == 0) ? 1.0 : -1.0;
  for (Eigen::Index i = 0; i < n - q; ++i)
    for (Eigen::Index j = 0; j < n - q; ++j) {
      const Eigen::Index idx = i + j - (n - q - 1);
      if (idx < 0 || idx > n) continue;
      Mat blk = s0 * p.coeff(idx);
      if (adjoint_t0) blk = blk.adjoint().eval();
      g.block(i * m, j * m, m, m) = blk;
    }
  const double s1 = (q % 2 == 1) ? 1.0 : -1.0;
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index j = 0; j < q; ++j) {
      const Eigen::Index idx = n - q + 1 + i + j;
      if (idx > n) continue;
      g.block((n - q + i) * m, (n - q + j) * m, m, m) = s1 * p.coeff(idx);
    }
  return g;
}

}  // namespace detail

inline Mat symmetrizer_g(const MatrixPolynomial& p, Eigen::Index q = 0) {
  if (p.degree() == 0)
    throw ValidationError("symmetrizer_g: degree must be at least 1");
  return detail::gq_block(p, q, /*adjoint_t0=*/false);
}

// Hermitian weight W_q: take F_q = diag(T0^*, T1), keep F_q strictly above
// the diagonal, F_q^* strictly below, and average on the diagonal.
inline Mat weight_wq(const MatrixPolynomial& p, Eigen::Index q) {
  if (p.degree() == 0)
    throw ValidationError("weight_wq: degree must be at least 1");
  const Eigen::Index m = p.size();
  const Eigen::Index n = p.degree();
  Mat f = detail::gq_block(p, q, /*adjoint_t0=*/true);
  Mat w = Mat::Zero(m * n, m * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i < j)
        w.block(i * m, j * m, m, m) = f.block(i * m, j * m, m, m);
      else if (i > j)
        w.block(i * m, j * m, m, m) =
            f.block(j * m, i * m, m, m).adjoint();
      else
        w.block(i * m, j * m, m, m) =
            0.5 * (f.block(i * m, i * m, m, m) +
                   f.block(i * m, i * m, m, m).adjoint());
    }
  return w;
}

// Spectral half projectors of a Hermitian matrix: orthoprojectors onto the
// span of eigenvectors with positive resp. negative eigenvalue.
struct SpectralSplit {
  Mat plus;
  Mat minus;
  Eigen::Index rank_plus = 0;
  Eigen::Index rank_minus = 0;
};

inline SpectralSplit spectral_split(const Mat& h, double tol = 1e-10) {
  if ((h - h.adjoint()).norm() > tol * (1.0 + h.norm()))
    throw ValidationError("spectral_split: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.adjoint()));
  const Eigen::Index m = h.rows();
  SpectralSplit s;
  s.plus = Mat::Zero(m, m);
  s.minus = Mat::Zero(m, m);
  const double cut = tol * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < m; ++i) {
    const Vec v = es.eigenvectors().col(i);
    if (es.eigenvalues()(i) > cut) {
      s.plus += v * v.adjoint();
      ++s.rank_plus;
    } else if (es.eigenvalues()(i) < -cut) {
      s.minus += v * v.adjoint();
      ++s.rank_minus;
    }
  }
  return s;
}

struct SymmetrizerFamily {
  Mat g;                    // base symmetrizer, anti-Hankel in the coefficients
  std::vector<Mat> w;       // Hermitian weights W_0..W_n
  Mat v_even;               // tridiagonal imaginary-part block form, even slots
  Mat v_odd;                // same with odd slots
  bool leading_split_valid = false;  // odd degree: leading coefficient Hermitian
  SpectralSplit leading_split;       // projectors P+- of A_n (odd degree only)
  bool trailing_split_valid = false;
  SpectralSplit trailing_split;      // projectors Q+- of A_0
};

inline SymmetrizerFamily wq_family(const MatrixPolynomial& p) {
  const Eigen::Index n = p.degree();
  if (n == 0)
    throw ValidationError("wq_family: degree must be at least 1");
  SymmetrizerFamily fam;
  fam.g = symmetrizer_g(p);
  fam.w.reserve(static_cast<size_t>(n) + 1);
  for (Eigen::Index q = 0; q <= n; ++q) fam.w.push_back(weight_wq(p, q));
  fam.v_even = detail::certificate_block(p, 0);
  fam.v_odd = detail::certificate_block(p, 1);
  const double snap = 1e-10 * (1.0 + p.coeff_scale());
  const Mat an = p.coeff(n);
  if ((an - an.adjoint()).norm() <= snap * (1.0 + an.norm())) {
    fam.leading_split_valid = true;
    fam.leading_split = spectral_split(0.5 * (an + an.adjoint()));
  }
  const Mat a0 = p.coeff(0);
  if ((a0 - a0.adjoint()).norm() <= snap * (1.0 + a0.norm())) {
    fam.trailing_split_valid = true;
    fam.trailing_split = spectral_split(0.5 * (a0 + a0.adjoint()));
  }
  return fam;
}

// Layout of the exact skew identities tying W_q to the ascending
// linearization B:  W_{2q} B - (W_{2q} B)^* = i * diag(0_{l-1-q}, Veven, 0_q)
// for q = 0..l-1, and W_{2q-1} B - (W_{2q-1} B)^* =
// -i * diag(0_{l-q}, Vodd, 0_{q-1}) for q = 1..l, the latter requiring
// Hermitian A_0.  Even degree n = 2l; the top weight W_n satisfies neither.
inline Mat skew_identity_rhs(const MatrixPolynomial& p, Eigen::Index widx) {
  const Eigen::Index n = p.degree();
  const Eigen::Index m = p.size();
  if (n % 2 != 0)
    throw ValidationError("skew_identity_rhs: even degree required");
  const Eigen::Index l = n / 2;
  if (widx < 0 || widx >= n)
    throw ValidationError("skew_identity_rhs: weight index out of range");
  Mat rhs = Mat::Zero(m * n, m * n);
  if (widx % 2 == 0) {
    const Eigen::Index q = widx / 2;
    const Mat v = detail::certificate_block(p, 0);
    const Eigen::Index lead = l - 1 - q;
    rhs.block(lead * m, lead * m, v.rows(), v.cols()) = cd(0, 1) * v;
  } else {
    const Eigen::Index q = (widx + 1) / 2;
    const Mat v = detail::certificate_block(p, 1);
    const Eigen::Index lead = l - q;
    rhs.block(lead * m, lead * m, v.rows(), v.cols()) = cd(0, -1) * v;
  }
  return rhs;
}

// Linearization of lambda^2 F + lambda (D + iG) + T with Hermitian
// invertible F, T: descending companion plus the natural indefinite weights.
struct QuadLinearization {
  Mat a_desc;   // companion acting on (lambda*w, w)
  Mat t_big;    // [[-(D+iG), -T], [T, 0]]
  Mat w_big;    // diag(F, T), Hermitian invertible
  Mat w_eff;    // alias of the weight used for root-subspace Gram matrices
  Mat j_sign;   // sign(T) = T |T|^{-1}
};

inline QuadLinearization quad_linearization(const Mat& f, const Mat& d,
                                            const Mat& g, const Mat& t,
                                            double tol = 1e-10) {
  const Eigen::Index m = f.rows();
  if (d.rows() != m || g.rows() != m || t.rows() != m || f.cols() != m ||
      d.cols() != m || g.cols() != m || t.cols() != m)
    throw ValidationError("quad_linearization: size mismatch");
  auto hermitian = [&](const Mat& x) {
    return (x - x.adjoint()).norm() <= tol * (1.0 + x.norm());
  };
  if (!hermitian(f) || !hermitian(d) || !hermitian(g) || !hermitian(t))
    throw ValidationError("quad_linearization: coefficients must be Hermitian");
  Eigen::SelfAdjointEigenSolver<Mat> est(0.5 * (t + t.adjoint()));
  Eigen::SelfAdjointEigenSolver<Mat> esf(0.5 * (f + f.adjoint()));
  const double tcut = tol * (1.0 + est.eigenvalues().cwiseAbs().maxCoeff());
  if (est.eigenvalues().cwiseAbs().minCoeff() <= tcut)
    throw ValidationError("quad_linearization: stiffness block is singular");
  if (esf.eigenvalues().cwiseAbs().minCoeff() <=
      tol * (1.0 + esf.eigenvalues().cwiseAbs().maxCoeff()))
    throw ValidationError("quad_linearization: mass block is singular");

  QuadLinearization ql;
  const Mat b = d + cd(0, 1) * g;
  Eigen::PartialPivLU<Mat> flu(f);
  ql.a_desc = Mat::Zero(2 * m, 2 * m);
  ql.a_desc.block(0, 0, m, m) = -flu.solve(b);
  ql.a_desc.block(0, m, m, m) = -flu.solve(t);
  ql.a_desc.block(m, 0, m, m) = Mat::Identity(m, m);

  ql.t_big = Mat::Zero(2 * m, 2 * m);
  ql.t_big.block(0, 0, m, m) = -b;
  ql.t_big.block(0, m, m, m) = -t;
  ql.t_big.block(m, 0, m, m) = t;

  ql.w_big = Mat::Zero(2 * m, 2 * m);
  ql.w_big.block(0, 0, m, m) = 0.5 * (f + f.adjoint());
  ql.w_big.block(m, m, m, m) = 0.5 * (t + t.adjoint());
  ql.w_eff = ql.w_big;

  Vec signs(m);
  for (Eigen::Index i = 0; i < m; ++i)
    signs(i) = est.eigenvalues()(i) > 0 ? cd(1, 0) : cd(-1, 0);
  ql.j_sign = est.eigenvectors() * signs.asDiagonal() *
              est.eigenvectors().adjoint();
  return ql;
}

}  // namespace polspec
