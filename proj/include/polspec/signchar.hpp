// Sign characteristics at real eigenvalues.
//
// Three graded constructions: the inertia rule on the kernel for semisimple
// eigenvalues, the normal canonical system for Hermitian pencils (adjoint
// chain equals +-1 times the direct chain), and the regular canonical
// system for dissipative pencils (the relation holds for the middle element
// of odd-length chains modulo the span S0 of truncated chains; even-length
// chains carry no sign and get 0).  Group velocity of a propagating wave
// closes the module: (L'(lambda)w, w) / (2 omega (Rw, w)) with a
// finite-difference continuation cross-check.

#pragma once

#include <polspec/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace polspec {

struct SemisimpleSigns {
  cd eigenvalue;
  std::vector<Vec> basis;  // scaled so that (A'(lambda) w, w) = sign
  std::vector<int> signs;
  Eigen::Index positive() const {
    return std::count(signs.begin(), signs.end(), 1);
  }
  Eigen::Index negative() const {
    return std::count(signs.begin(), signs.end(), -1);
  }
};

struct SignedChain {
  std::vector<Vec> vectors;
  int sign = 0;  // 0 exactly for even-length chains of dissipative pencils
};

struct SignedCanonicalSystem {
  cd eigenvalue;
  std::vector<SignedChain> chains;
  std::vector<std::vector<Vec>> adjoint_chains;
  Mat s0;  // orthonormal basis of the truncated-chain span
  double residual = -1.0;
};

struct GroupVelocityReport {
  double eigenvalue = 0.0;
  Vec amplitude;
  double value = 0.0;            // 1 / lambda'(omega)
  double fd_value = 0.0;         // continuation finite-difference cross-check
  double derivative_form = 0.0;  // (L'(lambda) w, w); same sign as value
};

namespace detail {

inline double require_real(cd lambda0, const Tolerances& tol,
                           const char* context) {
  if (std::abs(lambda0.imag()) > tol.real_snap * (1.0 + std::abs(lambda0)))
    throw ValidationError(std::string(context) +
                          ": eigenvalue must be real");
  return lambda0.real();
}

inline void hermitize_checked(Mat& h, double rel, const char* context) {
  const double dev = (h - h.adjoint()).norm();
  if (dev > rel * (1.0 + h.norm()))
    throw NumericalError(std::string(context) +
                         ": matrix fails the Hermitian check, deviation " +
                         std::to_string(dev));
  h = 0.5 * (h + h.adjoint()).eval();
}

inline Mat orthonormal_cols(const Mat& a, double rel_cut) {
  if (a.cols() == 0) return Mat(a.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return Mat(a.rows(), 0);
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) > rel_cut * sv(0)) ++r;
  return svd.matrixU().leftCols(r);
}

}  // namespace detail

// Inertia-signed kernel basis at a real semisimple eigenvalue: diagonalize
// the form (A'(lambda0) x, y) on Ker A(lambda0).  Basis vectors are scaled
// so the form value is exactly the sign.
inline SemisimpleSigns sign_characteristics_semisimple(
    const MatrixPolynomial& p, cd lambda0, const Tolerances& tol = {}) {
  const double lc =
      detail::require_real(lambda0, tol, "sign_characteristics_semisimple");
  auto cs = canonical_system(p, cd(lc), tol);
  const double lpol =
      detail::require_real(cs.eigenvalue, tol, "sign_characteristics_semisimple");

  Mat kernel(p.size(), static_cast<Eigen::Index>(cs.chains.size()));
  for (size_t k = 0; k < cs.chains.size(); ++k)
    kernel.col(static_cast<Eigen::Index>(k)) = cs.chains[k].front();
  Mat q = detail::orthonormal_cols(kernel, 1e-12);
  if (q.cols() != kernel.cols())
    throw NumericalError(
        "sign_characteristics_semisimple: kernel basis is rank deficient");

  const Mat deriv = p.derivative(1).evaluate(cd(lc));
  Mat gram = q.adjoint() * deriv * q;
  detail::hermitize_checked(gram, 1e-6, "sign_characteristics_semisimple");

  Eigen::SelfAdjointEigenSolver<Mat> es(gram);
  const double cut = 1e-8 * (1.0 + deriv.norm());
  SemisimpleSigns out;
  out.eigenvalue = cd(lpol);
  for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
    const double mu = es.eigenvalues()(j);
    if (std::abs(mu) <= cut)
      throw ValidationError(
          "sign_characteristics_semisimple: degenerate derivative form on "
          "the kernel, eigenvalue " +
          std::to_string(mu));
    out.basis.push_back(q * es.eigenvectors().col(j) / std::sqrt(std::abs(mu)));
    out.signs.push_back(mu > 0 ? 1 : -1);
  }
  for (const auto& chain : cs.chains)
    if (chain.size() > 1)
      throw ValidationError(
          "sign_characteristics_semisimple: eigenvalue is not semisimple");
  return out;
}

// Normal canonical system of a Hermitian pencil at a real eigenvalue:
// re-chooses the chains so the adjoint system is sign times the direct one.
// Follows the constructive existence proof operator by operator: the Laurent
// coefficients L_0..L_P of A(lambda)^{-1} at the pole are Hermitian; L_0 is
// diagonalized to fix the longest chains and their signs, and each further
// coefficient splits into a fully known middle part, a cross part that
// determines the next element of every running chain, and a complementary
// block whose diagonalization starts the chains of the next shorter length.
inline SignedCanonicalSystem normal_canonical_system(
    const MatrixPolynomial& p, cd lambda0, const Tolerances& tol = {}) {
  for (int j = 0; j <= p.degree(); ++j)
    if ((p.coeff(j) - p.coeff(j).adjoint()).norm() >
        1e-10 * (1.0 + p.coeff(j).norm()))
      throw ValidationError("normal_canonical_system: pencil is not Hermitian");
  const double lc =
      detail::require_real(lambda0, tol, "normal_canonical_system");

  auto cs = canonical_system(p, cd(lc), tol);
  const double lam =
      detail::require_real(cs.eigenvalue, tol, "normal_canonical_system");
  std::sort(cs.chains.begin(), cs.chains.end(),
            [](const auto& a, const auto& b) { return a.size() > b.size(); });
  const Eigen::Index m = p.size();
  const Eigen::Index pmax =
      static_cast<Eigen::Index>(cs.chains.front().size()) - 1;

  const double radius = detail::contour_radius(p, cd(lam), tol);
  const auto laurent =
      detail::inverse_laurent(p, cd(lam), pmax + 1, radius, 64);
  std::vector<Mat> lh(static_cast<size_t>(pmax) + 1);
  for (Eigen::Index h = 0; h <= pmax; ++h) {
    lh[h] = laurent[static_cast<size_t>(pmax - h)];
    detail::hermitize_checked(lh[h], 1e-6, "normal_canonical_system");
  }
  const double scale_l = 1.0 + lh[0].norm();

  struct Running {
    std::vector<Vec> elems;
    int sign = 0;
    double beta = 0.0;
    Eigen::Index start = 0;
  };
  std::vector<Running> run;

  for (Eigen::Index h = 0; h <= pmax; ++h) {
    Mat work = lh[static_cast<size_t>(h)];
    for (const auto& r : run) {
      const Eigen::Index s = h - r.start;
      for (Eigen::Index a = 1; a <= s - 1; ++a)
        work -= double(r.sign) * r.elems[static_cast<size_t>(a)] *
                r.elems[static_cast<size_t>(s - a)].adjoint();
    }

    const Eigen::Index q = static_cast<Eigen::Index>(run.size());
    Mat ehat(m, q);
    for (Eigen::Index k = 0; k < q; ++k)
      ehat.col(k) = run[static_cast<size_t>(k)].elems.front() /
                    run[static_cast<size_t>(k)].beta;
    Mat complement = work;
    if (q > 0) {
      const Mat proj = ehat * ehat.adjoint();
      complement = (Mat::Identity(m, m) - proj) * work *
                   (Mat::Identity(m, m) - proj);
    }
    complement = 0.5 * (complement + complement.adjoint()).eval();

    Eigen::Index fresh = 0;
    for (const auto& chain : cs.chains)
      if (static_cast<Eigen::Index>(chain.size()) == pmax + 1 - h) ++fresh;

    Eigen::SelfAdjointEigenSolver<Mat> es(complement);
    std::vector<Eigen::Index> order(static_cast<size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) order[static_cast<size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return std::abs(es.eigenvalues()(a)) > std::abs(es.eigenvalues()(b));
    });
    if (fresh > 0) {
      const double last = std::abs(es.eigenvalues()(order[fresh - 1]));
      if (last <= 1e-10 * scale_l)
        throw NumericalError(
            "normal_canonical_system: residue block is rank deficient");
      if (fresh < m &&
          std::abs(es.eigenvalues()(order[fresh])) > 1e-2 * last)
        throw NumericalError(
            "normal_canonical_system: ambiguous residue rank at stage " +
            std::to_string(h));
    } else if (q > 0 &&
               std::abs(es.eigenvalues()(order[0])) > 1e-6 * scale_l) {
      throw NumericalError(
          "normal_canonical_system: unexpected residue mass at stage " +
          std::to_string(h));
    }
    std::vector<Running> born;
    for (Eigen::Index j = 0; j < fresh; ++j) {
      const double mu = es.eigenvalues()(order[static_cast<size_t>(j)]);
      Running r;
      r.beta = std::sqrt(std::abs(mu));
      r.elems.push_back(es.eigenvectors().col(order[static_cast<size_t>(j)]) *
                        r.beta);
      r.sign = mu > 0 ? 1 : -1;
      r.start = h;
      born.push_back(std::move(r));
    }

    if (q > 0) {
      Mat cross = work - complement;
      cross = 0.5 * (cross + cross.adjoint()).eval();
      Vec dinv(q);
      for (Eigen::Index k = 0; k < q; ++k)
        dinv(k) = 1.0 / (double(run[static_cast<size_t>(k)].sign) *
                         run[static_cast<size_t>(k)].beta);
      const Mat that = ehat.adjoint() * cross * ehat;
      const Mat ghat = 0.5 * that * dinv.asDiagonal();
      const Mat gtail = (cross - ehat * (ehat.adjoint() * cross)) * ehat *
                        dinv.asDiagonal();
      const Mat g = ehat * ghat + gtail;
      for (Eigen::Index k = 0; k < q; ++k)
        run[static_cast<size_t>(k)].elems.push_back(g.col(k));
    }
    for (auto& r : born) run.push_back(std::move(r));
  }

  CanonicalSystem rebuilt;
  rebuilt.eigenvalue = cd(lam);
  for (const auto& r : run) rebuilt.chains.push_back(r.elems);
  double worst = 0.0;
  for (const auto& chain : rebuilt.chains) {
    double vec_scale = 0.0;
    for (const Vec& v : chain) vec_scale = std::max(vec_scale, v.norm());
    const double res = chain_equation_residual(p, cd(lam), chain) /
                       ((1.0 + p.total_norm()) * std::max(1.0, vec_scale) *
                        std::pow(1.0 + std::abs(lam), double(p.degree())));
    worst = std::max(worst, res);
  }
  if (worst > 1e-6)
    throw NumericalError(
        "normal_canonical_system: rebuilt chains violate the chain "
        "equations, residual " +
        std::to_string(worst));

  auto adj = adjoint_canonical_system(p, rebuilt, tol);
  SignedCanonicalSystem out;
  out.eigenvalue = cd(lam);
  for (size_t k = 0; k < run.size(); ++k) {
    double dev = 0.0;
    for (size_t h = 0; h < run[k].elems.size(); ++h)
      dev = std::max(dev, (adj.adjoint_chains[k][h] -
                           double(run[k].sign) * run[k].elems[h])
                              .norm() /
                              (1.0 + run[k].elems[h].norm()));
    if (dev > 1e-6)
      throw NumericalError(
          "normal_canonical_system: adjoint relation failed, deviation " +
          std::to_string(dev));
    worst = std::max(worst, dev);
    out.chains.push_back({run[k].elems, run[k].sign});
  }
  out.adjoint_chains = adj.adjoint_chains;
  std::vector<Vec> trunc;
  for (const auto& c : out.chains) {
    const auto len = static_cast<Eigen::Index>(c.vectors.size());
    for (Eigen::Index h = 0; 2 * h + 2 <= len; ++h)
      trunc.push_back(c.vectors[static_cast<size_t>(h)]);
  }
  Mat stacked(m, static_cast<Eigen::Index>(trunc.size()));
  for (size_t i = 0; i < trunc.size(); ++i)
    stacked.col(static_cast<Eigen::Index>(i)) = trunc[i];
  out.s0 = detail::orthonormal_cols(stacked, 1e-10);
  out.residual = std::max(worst, adj.adjoint_residual);
  return out;
}

namespace detail {

// Quadratic Hankel form of the symmetrizer on a derived chain of length n;
// equals -lambda^n sign for the middle element of a regular canonical
// system chain.
inline cd hankel_middle_form(const MatrixPolynomial& p, cd lambda,
                             const std::vector<Vec>& chain, size_t height) {
  std::vector<Vec> prefix(chain.begin(),
                          chain.begin() + static_cast<long>(height) + 1);
  const auto lift = derived_chain(prefix, lambda, p.degree());
  const Vec& top = lift.back();
  const Mat g0 = symmetrizer_g(p, 0);
  return top.dot(g0 * top);
}

}  // namespace detail

// Regular canonical system of a dissipative pencil at a nonzero real
// eigenvalue.  S0 is the span of the chain elements up to height
// floor((p_k - 1)/2); odd-length chains get a sign from the coefficient of
// the middle element of the adjoint chain modulo S0 (the coefficient matrix
// over a length class is Hermitian and is congruence-diagonalized), with
// the derived-chain Hankel form as a fallback when the middle element
// vanishes; even-length chains carry sign 0.
inline SignedCanonicalSystem regular_canonical_system(
    const MatrixPolynomial& p, cd lambda0, const Tolerances& tol = {}) {
  {
    MatrixPolynomial copy = p;
    auto cls = classify(copy);
    if (!cls.is_dissipative)
      throw ValidationError(
          "regular_canonical_system: pencil is not dissipative on the real "
          "axis");
  }
  const double lc =
      detail::require_real(lambda0, tol, "regular_canonical_system");
  if (std::abs(lc) <= tol.real_snap)
    throw ValidationError(
        "regular_canonical_system: zero eigenvalue, shift the argument "
        "first");

  auto cs = canonical_system(p, cd(lc), tol);
  const double lam =
      detail::require_real(cs.eigenvalue, tol, "regular_canonical_system");
  std::sort(cs.chains.begin(), cs.chains.end(),
            [](const auto& a, const auto& b) { return a.size() > b.size(); });
  const Eigen::Index m = p.size();
  const int n = p.degree();
  auto adj = adjoint_canonical_system(p, cs, tol);

  // Truncated-chain span; invariant under every re-choice below.
  std::vector<Vec> trunc;
  for (const auto& chain : cs.chains) {
    const auto len = static_cast<Eigen::Index>(chain.size());
    for (Eigen::Index h = 0; 2 * h + 2 <= len; ++h)
      trunc.push_back(chain[static_cast<size_t>(h)]);
  }
  Mat stacked(m, static_cast<Eigen::Index>(trunc.size()));
  for (size_t i = 0; i < trunc.size(); ++i)
    stacked.col(static_cast<Eigen::Index>(i)) = trunc[i];
  const Mat s0 = detail::orthonormal_cols(stacked, 1e-10);

  // Adjoint truncations must span the same subspace.
  for (size_t k = 0; k < cs.chains.size(); ++k) {
    const auto len = static_cast<Eigen::Index>(cs.chains[k].size());
    for (Eigen::Index h = 0; 2 * h + 2 <= len; ++h) {
      const Vec& z = adj.adjoint_chains[k][static_cast<size_t>(h)];
      const double out_of_span =
          (z - s0 * (s0.adjoint() * z)).norm() / (1.0 + z.norm());
      if (out_of_span > 1e-6)
        throw NumericalError(
            "regular_canonical_system: truncated spans differ, residual " +
            std::to_string(out_of_span));
    }
  }

  struct Entry {
    std::vector<Vec> vectors;
    int sign = 0;
  };
  std::vector<Entry> chains(cs.chains.size());
  for (size_t k = 0; k < cs.chains.size(); ++k)
    chains[k].vectors = cs.chains[k];

  std::map<Eigen::Index, std::vector<size_t>, std::greater<>> classes;
  for (size_t k = 0; k < cs.chains.size(); ++k) {
    const auto len = static_cast<Eigen::Index>(cs.chains[k].size());
    if (len % 2 == 1) classes[len].push_back(k);
  }

  for (const auto& [len, members] : classes) {
    const Eigen::Index mid = (len - 1) / 2;
    const auto nk = static_cast<Eigen::Index>(members.size());

    bool vanishing = false;
    for (size_t k : members) {
      double chain_scale = 0.0;
      for (const Vec& v : chains[k].vectors)
        chain_scale = std::max(chain_scale, v.norm());
      if (chains[k].vectors[static_cast<size_t>(mid)].norm() <=
          1e-8 * chain_scale)
        vanishing = true;
    }

    if (vanishing) {
      // Middle elements carry no usable component: signs from the Hankel
      // form of the derived chains, direct and adjoint in agreement.
      for (size_t k : members) {
        const cd vw = detail::hankel_middle_form(
            p, cd(lam), chains[k].vectors, static_cast<size_t>(mid));
        const cd vz = detail::hankel_middle_form(
            p, cd(lam), adj.adjoint_chains[k], static_cast<size_t>(mid));
        const double target = std::pow(std::abs(lam), 2.0 * n);
        if (std::abs(vw * vz - cd(target)) > 1e-5 * target)
          throw NumericalError(
              "regular_canonical_system: Hankel form product check failed");
        const double lam_n = std::pow(lam, double(n));
        const int sw = (-vw.real() / lam_n) > 0 ? 1 : -1;
        const int sz = (-vz.real() / lam_n) > 0 ? 1 : -1;
        if (sw != sz)
          throw NumericalError(
              "regular_canonical_system: Hankel form orientation "
              "disagreement between direct and adjoint chains");
        chains[k].sign = sw;
        const double t =
            std::sqrt(std::pow(std::abs(lam), double(n)) / std::abs(vw));
        for (Vec& v : chains[k].vectors) v *= t;
      }
      continue;
    }

    // Coefficient of each middle element of the adjoint chains over the
    // direct middles modulo S0.
    Mat basis(m, s0.cols() + nk);
    basis.leftCols(s0.cols()) = s0;
    for (Eigen::Index j = 0; j < nk; ++j)
      basis.col(s0.cols() + j) =
          chains[members[static_cast<size_t>(j)]].vectors[static_cast<size_t>(
              mid)];
    Mat rhs(m, nk);
    for (Eigen::Index j = 0; j < nk; ++j)
      rhs.col(j) =
          adj.adjoint_chains[members[static_cast<size_t>(j)]]
                            [static_cast<size_t>(mid)];
    const Mat sol = lstsq(basis, rhs);
    const double fit = (basis * sol - rhs).norm() / (1.0 + rhs.norm());
    if (fit > 1e-6)
      throw NumericalError(
          "regular_canonical_system: adjoint middle elements do not lie in "
          "the truncated span plus middles, residual " +
          std::to_string(fit));
    Mat coeff = sol.bottomRows(nk);
    detail::hermitize_checked(coeff, 1e-6, "regular_canonical_system");

    Eigen::SelfAdjointEigenSolver<Mat> es(coeff);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    Mat mix(nk, nk);
    for (Eigen::Index j = 0; j < nk; ++j) {
      const double mu = es.eigenvalues()(j);
      if (std::abs(mu) <= 1e-8 * (1.0 + top))
        throw ValidationError(
            "regular_canonical_system: degenerate middle form, eigenvalue " +
            std::to_string(mu));
      mix.col(j) = es.eigenvectors().col(j) * std::sqrt(std::abs(mu));
    }
    std::vector<std::vector<Vec>> mixed(static_cast<size_t>(nk));
    for (Eigen::Index j = 0; j < nk; ++j) {
      std::vector<Vec> chain(static_cast<size_t>(len), Vec::Zero(m));
      for (Eigen::Index i = 0; i < nk; ++i)
        for (Eigen::Index h = 0; h < len; ++h)
          chain[static_cast<size_t>(h)] +=
              mix(i, j) *
              chains[members[static_cast<size_t>(i)]].vectors[static_cast<
                  size_t>(h)];
      mixed[static_cast<size_t>(j)] = std::move(chain);
    }
    for (Eigen::Index j = 0; j < nk; ++j) {
      chains[members[static_cast<size_t>(j)]].vectors =
          std::move(mixed[static_cast<size_t>(j)]);
      chains[members[static_cast<size_t>(j)]].sign =
          es.eigenvalues()(j) > 0 ? 1 : -1;
    }
  }

  CanonicalSystem rebuilt;
  rebuilt.eigenvalue = cd(lam);
  for (const auto& e : chains) rebuilt.chains.push_back(e.vectors);
  auto adj2 = adjoint_canonical_system(p, rebuilt, tol);

  double worst = adj2.adjoint_residual;
  for (size_t k = 0; k < chains.size(); ++k) {
    const auto len = static_cast<Eigen::Index>(chains[k].vectors.size());
    if (len % 2 == 0) continue;
    const Eigen::Index mid = (len - 1) / 2;
    const Vec& w = chains[k].vectors[static_cast<size_t>(mid)];
    const Vec& z = adj2.adjoint_chains[k][static_cast<size_t>(mid)];
    const Vec wt = w - s0 * (s0.adjoint() * w);
    if (wt.norm() > 1e-8 * (1.0 + w.norm())) {
      const Vec zt = z - s0 * (s0.adjoint() * z);
      const cd c = wt.dot(zt) / cd(wt.squaredNorm());
      const double dev = std::abs(c - cd(double(chains[k].sign)));
      if (dev > 1e-6 * (1.0 + std::abs(c))) {
        std::ostringstream os;
        os << "regular_canonical_system: projection coefficient " << c
           << " is not the expected sign "
           << chains[k].sign;
        throw NumericalError(os.str());
      }
      worst = std::max(worst, dev);
      worst = std::max(worst, (zt - c * wt).norm() / (1.0 + z.norm()));
    } else {
      const cd vw = detail::hankel_middle_form(p, cd(lam), chains[k].vectors,
                                               static_cast<size_t>(mid));
      const double lam_n = std::pow(lam, double(n));
      const double dev = std::abs(vw - cd(-lam_n * chains[k].sign));
      if (dev > 1e-5 * std::abs(lam_n))
        throw NumericalError(
            "regular_canonical_system: Hankel form check failed after "
            "normalization");
      worst = std::max(worst, dev / std::abs(lam_n));
    }
  }

  SignedCanonicalSystem out;
  out.eigenvalue = cd(lam);
  for (auto& e : chains) out.chains.push_back({std::move(e.vectors), e.sign});
  out.adjoint_chains = adj2.adjoint_chains;
  out.s0 = s0;
  out.residual = worst;
  return out;
}

// Group velocity 1/lambda'(omega) of the wave family
// L_omega(lambda) = lambda^2 A + lambda B + C - omega^2 R at a simple real
// eigenvalue: (L'(lambda) w, w) / (2 omega (Rw, w)), cross-checked by
// eigenvalue continuation at omega +- delta.
inline GroupVelocityReport group_velocity(const Mat& a, const Mat& b,
                                          const Mat& c, const Mat& r,
                                          double omega, cd lambda_k,
                                          const Vec& w_k,
                                          const Tolerances& tol = {}) {
  if (omega <= 0.0)
    throw ValidationError("group_velocity: omega must be positive");
  auto family = [&](double w) {
    return MatrixPolynomial({c - w * w * r, b, a});
  };
  const MatrixPolynomial pw = family(omega);
  const double lk = detail::require_real(lambda_k, tol, "group_velocity");

  auto sp = eigenvalues(pw, tol);
  double lam = lk;
  double separation = std::numeric_limits<double>::infinity();
  bool found = false;
  for (const auto& ed : sp.eigenvalues) {
    const double dist = std::abs(ed.eigenvalue - cd(lk));
    if (dist <= tol.cluster * 10.0 * (1.0 + std::abs(lk))) {
      if (!ed.is_real || ed.algebraic_multiplicity != 1)
        throw ValidationError(
            "group_velocity: eigenvalue is resonant (not real simple)");
      lam = ed.eigenvalue.real();
      found = true;
    } else {
      separation = std::min(separation, dist);
    }
  }
  if (!found)
    throw ValidationError("group_velocity: lambda is not an eigenvalue");
  if (separation < 1e3 * tol.cluster * (1.0 + std::abs(lam)))
    throw ValidationError(
        "group_velocity: eigenvalue too close to a neighbor for "
        "non-resonant tracking");

  const double rw = std::real(w_k.dot(r * w_k));
  if (rw <= 0.0)
    throw ValidationError("group_velocity: (Rw, w) must be positive");
  const cd form = w_k.dot((2.0 * lam * a + b) * w_k);
  if (std::abs(form.imag()) > 1e-8 * (1.0 + std::abs(form)))
    throw NumericalError(
        "group_velocity: derivative form has a non-real value");

  GroupVelocityReport rep;
  rep.eigenvalue = lam;
  rep.amplitude = w_k;
  rep.derivative_form = form.real();
  rep.value = form.real() / (2.0 * omega * rw);

  const double delta = 1e-5 * (1.0 + omega);
  auto track = [&](double w) {
    auto spd = eigenvalues(family(w), tol);
    double best = std::numeric_limits<double>::infinity();
    double pick = lam;
    for (const auto& ed : spd.eigenvalues) {
      if (!ed.is_real) continue;
      const double dist = std::abs(ed.eigenvalue.real() - lam);
      if (dist < best) {
        best = dist;
        pick = ed.eigenvalue.real();
      }
    }
    if (best > 0.1 * (1.0 + std::abs(lam)))
      throw NumericalError(
          "group_velocity: continuation lost the eigenvalue branch");
    return pick;
  };
  const double lp = track(omega + delta);
  const double lm = track(omega - delta);
  if (std::abs(lp - lm) < 1e-14 * (1.0 + std::abs(lam)))
    throw NumericalError("group_velocity: branch is stationary in omega");
  rep.fd_value = 2.0 * delta / (lp - lm);
  return rep;
}

}  // namespace polspec
