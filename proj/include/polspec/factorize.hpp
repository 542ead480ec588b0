#pragma once

// Graph-subspace factorization A(lambda) = L(lambda) K(lambda).
//
// The monic-normalized descending companion matrix linearizes the pencil;
// an invariant subspace of it that is the graph of an operator H^k -> H^{n-k}
// yields a monic right divisor of degree k whose coefficients sit in the
// last block row of the graph operator, and the divisor spectrum equals the
// spectrum of the restriction.  Dissipative front-ends feed the half-range
// selections in as the invariant subspace and verify that the divisor
// inherits the selected root chains.

#include <polspec/halfrange.hpp>
#include <polspec/lapack.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace polspec {

// Requested eigenvalue copies for an invariant-subspace selection.
struct SpectralSelection {
  std::vector<cd> eigenvalues;
  std::vector<Eigen::Index> copies;
  std::string label;

  Eigen::Index total() const {
    Eigen::Index t = 0;
    for (const auto c : copies) t += c;
    return t;
  }
};

struct GraphSubspace {
  Mat basis;        // mn x mk, orthonormal columns
  Mat k_graph;      // m(n-k) x mk, basis column-equivalent to [k_graph; I]
  Mat restriction;  // mk x mk upper triangular, spectrum of the restriction
  double bottom_condition = 0.0;
  double invariance_residual = 0.0;
  Eigen::Index k = 0;
};

struct FactorizationResult {
  MatrixPolynomial k;  // monic right divisor
  MatrixPolynomial l;  // left factor, degree n - deg k
  double residual = 0.0;
  std::vector<cd> divisor_spectrum;
  std::string provenance;
  bool hypothesis_verified = true;
  double max_chain_residual = -1.0;  // set by the dissipative front-end
};

// Whole-cluster selection of one open half plane.
inline SpectralSelection half_plane_selection(const MatrixPolynomial& p,
                                              bool upper,
                                              const Tolerances& tol = {}) {
  SpectralSelection s;
  s.label = upper ? "upper" : "lower";
  for (const auto& ed : eigenvalues(p, tol).eigenvalues) {
    if (ed.is_real) continue;
    if ((ed.eigenvalue.imag() > 0) == upper) {
      s.eigenvalues.push_back(ed.eigenvalue);
      s.copies.push_back(ed.algebraic_multiplicity);
    }
  }
  return s;
}

// Copy counts per eigenvalue of a half-range selection (heights summed
// over chains).
inline SpectralSelection selection_from_half(const HalfSystem& hs) {
  SpectralSelection s;
  s.label = to_string(hs.kind);
  for (const auto& e : hs.entries) {
    bool found = false;
    for (size_t j = 0; j < s.eigenvalues.size(); ++j) {
      if (s.eigenvalues[j] == e.eigenvalue) {
        ++s.copies[j];
        found = true;
        break;
      }
    }
    if (!found) {
      s.eigenvalues.push_back(e.eigenvalue);
      s.copies.push_back(1);
    }
  }
  return s;
}

namespace detail {

// Monic-normalized descending companion: first block row -An^{-1}A_{n-1-j},
// identities on the subdiagonal.  Eigenvectors stack descending powers
// (lambda^{n-1}y, ..., lambda y, y).
inline Mat descending_companion(const MatrixPolynomial& p) {
  const int n = p.degree();
  const int m = p.size();
  const auto lu = p.coeff(n).partialPivLu();
  Mat a = Mat::Zero(n * m, n * m);
  for (int j = 0; j < n; ++j)
    a.block(0, j * m, m, m) = -lu.solve(p.coeff(n - 1 - j));
  for (int r = 1; r < n; ++r)
    a.block(r * m, (r - 1) * m, m, m) = Mat::Identity(m, m);
  return a;
}

// max_s || sum_{q<=s} K^(q)(lambda)/q! y^{s-q} || over the chain prefix.
inline double divisor_chain_residual(const MatrixPolynomial& k, cd lambda,
                                     const std::vector<Vec>& chain,
                                     Eigen::Index upto) {
  std::vector<Mat> dq;
  double fact = 1.0;
  for (Eigen::Index q = 0; q <= std::min<Eigen::Index>(upto, k.degree()); ++q) {
    if (q > 0) fact *= static_cast<double>(q);
    dq.push_back(k.derivative(static_cast<int>(q)).evaluate(lambda) / fact);
  }
  double worst = 0.0;
  for (Eigen::Index s = 0; s <= upto; ++s) {
    Vec r = Vec::Zero(k.size());
    for (Eigen::Index q = 0; q < static_cast<Eigen::Index>(dq.size()) && q <= s;
         ++q)
      r += dq[q] * chain[s - q];
    worst = std::max(worst, r.norm() / (1.0 + chain[s].norm()));
  }
  return worst / (1.0 + k.coeff_scale());
}

}  // namespace detail

// Ordered-Schur invariant subspace of the companion matrix for the selected
// eigenvalue copies, with the graph representation test.
inline GraphSubspace invariant_subspace(const MatrixPolynomial& p,
                                        const SpectralSelection& sel,
                                        Eigen::Index k,
                                        const Tolerances& tol = {}) {
  const int n = p.degree();
  const int m = p.size();
  if (k < 1 || k >= n)
    throw ValidationError("invariant_subspace: divisor degree must sit in [1, n)");
  if (!p.leading_invertible())
    throw ValidationError("invariant_subspace: leading coefficient is singular");
  if (sel.total() != k * m)
    throw ValidationError(
        "invariant_subspace: selected multiplicity " +
        std::to_string(sel.total()) + " does not fill degree " +
        std::to_string(k) + " (need " + std::to_string(k * m) + ")");

  const Mat a = detail::descending_companion(p);
  SchurDecomposition sd = schur(a);

  // Assign diagonal copies to the selection greedily by distance.
  const Eigen::Index nm = static_cast<Eigen::Index>(n) * m;
  std::vector<std::pair<double, std::pair<Eigen::Index, size_t>>> order;
  for (Eigen::Index i = 0; i < nm; ++i)
    for (size_t j = 0; j < sel.eigenvalues.size(); ++j)
      order.push_back({std::abs(sd.t(i, i) - sel.eigenvalues[j]), {i, j}});
  std::sort(order.begin(), order.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<int> mask(nm, 0);
  std::vector<Eigen::Index> budget = sel.copies;
  Eigen::Index taken = 0;
  for (const auto& [dist, ij] : order) {
    if (taken == k * m) break;
    if (mask[ij.first] || budget[ij.second] == 0) continue;
    mask[ij.first] = 1;
    --budget[ij.second];
    ++taken;
  }
  if (taken != k * m)
    throw ValidationError(
        "invariant_subspace: could not match the selection on the Schur "
        "diagonal");
  schur_reorder(sd, mask);

  GraphSubspace gs;
  gs.k = k;
  gs.basis = sd.q.leftCols(k * m);
  gs.restriction = sd.t.topLeftCorner(k * m, k * m);
  gs.invariance_residual =
      (a * gs.basis - gs.basis * gs.restriction).norm() / (1.0 + a.norm());

  const Mat bottom = gs.basis.bottomRows(k * m);
  Eigen::JacobiSVD<Mat> svd(bottom);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  gs.bottom_condition = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
  (void)tol;
  if (!(smin > 0) || gs.bottom_condition > 1e8)
    throw ValidationError(
        "invariant_subspace: not a graph subspace (bottom block condition " +
        std::to_string(gs.bottom_condition) + ")");
  gs.k_graph = gs.basis.topRows((n - k) * m) *
               bottom.partialPivLu().solve(Mat::Identity(k * m, k * m));
  return gs;
}

// Monic right divisor read off the last block row of the graph operator,
// left factor by right division, with residual and spectrum checks.
inline FactorizationResult divisor_from_subspace(const MatrixPolynomial& p,
                                                 const GraphSubspace& gs,
                                                 const Tolerances& tol = {}) {
  const int n = p.degree();
  const int m = p.size();
  const Eigen::Index k = gs.k;

  std::vector<Mat> kc(static_cast<size_t>(k) + 1);
  kc[k] = Mat::Identity(m, m);
  const Mat last = gs.k_graph.bottomRows(m);
  for (Eigen::Index b = 0; b < k; ++b)
    kc[k - 1 - b] = -last.block(0, b * m, m, m);

  FactorizationResult fr;
  fr.k = MatrixPolynomial(std::move(kc));
  const DivisionResult div = right_divide(p, fr.k);
  fr.l = div.quotient;
  double rem = 0.0;
  for (int j = 0; j <= div.remainder.degree(); ++j)
    rem = std::max(rem, div.remainder.coeff(j).norm());
  fr.residual = rem / std::max(1.0, p.coeff_scale());
  if (fr.residual > 1e-6)
    throw ValidationError(
        "divisor_from_subspace: factorization residual " +
        std::to_string(fr.residual) + " (bottom block condition " +
        std::to_string(gs.bottom_condition) + ")");

  fr.divisor_spectrum.reserve(k * m);
  for (Eigen::Index i = 0; i < k * m; ++i)
    fr.divisor_spectrum.push_back(gs.restriction(i, i));

  // sigma(K) must reproduce the restriction spectrum as a multiset.
  std::vector<cd> kspec;
  for (const auto& ed : eigenvalues(fr.k, tol).eigenvalues)
    for (Eigen::Index c = 0; c < ed.algebraic_multiplicity; ++c)
      kspec.push_back(ed.eigenvalue);
  if (static_cast<Eigen::Index>(kspec.size()) != k * m)
    throw ValidationError("divisor_from_subspace: divisor spectrum count mismatch");
  std::vector<bool> used(kspec.size(), false);
  for (const cd want : fr.divisor_spectrum) {
    double best = std::numeric_limits<double>::infinity();
    size_t at = 0;
    for (size_t j = 0; j < kspec.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(kspec[j] - want);
      if (d < best) {
        best = d;
        at = j;
      }
    }
    if (best > 1e-5 * (1.0 + std::abs(want)))
      throw ValidationError(
          "divisor_from_subspace: divisor spectrum drifted from the "
          "restriction spectrum");
    used[at] = true;
  }
  return fr;
}

namespace detail {

// Condition for a real point with numerical range off zero: some sampled
// real point where the Hermitian part of A is definite.
inline bool definite_point_exists(const MatrixPolynomial& p) {
  const auto lu = p.coeff(p.degree()).partialPivLu();
  double radius = 1.0;
  for (int j = 0; j < p.degree(); ++j)
    radius = std::max(radius, lu.solve(p.coeff(j)).norm());
  radius = 2.0 * (1.0 + radius);
  for (int s = 0; s <= 20; ++s) {
    const double t = radius * (s - 10) / 10.0;
    const Mat h = 0.5 * (p.evaluate(cd(t, 0.0)) +
                         p.evaluate(cd(t, 0.0)).adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    const double cut = 1e-10 * (1.0 + std::max(std::abs(lo), std::abs(hi)));
    if (lo > cut || hi < -cut) return true;
  }
  return false;
}

inline void require_posdef(const Mat& a, const char* what) {
  Mat h = a;
  hermitize_checked(h, 1e-8, what);
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  if (es.eigenvalues().minCoeff() <= 0)
    throw ValidationError(std::string(what) + ": matrix is not positive definite");
}

}  // namespace detail

// Factorization of an even-degree dissipative pencil along a half-range
// selection: the divisor of degree l = n/2 carries exactly the selected
// eigen and associate vectors.  Plain kinds need a dissipative pencil with
// invertible leading coefficient; weighted kinds additionally need positive
// definite constant and leading coefficients.
inline FactorizationResult dissipative_factorization(
    const MatrixPolynomial& p, HalfKind kind = HalfKind::Eplus,
    const Tolerances& tol = {}) {
  const int n = p.degree();
  const int m = p.size();
  if (n % 2 != 0)
    throw ValidationError("dissipative_factorization: degree must be even");
  const Eigen::Index l = n / 2;
  if (!p.leading_invertible())
    throw ValidationError(
        "dissipative_factorization: leading coefficient is singular");
  const bool weighted = (kind == HalfKind::Yplus || kind == HalfKind::Yminus);
  if (weighted) {
    detail::require_posdef(p.coeff(0), "dissipative_factorization: constant coefficient");
    detail::require_posdef(p.coeff(n), "dissipative_factorization: leading coefficient");
  }

  bool hypothesis = true;
  if (!weighted) hypothesis = detail::definite_point_exists(p);

  // Shift so the divisor construction never sits on a singular constant term.
  cd shift(0.0, 0.0);
  MatrixPolynomial work = p;
  if (!p.zero_invertible()) {
    bool found = false;
    for (const double c : {1.0, -1.0, 2.0, -2.0, 3.0, -3.0, 0.5, -0.5}) {
      const Mat at = p.evaluate(cd(c, 0.0));
      Eigen::JacobiSVD<Mat> svd(at);
      const double smax = svd.singularValues()(0);
      const double smin = svd.singularValues()(svd.singularValues().size() - 1);
      if (smax > 0 && smin > 1e-8 * smax) {
        shift = cd(c, 0.0);
        found = true;
        break;
      }
    }
    if (!found)
      throw ValidationError(
          "dissipative_factorization: no invertible real point found for the "
          "argument shift");
    work = shift_argument(p, shift);
  }

  const HalfSystem hs = select_half(work, kind, tol);
  const SpectralSelection sel = selection_from_half(hs);
  if (sel.total() != l * m)
    throw ValidationError(
        "dissipative_factorization: selection counts " +
        std::to_string(hs.xplus) + "+" + std::to_string(hs.xminus) +
        " do not fill the divisor degree" +
        (hypothesis ? "" : " (no definite real point among 21 samples)"));

  GraphSubspace gs;
  try {
    gs = invariant_subspace(work, sel, l, tol);
  } catch (const ValidationError& e) {
    throw ValidationError(
        std::string(e.what()) +
        (hypothesis ? "" : "; no definite real point among 21 samples"));
  }
  FactorizationResult fr = divisor_from_subspace(work, gs, tol);
  fr.hypothesis_verified = hypothesis;
  fr.provenance = sel.label;

  if (shift != cd(0.0, 0.0)) {
    fr.k = shift_argument(fr.k, -shift);
    const DivisionResult div = right_divide(p, fr.k);
    fr.l = div.quotient;
    double rem = 0.0;
    for (int j = 0; j <= div.remainder.degree(); ++j)
      rem = std::max(rem, div.remainder.coeff(j).norm());
    fr.residual = rem / std::max(1.0, p.coeff_scale());
    for (auto& lam : fr.divisor_spectrum) lam += shift;
    fr.provenance += " (shifted)";
  }

  // The divisor must carry the selected chain segments.
  double worst = 0.0;
  for (const auto& e : hs.entries) {
    if (e.height + 1 > static_cast<Eigen::Index>(hs.chains[e.chain].size()))
      continue;
    worst = std::max(
        worst, detail::divisor_chain_residual(fr.k, e.eigenvalue + shift,
                                              hs.chains[e.chain], e.height));
  }
  fr.max_chain_residual = worst;
  return fr;
}

}  // namespace polspec
