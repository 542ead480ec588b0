#pragma once

#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <vector>

#include "polspec/core.hpp"
#include "polspec/lapack.hpp"
#include "polspec/linearize.hpp"
#include "polspec/rng.hpp"

namespace polspec {

struct EigenData {
  cd eigenvalue;
  Eigen::Index geometric_multiplicity = 0;
  std::vector<Eigen::Index> partial_multiplicities;  // chain lengths p_k + 1, descending
  Eigen::Index algebraic_multiplicity = 0;
  bool is_real = false;
  bool is_semisimple = false;
};

struct Spectrum {
  std::vector<EigenData> eigenvalues;
  Eigen::Index infinite_count = 0;
  Eigen::Index total_finite() const {
    Eigen::Index t = 0;
    for (const auto& e : eigenvalues) t += e.algebraic_multiplicity;
    return t;
  }
};

struct CanonicalSystem {
  cd eigenvalue;
  std::vector<std::vector<Vec>> chains;          // y_k^0 .. y_k^{p_k}
  std::vector<std::vector<Vec>> adjoint_chains;  // z_k^0 .. z_k^{p_k}, may be empty
  double adjoint_residual = -1.0;
  Eigen::Index algebraic_multiplicity() const {
    Eigen::Index t = 0;
    for (const auto& c : chains) t += static_cast<Eigen::Index>(c.size());
    return t;
  }
};

struct DerivedChainSystem {
  struct Source {
    cd eigenvalue;
    Eigen::Index chain = 0;
    Eigen::Index height = 0;
  };
  Eigen::Index length = 0;
  std::vector<Vec> vectors;
  std::vector<Source> provenance;
};

struct BasisCheck {
  Eigen::Index rank = 0;
  Eigen::Index deficiency = 0;
  Eigen::Index predicted_deficiency = 0;
};

namespace detail {

struct RankedNull {
  Mat basis;           // orthonormal columns spanning the numerical kernel
  Eigen::Index rank = 0;
  double sigma_max = 0.0;
};

// Relative-threshold kernel with a loud ambiguity band: if the singular
// values straddle the cut with less than two decades of separation the
// rank decision is unstable and extraction must not continue silently.
// abs_floor guards small matrices whose largest singular value is itself
// near zero (a 1x1 evaluation has nothing to compare against).
inline RankedNull ranked_null(const Mat& m, double rel_cut, double abs_floor,
                              const char* context) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  RankedNull out;
  out.sigma_max = sv.size() ? sv(0) : 0.0;
  if (out.sigma_max <= abs_floor) {
    out.basis = Mat::Identity(m.cols(), m.cols());
    out.rank = 0;
    return out;
  }
  const double cut = std::max(rel_cut * out.sigma_max, abs_floor);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++rank;
  if (rank > 0 && rank < sv.size() && sv(rank) > 0.0 &&
      sv(rank - 1) / sv(rank) < 1e2) {
    std::ostringstream os;
    os << context << ": ambiguous rank decision, singular values";
    for (Eigen::Index i = 0; i < sv.size(); ++i) os << ' ' << sv(i);
    os << " with relative cut " << rel_cut;
    throw NumericalError(os.str());
  }
  out.rank = rank;
  out.basis = svd.matrixV().rightCols(m.cols() - rank);
  return out;
}

// Lower block-triangular Toeplitz matrix of the first k Taylor blocks
// D_s = A^{(s)}(lambda0)/s!.
inline Mat chain_toeplitz(const std::vector<Mat>& taylor, Eigen::Index k) {
  const Eigen::Index m = taylor.front().rows();
  Mat t = Mat::Zero(k * m, k * m);
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c <= r; ++c)
      t.block(r * m, c * m, m, m) = taylor[r - c];
  return t;
}

inline std::vector<Mat> taylor_blocks(const MatrixPolynomial& p, cd lambda0,
                                      Eigen::Index count) {
  std::vector<Mat> d;
  double fact = 1.0;
  for (Eigen::Index s = 0; s < count; ++s) {
    if (s > 0) fact *= double(s);
    d.push_back(p.derivative(static_cast<int>(s)).evaluate(lambda0) / fact);
  }
  return d;
}

// Backward-error scale of an evaluation: sum_j |lambda|^j ||A_j||.  The
// natural yardstick for deciding whether A(lambda) is "numerically zero"
// when sigma_max of the evaluation itself is tiny.
inline double eval_scale(const MatrixPolynomial& p, cd lambda) {
  double s = 0.0;
  double pw = 1.0;
  for (int j = 0; j <= p.degree(); ++j) {
    s += pw * p.coeff(j).norm();
    pw *= std::abs(lambda);
  }
  return s;
}

}  // namespace detail

inline double chain_equation_residual(const MatrixPolynomial& p, cd lambda0,
                                      const std::vector<Vec>& chain) {
  const auto d = detail::taylor_blocks(
      p, lambda0, static_cast<Eigen::Index>(chain.size()));
  double worst = 0.0;
  for (size_t s = 0; s < chain.size(); ++s) {
    Vec acc = Vec::Zero(p.size());
    for (size_t q = 0; q <= s; ++q) acc += d[q] * chain[s - q];
    worst = std::max(worst, acc.norm());
  }
  return worst;
}

inline bool identically_singular(const MatrixPolynomial& p) {
  Rng rng(0x7e57ab1e5eed);
  const Eigen::Index probes = 2 * p.degree() + 1;
  const double scale = std::max(1.0, p.coeff_scale());
  for (Eigen::Index i = 0; i < probes; ++i) {
    const cd z(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
    Eigen::JacobiSVD<Mat> svd(p.evaluate(z));
    const double smin = svd.singularValues().minCoeff();
    if (smin > 1e-10 * scale * std::pow(1.0 + std::abs(z), double(p.degree())))
      return false;
  }
  return true;
}

// Canonical system of eigen/associated vector chains at lambda0.  Kernel
// filtration of the block-Toeplitz chain matrices fixes the partial
// multiplicities; leading vectors of the longer chains are peeled off the
// shorter kernels by orthogonal complement; associated vectors are the
// minimum-norm solutions of the triangular chain equations.
inline CanonicalSystem canonical_system(const MatrixPolynomial& p, cd lambda0,
                                        const Tolerances& tol = {}) {
  const Eigen::Index m = p.size();
  const Eigen::Index n = std::max<Eigen::Index>(p.degree(), 1);
  const double rel_cut = tol.rank_cut(m, n);
  const Eigen::Index cap = m * n + 1;

  // Solver-grade inputs sit a few ulps-times-condition-number off the true
  // root, which can hide the kernel behind the strict rank cut.  Polish with
  // the one-vector Newton iteration on u* A(lambda) v before giving up; the
  // point must not move beyond the clustering radius.
  {
    const MatrixPolynomial deriv = p.derivative(1);
    cd lam = lambda0;
    bool visible = false;
    for (int iter = 0; iter < 12; ++iter) {
      Eigen::JacobiSVD<Mat> svd(p.evaluate(lam),
                                Eigen::ComputeThinU | Eigen::ComputeThinV);
      const auto& sv = svd.singularValues();
      const double yard = std::max(sv(0), detail::eval_scale(p, lam));
      if (yard == 0.0 || sv(sv.size() - 1) <= rel_cut * yard) {
        visible = true;
        break;
      }
      if (iter == 0 && sv(sv.size() - 1) > 1e-3 * yard)
        throw ValidationError("canonical_system: not an eigenvalue");
      const Vec u = svd.matrixU().col(sv.size() - 1);
      const Vec v = svd.matrixV().col(sv.size() - 1);
      const cd g = u.dot(p.evaluate(lam) * v);
      const cd gp = u.dot(deriv.evaluate(lam) * v);
      if (std::abs(gp) < 1e-300) break;
      lam -= g / gp;
    }
    if (!visible || std::abs(lam - lambda0) >
                        tol.cluster * (1.0 + std::abs(lambda0)))
      throw ValidationError("canonical_system: not an eigenvalue");
    lambda0 = lam;
  }

  const double floor_cut = rel_cut * detail::eval_scale(p, lambda0);
  auto taylor = detail::taylor_blocks(p, lambda0, cap + 1);
  std::vector<Eigen::Index> nullity{0};
  std::vector<Mat> kernels{Mat()};
  Eigen::Index max_len = 0;
  for (Eigen::Index k = 1; k <= cap; ++k) {
    auto rn = detail::ranked_null(detail::chain_toeplitz(taylor, k), rel_cut,
                                  floor_cut, "canonical_system");
    const Eigen::Index nk = k * m - rn.rank;
    if (k == 1 && nk == 0)
      throw ValidationError("canonical_system: not an eigenvalue");
    if (nk == nullity.back()) {
      max_len = k - 1;
      break;
    }
    nullity.push_back(nk);
    kernels.push_back(rn.basis);
    if (k == cap)
      throw NumericalError("canonical_system: chain filtration failed to stabilize");
  }

  // r[k] = number of chains of length >= k.
  std::vector<Eigen::Index> r(static_cast<size_t>(max_len) + 2, 0);
  for (Eigen::Index k = 1; k <= max_len; ++k) r[k] = nullity[k] - nullity[k - 1];

  // Orthonormal bases of the leading-vector spaces S_k.
  std::vector<Mat> lead(static_cast<size_t>(max_len) + 1);
  for (Eigen::Index k = 1; k <= max_len; ++k) {
    Mat top = kernels[k].topRows(m);
    Eigen::JacobiSVD<Mat> svd(top, Eigen::ComputeFullU);
    lead[k] = svd.matrixU().leftCols(r[k]);
  }

  CanonicalSystem cs;
  cs.eigenvalue = lambda0;
  const double residual_scale = tol.residual * (1.0 + p.total_norm());
  for (Eigen::Index k = max_len; k >= 1; --k) {
    const Eigen::Index fresh = r[k] - r[k + 1];
    if (fresh == 0) continue;
    Mat picks;
    if (k == max_len) {
      picks = lead[k];
    } else {
      Mat proj = lead[k] - lead[k + 1] * (lead[k + 1].adjoint() * lead[k]);
      Eigen::JacobiSVD<Mat> svd(proj, Eigen::ComputeFullU);
      if (svd.singularValues()(fresh - 1) < 0.1)
        throw NumericalError(
            "canonical_system: leading-vector complement is ill conditioned");
      picks = svd.matrixU().leftCols(fresh);
    }
    for (Eigen::Index c = 0; c < fresh; ++c) {
      std::vector<Vec> chain{picks.col(c)};
      if (k > 1) {
        Mat sys = detail::chain_toeplitz(taylor, k - 1);
        Vec rhs = Vec::Zero((k - 1) * m);
        for (Eigen::Index s = 1; s < k; ++s)
          rhs.segment((s - 1) * m, m) = -taylor[s] * chain[0];
        Vec tail = lstsq(sys, rhs);
        for (Eigen::Index s = 1; s < k; ++s)
          chain.push_back(tail.segment((s - 1) * m, m));
      }
      double vec_scale = 0.0;
      for (const Vec& v : chain) vec_scale = std::max(vec_scale, v.norm());
      if (chain_equation_residual(p, lambda0, chain) >
          residual_scale * std::max(1.0, vec_scale) *
              std::pow(1.0 + std::abs(lambda0), double(p.degree())))
        throw NumericalError("canonical_system: chain equations inconsistent");
      cs.chains.push_back(std::move(chain));
    }
  }
  return cs;
}

inline Spectrum eigenvalues(const MatrixPolynomial& p,
                            const Tolerances& tol = {}) {
  if (identically_singular(p))
    throw ValidationError("eigenvalues: singular pencil");
  Spectrum sp;
  if (p.degree() == 0) return sp;

  auto cp = companion_first(p);
  auto ge = qz_eigen(cp.p0, cp.p1, false);
  std::vector<cd> finite;
  for (Eigen::Index i = 0; i < ge.alpha.size(); ++i) {
    if (std::abs(ge.beta(i)) <= 1e-10 * (std::abs(ge.alpha(i)) + std::abs(ge.beta(i))))
      ++sp.infinite_count;
    else
      finite.push_back(ge.alpha(i) / ge.beta(i));
  }

  // Single-linkage clustering with relative radius.
  const size_t nf = finite.size();
  std::vector<size_t> parent(nf);
  std::iota(parent.begin(), parent.end(), size_t{0});
  std::function<size_t(size_t)> find = [&](size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (size_t i = 0; i < nf; ++i)
    for (size_t j = i + 1; j < nf; ++j) {
      const double radius =
          tol.cluster * (1.0 + std::max(std::abs(finite[i]), std::abs(finite[j])));
      if (std::abs(finite[i] - finite[j]) <= radius) parent[find(i)] = find(j);
    }
  std::map<size_t, std::vector<size_t>> groups;
  for (size_t i = 0; i < nf; ++i) groups[find(i)].push_back(i);

  for (const auto& [root, members] : groups) {
    cd mean = 0.0;
    for (size_t i : members) mean += finite[i];
    mean /= double(members.size());
    if (std::abs(mean.imag()) < tol.real_snap * (1.0 + std::abs(mean)))
      mean = cd(mean.real(), 0.0);

    EigenData ed;
    ed.algebraic_multiplicity = static_cast<Eigen::Index>(members.size());
    auto cs = canonical_system(p, mean, tol);
    cd refined = cs.eigenvalue;
    if (std::abs(refined.imag()) < tol.real_snap * (1.0 + std::abs(refined)))
      refined = cd(refined.real(), 0.0);
    ed.eigenvalue = refined;
    ed.is_real = refined.imag() == 0.0;
    for (const auto& chain : cs.chains)
      ed.partial_multiplicities.push_back(static_cast<Eigen::Index>(chain.size()));
    ed.geometric_multiplicity =
        static_cast<Eigen::Index>(ed.partial_multiplicities.size());
    Eigen::Index total = 0;
    for (Eigen::Index len : ed.partial_multiplicities) total += len;
    if (total != ed.algebraic_multiplicity) {
      std::ostringstream os;
      os << "eigenvalues: chain structure at (" << mean.real() << ","
         << mean.imag() << ") accounts for " << total
         << " of a cluster of " << ed.algebraic_multiplicity;
      throw NumericalError(os.str());
    }
    ed.is_semisimple = true;
    for (Eigen::Index len : ed.partial_multiplicities)
      if (len != 1) ed.is_semisimple = false;
    sp.eigenvalues.push_back(std::move(ed));
  }
  std::sort(sp.eigenvalues.begin(), sp.eigenvalues.end(),
            [](const EigenData& a, const EigenData& b) {
              if (a.eigenvalue.real() != b.eigenvalue.real())
                return a.eigenvalue.real() < b.eigenvalue.real();
              return a.eigenvalue.imag() < b.eigenvalue.imag();
            });
  return sp;
}

namespace detail {

// Laurent coefficients C_{-1}..C_{-depth} of A(lambda)^{-1} around lambda0
// by trapezoid quadrature on a circle of the given radius.
inline std::vector<Mat> inverse_laurent(const MatrixPolynomial& p, cd lambda0,
                                        Eigen::Index depth, double radius,
                                        Eigen::Index nodes) {
  const Eigen::Index m = p.size();
  std::vector<Mat> c(static_cast<size_t>(depth), Mat::Zero(m, m));
  for (Eigen::Index t = 0; t < nodes; ++t) {
    const double theta = 2.0 * M_PI * double(t) / double(nodes);
    const cd w = radius * std::exp(cd(0, theta));
    const Mat inv = p.evaluate(lambda0 + w).partialPivLu().solve(
        Mat::Identity(m, m));
    cd power = w;
    for (Eigen::Index nu = 1; nu <= depth; ++nu) {
      c[nu - 1] += inv * power;
      power *= w;
    }
  }
  for (auto& mat : c) mat /= double(nodes);
  return c;
}

inline double contour_radius(const MatrixPolynomial& p, cd lambda0,
                             const Tolerances& tol) {
  double base = 0.05 * (1.0 + std::abs(lambda0));
  auto cp = companion_first(p);
  auto ge = qz_eigen(cp.p0, cp.p1, false);
  double nearest = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ge.alpha.size(); ++i) {
    if (std::abs(ge.beta(i)) <=
        1e-10 * (std::abs(ge.alpha(i)) + std::abs(ge.beta(i))))
      continue;
    const cd lam = ge.alpha(i) / ge.beta(i);
    const double dist = std::abs(lam - lambda0);
    if (dist > tol.cluster * (1.0 + std::abs(lambda0)))
      nearest = std::min(nearest, dist);
  }
  if (std::isfinite(nearest)) base = std::min(base, 0.45 * nearest);
  if (base < 1e-8 * (1.0 + std::abs(lambda0)))
    throw NumericalError("adjoint_canonical_system: eigenvalue too crowded");
  return base;
}

}  // namespace detail

// Adjoint chains z_k^s of A* at conj(lambda0), normalized so that the
// Laurent principal part of A^{-1} equals
// sum_k sum_{a+b = p_k+1-nu} y_k^a (z_k^b)^* on the (lambda-lambda0)^{-nu}
// coefficient.  Recovered by peeling the contour-integral coefficients from
// the highest order down; verified against an independent quadrature.
inline CanonicalSystem adjoint_canonical_system(const MatrixPolynomial& p,
                                                const CanonicalSystem& cs,
                                                const Tolerances& tol = {}) {
  if (cs.chains.empty())
    throw ValidationError("adjoint_canonical_system: empty canonical system");
  const Eigen::Index m = p.size();
  const cd lambda0 = cs.eigenvalue;
  Eigen::Index depth = 0;
  for (const auto& chain : cs.chains)
    depth = std::max(depth, static_cast<Eigen::Index>(chain.size()));

  const double radius = detail::contour_radius(p, lambda0, tol);
  const auto laurent = detail::inverse_laurent(p, lambda0, depth, radius, 64);

  CanonicalSystem out = cs;
  out.adjoint_chains.assign(cs.chains.size(), {});
  for (size_t k = 0; k < cs.chains.size(); ++k)
    out.adjoint_chains[k].assign(cs.chains[k].size(), Vec::Zero(m));

  for (Eigen::Index nu = depth; nu >= 1; --nu) {
    std::vector<size_t> active;
    for (size_t k = 0; k < cs.chains.size(); ++k)
      if (static_cast<Eigen::Index>(cs.chains[k].size()) >= nu)
        active.push_back(k);
    Mat known = laurent[nu - 1];
    for (size_t k : active) {
      const Eigen::Index d =
          static_cast<Eigen::Index>(cs.chains[k].size()) - nu;
      for (Eigen::Index a = 1; a <= d; ++a)
        known -= cs.chains[k][a] * out.adjoint_chains[k][d - a].adjoint();
    }
    Mat y0(m, static_cast<Eigen::Index>(active.size()));
    for (size_t i = 0; i < active.size(); ++i)
      y0.col(static_cast<Eigen::Index>(i)) = cs.chains[active[i]].front();
    Mat znew = lstsq(y0, known);
    for (size_t i = 0; i < active.size(); ++i) {
      const Eigen::Index d =
          static_cast<Eigen::Index>(cs.chains[active[i]].size()) - nu;
      out.adjoint_chains[active[i]][d] =
          znew.row(static_cast<Eigen::Index>(i)).adjoint();
    }
  }

  // Verification pass: rebuild every principal-part coefficient and compare
  // against a quadrature at a different radius and node count.
  const auto check =
      detail::inverse_laurent(p, lambda0, depth, 0.6 * radius, 96);
  double worst = 0.0;
  for (Eigen::Index nu = 1; nu <= depth; ++nu) {
    Mat rebuilt = Mat::Zero(m, m);
    for (size_t k = 0; k < cs.chains.size(); ++k) {
      const Eigen::Index len = static_cast<Eigen::Index>(cs.chains[k].size());
      if (len < nu) continue;
      const Eigen::Index d = len - nu;
      for (Eigen::Index a = 0; a <= d; ++a)
        rebuilt += cs.chains[k][a] * out.adjoint_chains[k][d - a].adjoint();
    }
    worst = std::max(worst, (rebuilt - check[nu - 1]).norm() /
                                (1.0 + check[nu - 1].norm()));
  }
  const MatrixPolynomial adj = p.adjoint();
  for (const auto& zchain : out.adjoint_chains) {
    double vec_scale = 0.0;
    for (const Vec& v : zchain) vec_scale = std::max(vec_scale, v.norm());
    const double res = chain_equation_residual(adj, std::conj(lambda0), zchain);
    worst = std::max(
        worst, res / ((1.0 + adj.total_norm()) * std::max(1.0, vec_scale) *
                      std::pow(1.0 + std::abs(lambda0), double(p.degree()))));
  }
  out.adjoint_residual = worst;
  if (worst > 1e-8)
    throw NumericalError(
        "adjoint_canonical_system: principal-part reconstruction residual " +
        std::to_string(worst));
  return out;
}

inline DerivedChainSystem derived_chains(
    const std::vector<CanonicalSystem>& systems, Eigen::Index length) {
  if (length < 1)
    throw ValidationError("derived_chains: length must be at least 1");
  DerivedChainSystem dcs;
  dcs.length = length;
  for (const auto& cs : systems) {
    for (size_t k = 0; k < cs.chains.size(); ++k) {
      auto lifted = derived_chain(cs.chains[k], cs.eigenvalue, length);
      for (size_t h = 0; h < lifted.size(); ++h) {
        dcs.vectors.push_back(std::move(lifted[h]));
        dcs.provenance.push_back({cs.eigenvalue, static_cast<Eigen::Index>(k),
                                  static_cast<Eigen::Index>(h)});
      }
    }
  }
  return dcs;
}

inline MatrixPolynomial shift_argument(const MatrixPolynomial& p, cd s) {
  const Eigen::Index n = p.degree();
  std::vector<Mat> out(static_cast<size_t>(n) + 1,
                       Mat::Zero(p.size(), p.size()));
  for (Eigen::Index i = 0; i <= n; ++i) {
    double binom = 1.0;
    cd power = 1.0;
    for (Eigen::Index j = i; j >= 0; --j) {
      out[j] += binom * power * p.coeff(i);
      binom *= double(j) / double(i - j + 1);
      power *= s;
    }
  }
  return MatrixPolynomial(out);
}

// Completeness diagnostic for the derived-chain family: the stacked
// full-length derived chains of all finite eigenvalues span the companion
// space exactly when the leading coefficient is invertible; the defect
// otherwise equals the algebraic multiplicity of mu = 0 of the reversed
// linearization, computed on a shifted copy with invertible constant term.
inline BasisCheck basis_check(const MatrixPolynomial& p,
                              const Tolerances& tol = {}) {
  const Eigen::Index m = p.size();
  const Eigen::Index n = p.degree();
  if (n == 0) throw ValidationError("basis_check: degree must be at least 1");

  auto sp = eigenvalues(p, tol);
  std::vector<CanonicalSystem> systems;
  for (const auto& ed : sp.eigenvalues)
    systems.push_back(canonical_system(p, ed.eigenvalue, tol));
  auto dcs = derived_chains(systems, n);

  BasisCheck bc;
  if (!dcs.vectors.empty()) {
    Mat stacked(m * n, static_cast<Eigen::Index>(dcs.vectors.size()));
    for (size_t i = 0; i < dcs.vectors.size(); ++i)
      stacked.col(static_cast<Eigen::Index>(i)) = dcs.vectors[i];
    Eigen::JacobiSVD<Mat> svd(stacked);
    const double cut = tol.rank_cut(m, n) * svd.singularValues()(0);
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > cut) ++bc.rank;
  }
  bc.deficiency = m * n - bc.rank;

  if (p.leading_invertible()) {
    bc.predicted_deficiency = 0;
    return bc;
  }
  MatrixPolynomial shifted = p;
  if (!shifted.zero_invertible()) {
    bool found = false;
    for (double s : {1.0, -1.0, 2.0, -2.0, 0.5, -0.5, 3.0, -3.0}) {
      shifted = shift_argument(p, cd(s, 0));
      if (shifted.zero_invertible()) {
        found = true;
        break;
      }
    }
    if (!found)
      throw NumericalError("basis_check: could not find an invertible shift");
  }
  auto cp = companion_first(shifted);
  Mat mm = cp.p0.partialPivLu().solve(cp.p1);
  mm /= std::max(1.0, mm.norm());
  Mat power = Mat::Identity(m * n, m * n);
  Eigen::Index prev = m * n;
  for (Eigen::Index k = 1; k <= m * n + 1; ++k) {
    power = (power * mm).eval();
    const double pn = power.norm();
    if (pn > 0) power /= pn;
    Eigen::JacobiSVD<Mat> svd(power);
    Eigen::Index rank = 0;
    const double cut = tol.rank_cut(m, n) * svd.singularValues()(0);
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > cut) ++rank;
    if (rank == prev) break;
    prev = rank;
  }
  bc.predicted_deficiency = m * n - prev;
  return bc;
}

// Indefinite biorthogonality of a family of canonical systems with their
// adjoint systems.  The pairing [y_k^h, x_j^s] = (-1)^n (G_n ytilde_k^h,
// ztilde_j^s) built from the top symmetrizer block must equal
// -delta_{kj} delta_{h, p_j - s}, chains across distinct eigenvalues
// pairing to zero.  Returns the largest deviation.
inline double biorthogonality_check(const MatrixPolynomial& p,
                                    const std::vector<CanonicalSystem>& systems,
                                    const Tolerances& tol = {}) {
  const Eigen::Index n = p.degree();
  if (n == 0)
    throw ValidationError("biorthogonality_check: degree must be at least 1");
  const Mat gn = symmetrizer_g(p, n);
  const double sign = (n % 2 == 0) ? 1.0 : -1.0;

  struct Lifted {
    size_t system;
    Eigen::Index chain;
    Eigen::Index height;
    Eigen::Index plen;
    Vec y;  // derived chain of y at lambda
    Vec z;  // derived chain of z at conj(lambda)
  };
  std::vector<Lifted> rows;
  for (size_t si = 0; si < systems.size(); ++si) {
    const auto& cs = systems[si];
    if (cs.adjoint_chains.size() != cs.chains.size())
      throw ValidationError("biorthogonality_check: missing adjoint chains");
    for (size_t k = 0; k < cs.chains.size(); ++k) {
      auto ylift = derived_chain(cs.chains[k], cs.eigenvalue, n);
      auto zlift = derived_chain(cs.adjoint_chains[k],
                                 std::conj(cs.eigenvalue), n);
      for (size_t h = 0; h < ylift.size(); ++h)
        rows.push_back({si, static_cast<Eigen::Index>(k),
                        static_cast<Eigen::Index>(h),
                        static_cast<Eigen::Index>(ylift.size()) - 1,
                        ylift[h], zlift[h]});
    }
  }
  (void)tol;
  double worst = 0.0;
  for (const auto& a : rows) {
    const Vec ga = gn * a.y;
    for (const auto& b : rows) {
      const cd value = sign * b.z.dot(ga);
      const bool hit = a.system == b.system && a.chain == b.chain &&
                       a.height + b.height == a.plen;
      const cd expected = hit ? cd(-1.0, 0.0) : cd(0.0, 0.0);
      worst = std::max(worst, std::abs(value - expected));
    }
  }
  return worst;
}

}  // namespace polspec
