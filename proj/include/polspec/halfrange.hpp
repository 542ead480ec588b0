#pragma once

// Half-range wave selection and the associated Cauchy solver.
//
// For a pencil whose solutions on a half-line must either decay or carry
// energy away from the boundary, only part of the spectral data is
// admissible: whole root chains for eigenvalues in the open upper (lower)
// half plane, and a sign-dependent leading segment of each real chain.
// The selected elementary solutions are encoded by their boundary traces,
// stacked into a matrix whose invertibility decides unique solvability of
// the half-range Cauchy problem.  Two selection families are provided:
// the plain one driven by the sign characteristic itself, and a weighted
// one where the sign is flipped on negative real eigenvalues.

#include <polspec/signchar.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace polspec {

enum class HalfKind { Eplus, Eminus, Yplus, Yminus };

inline const char* to_string(HalfKind k) {
  switch (k) {
    case HalfKind::Eplus: return "E+";
    case HalfKind::Eminus: return "E-";
    case HalfKind::Yplus: return "Y+";
    default: return "Y-";
  }
}

struct HalfEntry {
  cd eigenvalue;
  Eigen::Index chain = 0;  // index into HalfSystem::chains
  Eigen::Index height = 0;
  int sign = 0;  // chain sign (weighted sign for the weighted family);
                 // 0 for nonreal eigenvalues or even-length chains
  bool real = false;
};

// Selected spectral data of one family member together with the stacked
// boundary-trace matrix.  Column j of `stacked` is the trace of the
// elementary solution built from entries[j]; its row layout is given by
// block_sizes (blocks compressed by a projector have fewer than m rows).
struct HalfSystem {
  HalfKind kind = HalfKind::Eplus;
  Eigen::Index lift_blocks = 0;  // derived-chain length used for the traces
  Eigen::Index space_dim = 0;    // rows of stacked
  std::vector<Eigen::Index> block_sizes;
  std::vector<HalfEntry> entries;
  Mat stacked;
  // full chain pool at every finite eigenvalue (selected or not)
  std::vector<std::vector<Vec>> chains;
  std::vector<cd> chain_eigenvalues;
  std::vector<int> chain_signs;
  Eigen::Index xplus = 0;   // selected count of the plus member of the family
  Eigen::Index xminus = 0;  // and of the minus member
  bool selection_stable = true;

  Eigen::Index count() const { return static_cast<Eigen::Index>(entries.size()); }
};

struct DualityCensus {
  Eigen::Index xplus = 0;
  Eigen::Index xminus = 0;
  Eigen::Index expected_total = 0;  // degree * size
  bool leading_invertible = false;
  bool counting_identity = false;
  int plus_basis = -1;   // 1 / 0, or -1 when the leading coefficient is singular
  int minus_basis = -1;
  double plus_sigma_min = 0.0;
  double minus_sigma_min = 0.0;
  bool selection_stable = true;
};

struct MinimalityGram {
  double sigma_min = 0.0;  // of the column-normalized stacked matrix
  bool independent = false;
  Mat biorthogonal;  // rows b_i with b_i^* s_j = delta_ij (when independent)
};

namespace detail {

// floor((s)/2) extended so that s = -1 selects nothing.
inline Eigen::Index floor_half(Eigen::Index s) { return s >= 0 ? s / 2 : -1; }

struct ChainPool {
  std::vector<std::vector<Vec>> chains;
  std::vector<cd> eigenvalues;
  std::vector<int> signs;
  std::vector<bool> real;
  bool stable = true;
};

// Coefficients of lambda * A(lambda); chains at nonzero eigenvalues are
// unchanged, and its sign characteristic there is the weighted sign
// delta = sign(lambda) * epsilon.
inline MatrixPolynomial weighted_lift(const MatrixPolynomial& p) {
  std::vector<Mat> out;
  out.reserve(p.degree() + 2);
  out.push_back(Mat::Zero(p.size(), p.size()));
  for (const auto& c : p.coeffs()) out.push_back(c);
  return MatrixPolynomial(std::move(out));
}

// Root chains at every finite eigenvalue.  Real eigenvalues go through the
// sign-normalized canonical system (argument-shifted when the eigenvalue
// sits at the origin, lifted to lambda*A(lambda) for the weighted family);
// nonreal ones keep an arbitrary canonical gauge.
inline ChainPool collect_half_chains(const MatrixPolynomial& p,
                                     const Tolerances& tol, bool weighted) {
  ChainPool pool;
  const Spectrum sp = eigenvalues(p, tol);
  for (const auto& ed : sp.eigenvalues) {
    const double margin = 10.0 * tol.real_snap * (1.0 + std::abs(ed.eigenvalue));
    if (!ed.is_real && std::abs(ed.eigenvalue.imag()) <= margin)
      pool.stable = false;
    if (ed.is_real) {
      const double lc = ed.eigenvalue.real();
      SignedCanonicalSystem reg;
      if (weighted) {
        reg = regular_canonical_system(weighted_lift(p), cd(lc, 0.0), tol);
      } else if (std::abs(lc) <= tol.real_snap) {
        reg = regular_canonical_system(shift_argument(p, cd(1.0, 0.0)),
                                       cd(-1.0, 0.0), tol);
      } else {
        reg = regular_canonical_system(p, cd(lc, 0.0), tol);
      }
      for (const auto& ch : reg.chains) {
        pool.chains.push_back(ch.vectors);
        pool.eigenvalues.push_back(cd(lc, 0.0));
        pool.signs.push_back(ch.sign);
        pool.real.push_back(true);
      }
    } else {
      const CanonicalSystem cs = canonical_system(p, ed.eigenvalue, tol);
      for (const auto& ch : cs.chains) {
        pool.chains.push_back(ch);
        pool.eigenvalues.push_back(ed.eigenvalue);
        pool.signs.push_back(0);
        pool.real.push_back(false);
      }
    }
  }
  return pool;
}

struct HermitianSplit {
  Mat plus;   // orthonormal basis of the positive part
  Mat minus;  // and of the negative part
  Eigen::Index kernel = 0;
};

inline HermitianSplit split_definite_parts(const Mat& a, const char* what) {
  Mat h = a;
  hermitize_checked(h, 1e-8, what);
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  if (es.info() != Eigen::Success)
    throw ValidationError(std::string(what) + ": eigensolver failed");
  const auto& d = es.eigenvalues();
  const double cut = 1e-10 * (1.0 + d.cwiseAbs().maxCoeff());
  HermitianSplit out;
  std::vector<Eigen::Index> pos, neg;
  for (Eigen::Index j = 0; j < d.size(); ++j) {
    if (d(j) > cut)
      pos.push_back(j);
    else if (d(j) < -cut)
      neg.push_back(j);
    else
      ++out.kernel;
  }
  out.plus = Mat(a.rows(), static_cast<Eigen::Index>(pos.size()));
  out.minus = Mat(a.rows(), static_cast<Eigen::Index>(neg.size()));
  for (size_t j = 0; j < pos.size(); ++j) out.plus.col(j) = es.eigenvectors().col(pos[j]);
  for (size_t j = 0; j < neg.size(); ++j) out.minus.col(j) = es.eigenvectors().col(neg[j]);
  return out;
}

}  // namespace detail

// Elementary solution u(z) = e^{i lambda z} sum_q (iz)^q/q! * chain[height-q].
inline Vec elementary_wave(const std::vector<Vec>& chain, Eigen::Index height,
                           cd lambda, double z) {
  if (height < 0 || height >= static_cast<Eigen::Index>(chain.size()))
    throw ValidationError("elementary_wave: height out of range");
  Vec acc = Vec::Zero(chain[0].size());
  cd f(1.0, 0.0);
  for (Eigen::Index q = 0; q <= height; ++q) {
    acc += f * chain[height - q];
    f *= cd(0.0, z) / static_cast<double>(q + 1);
  }
  return std::exp(cd(0.0, 1.0) * lambda * z) * acc;
}

namespace detail {

// Shared builder for both parities.  The trace of an elementary solution is
// the derived chain of its root-chain prefix, with the first and/or last
// block optionally compressed onto a projector range.
inline HalfSystem build_half_system(const MatrixPolynomial& p, HalfKind kind,
                                    const Tolerances& tol, bool odd_degree) {
  const int n = p.degree();
  const int m = p.size();
  if (n < 1) throw ValidationError("half selection needs positive degree");
  if (odd_degree != (n % 2 == 1))
    throw ValidationError(odd_degree
                              ? "odd_order_half: degree is even, use select_half"
                              : "select_half: degree is odd, use odd_order_half");
  const bool plus = (kind == HalfKind::Eplus || kind == HalfKind::Yplus);
  const bool weighted = (kind == HalfKind::Yplus || kind == HalfKind::Yminus);
  const int l = n / 2;

  {
    MatrixPolynomial copy = p;
    const PencilClassification cls = classify(copy);
    if (weighted) {
      if (!cls.is_dissipative_weighted)
        throw ValidationError(
            "select_half: weighted family needs Im(t A(t)x,x) <= 0 on the "
            "real axis");
      if (!p.zero_invertible())
        throw ValidationError(
            "select_half: weighted family needs an invertible constant "
            "coefficient");
    } else if (!cls.is_dissipative) {
      throw ValidationError(
          "select_half: pencil is not dissipative on the real axis");
    }
  }

  HalfSystem hs;
  hs.kind = kind;

  // Trace layout.
  std::optional<Mat> head;  // compresses block 0
  std::optional<Mat> tail;  // compresses the last block
  Eigen::Index ell = 0;
  if (!weighted) {
    if (!odd_degree) {
      ell = l;
    } else {
      ell = l + 1;
      const auto sp = detail::split_definite_parts(
          p.coeff(n), "odd_order_half: leading coefficient");
      if (sp.kernel > 0)
        throw ValidationError(
            "odd_order_half: leading coefficient has a kernel, the half "
            "trace space is not defined");
      tail = plus ? sp.plus : sp.minus;
    }
  } else {
    ell = l + 1;
    const auto s0 = detail::split_definite_parts(
        p.coeff(0), "select_half: constant coefficient");
    if (s0.kernel > 0)
      throw ValidationError(
          "select_half: constant coefficient has a kernel, the weighted "
          "trace space is not defined");
    head = plus ? s0.minus : s0.plus;
    if (!odd_degree) {
      const auto sn = detail::split_definite_parts(
          p.coeff(n), "select_half: leading coefficient");
      if (sn.kernel > 0)
        throw ValidationError(
            "select_half: leading coefficient has a kernel, the weighted "
            "trace space is not defined");
      tail = plus ? sn.plus : sn.minus;
    }
  }
  hs.lift_blocks = ell;
  hs.block_sizes.clear();
  for (Eigen::Index b = 0; b < ell; ++b) {
    if (b == 0 && head)
      hs.block_sizes.push_back(head->cols());
    else if (b == ell - 1 && tail)
      hs.block_sizes.push_back(tail->cols());
    else
      hs.block_sizes.push_back(m);
  }
  hs.space_dim = 0;
  for (const auto b : hs.block_sizes) hs.space_dim += b;

  const auto compress = [&](const Vec& d) {
    Vec out(hs.space_dim);
    Eigen::Index at = 0;
    for (Eigen::Index b = 0; b < ell; ++b) {
      if (b == 0 && head) {
        out.segment(at, head->cols()) = head->adjoint() * d.segment(0, m);
        at += head->cols();
      } else if (b == ell - 1 && tail) {
        out.segment(at, tail->cols()) = tail->adjoint() * d.segment(b * m, m);
        at += tail->cols();
      } else {
        out.segment(at, m) = d.segment(b * m, m);
        at += m;
      }
    }
    return out;
  };

  const detail::ChainPool pool = detail::collect_half_chains(p, tol, weighted);
  hs.chains = pool.chains;
  hs.chain_eigenvalues = pool.eigenvalues;
  hs.chain_signs = pool.signs;
  hs.selection_stable = pool.stable;

  std::vector<Vec> cols;
  for (size_t c = 0; c < pool.chains.size(); ++c) {
    const cd lam = pool.eigenvalues[c];
    const Eigen::Index len = static_cast<Eigen::Index>(pool.chains[c].size());
    Eigen::Index top_plus = -1, top_minus = -1;
    if (!pool.real[c]) {
      if (lam.imag() > 0)
        top_plus = len - 1;
      else
        top_minus = len - 1;
    } else {
      const int e = pool.signs[c];
      top_plus = detail::floor_half(len - 1 + e);
      top_minus = detail::floor_half(len - 1 - e);
    }
    hs.xplus += top_plus + 1;
    hs.xminus += top_minus + 1;
    const Eigen::Index top = plus ? top_plus : top_minus;
    if (top < 0) continue;
    const auto derived = derived_chain(pool.chains[c], lam, ell);
    for (Eigen::Index h = 0; h <= top; ++h) {
      hs.entries.push_back({lam, static_cast<Eigen::Index>(c), h,
                            pool.signs[c], pool.real[c]});
      cols.push_back(compress(derived[h]));
    }
  }
  hs.stacked = Mat(hs.space_dim, static_cast<Eigen::Index>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j) hs.stacked.col(static_cast<Eigen::Index>(j)) = cols[j];
  return hs;
}

}  // namespace detail

// Half-range selection for even degree n = 2l.  The plain family stacks the
// first l derived blocks of each selected chain segment; the weighted family
// uses l+1 blocks with the outer two compressed onto the definite parts of
// the constant and leading coefficients.
inline HalfSystem select_half(const MatrixPolynomial& p, HalfKind kind,
                              const Tolerances& tol = {}) {
  return detail::build_half_system(p, kind, tol, false);
}

// Odd-degree counterpart, n = 2l+1.  The plain family compresses the last
// trace block onto the definite parts of the (Hermitian) leading
// coefficient; the weighted family compresses the first block instead.
inline HalfSystem odd_order_half(const MatrixPolynomial& p, HalfKind kind,
                                 const Tolerances& tol = {}) {
  return detail::build_half_system(p, kind, tol, true);
}

// Smallest singular value of the column-normalized stacked matrix; zero
// when a column vanishes or the columns outnumber the rows.
inline MinimalityGram minimality_gram(const HalfSystem& hs,
                                      const Tolerances& tol = {}) {
  (void)tol;
  MinimalityGram g;
  const Mat& s = hs.stacked;
  if (s.cols() == 0) {
    g.sigma_min = 1.0;
    g.independent = true;
    g.biorthogonal = Mat(0, s.rows());
    return g;
  }
  Mat t = s;
  for (Eigen::Index j = 0; j < t.cols(); ++j) {
    const double nj = t.col(j).norm();
    if (nj == 0.0) return g;
    t.col(j) /= nj;
  }
  if (t.cols() > t.rows()) return g;
  Eigen::JacobiSVD<Mat> svd(t);
  g.sigma_min = svd.singularValues()(svd.singularValues().size() - 1);
  g.independent = g.sigma_min > 1e-8;
  if (g.independent)
    g.biorthogonal = (s.adjoint() * s).ldlt().solve(s.adjoint());
  return g;
}

// Count selected solutions on both sides and test the stacked matrices.
// When the leading coefficient is invertible the two counts add up to
// degree * size; the basis flags stay at -1 otherwise.
inline DualityCensus duality_census(const MatrixPolynomial& p,
                                    const Tolerances& tol = {},
                                    bool weighted = false) {
  const bool odd = (p.degree() % 2 == 1);
  const auto build = [&](HalfKind k) {
    return odd ? odd_order_half(p, k, tol) : select_half(p, k, tol);
  };
  const HalfSystem hp = build(weighted ? HalfKind::Yplus : HalfKind::Eplus);
  const HalfSystem hm = build(weighted ? HalfKind::Yminus : HalfKind::Eminus);

  DualityCensus c;
  c.xplus = hp.xplus;
  c.xminus = hp.xminus;
  c.expected_total = static_cast<Eigen::Index>(p.degree()) * p.size();
  c.leading_invertible = p.leading_invertible();
  c.counting_identity = (c.xplus + c.xminus == c.expected_total);
  c.selection_stable = hp.selection_stable && hm.selection_stable;
  const MinimalityGram gp = minimality_gram(hp, tol);
  const MinimalityGram gm = minimality_gram(hm, tol);
  c.plus_sigma_min = gp.sigma_min;
  c.minus_sigma_min = gm.sigma_min;
  if (c.leading_invertible) {
    c.plus_basis = (hp.count() == hp.space_dim && gp.independent) ? 1 : 0;
    c.minus_basis = (hm.count() == hm.space_dim && gm.independent) ? 1 : 0;
  }
  return c;
}

// Solution of the half-range Cauchy problem as a finite combination of
// selected elementary waves.  The represented function lives on z >= 0 for
// the plus kinds and z <= 0 for the minus kinds.
struct HalfrangeSolution {
  HalfSystem system;
  Vec coefficients;
  double condition = 0.0;
  double ic_residual = 0.0;   // trace mismatch, relative
  double ode_residual = 0.0;  // A(-i d/dz)u on a grid, relative
  double decay_rate = 0.0;    // min |Im lambda| over selected nonreal modes
  bool decaying_part_bounded = true;
  Eigen::Index propagating_terms = 0;

  Vec evaluate(double z) const {
    Vec u = Vec::Zero(system.chains.empty() ? 0 : system.chains[0][0].size());
    for (Eigen::Index j = 0; j < system.count(); ++j) {
      const auto& e = system.entries[j];
      u += coefficients(j) *
           elementary_wave(system.chains[e.chain], e.height, e.eigenvalue, z);
    }
    return u;
  }

  Vec evaluate_decaying(double z) const {
    Vec u = Vec::Zero(system.chains.empty() ? 0 : system.chains[0][0].size());
    for (Eigen::Index j = 0; j < system.count(); ++j) {
      const auto& e = system.entries[j];
      if (e.real) continue;
      u += coefficients(j) *
           elementary_wave(system.chains[e.chain], e.height, e.eigenvalue, z);
    }
    return u;
  }
};

// Solve for the wave amplitudes matching prescribed boundary data.  phi
// holds one block per trace row group (sizes from HalfSystem::block_sizes).
// Throws when the selected system is not a basis of the trace space; the
// message carries the selection census.
inline HalfrangeSolution solve_halfrange_cauchy(const MatrixPolynomial& p,
                                                const std::vector<Vec>& phi,
                                                HalfKind kind,
                                                const Tolerances& tol = {}) {
  HalfrangeSolution out;
  out.system = (p.degree() % 2 == 1) ? odd_order_half(p, kind, tol)
                                     : select_half(p, kind, tol);
  const HalfSystem& hs = out.system;

  Eigen::Index total = 0;
  for (const auto& b : phi) total += b.size();
  if (total != hs.space_dim)
    throw ValidationError("solve_halfrange_cauchy: boundary data has " +
                          std::to_string(total) + " rows, trace space needs " +
                          std::to_string(hs.space_dim));
  Vec rhs(total);
  Eigen::Index at = 0;
  for (const auto& b : phi) {
    rhs.segment(at, b.size()) = b;
    at += b.size();
  }

  const MinimalityGram gram = minimality_gram(hs, tol);
  if (hs.count() != hs.space_dim || !gram.independent)
    throw ValidationError(
        std::string("solve_halfrange_cauchy: selected system ") +
        to_string(kind) + " is not a basis (" + std::to_string(hs.count()) +
        " columns in dimension " + std::to_string(hs.space_dim) +
        ", sigma_min " + std::to_string(gram.sigma_min) + ")");

  Eigen::JacobiSVD<Mat> svd(hs.stacked, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  out.condition = sv(0) / sv(sv.size() - 1);
  out.coefficients = svd.solve(rhs);
  out.ic_residual = (hs.stacked * out.coefficients - rhs).norm() / (1.0 + rhs.norm());

  // Analytic residual: A(-i d/dz) applied to an elementary wave of height h
  // telescopes to sum_q A^(q)(lambda)/q! times the height h-q wave.
  const int n = p.degree();
  std::vector<std::vector<Mat>> derivs;  // per chain, per order q
  derivs.resize(hs.chains.size());
  for (Eigen::Index j = 0; j < hs.count(); ++j) {
    const auto& e = hs.entries[j];
    auto& dv = derivs[e.chain];
    const Eigen::Index need = std::min<Eigen::Index>(e.height, n) + 1;
    double fact = 1.0;
    for (Eigen::Index q = 0; q < need; ++q) {
      if (q > 0) fact *= static_cast<double>(q);
      if (static_cast<Eigen::Index>(dv.size()) <= q)
        dv.push_back(p.derivative(static_cast<int>(q)).evaluate(e.eigenvalue) / fact);
    }
  }
  const bool forward = (kind == HalfKind::Eplus || kind == HalfKind::Yplus);
  const double zmax = 4.0;
  double worst = 0.0, largest = 0.0;
  for (int g = 0; g < 32; ++g) {
    const double z = (forward ? 1.0 : -1.0) * zmax * g / 31.0;
    Vec r = Vec::Zero(p.size());
    for (Eigen::Index j = 0; j < hs.count(); ++j) {
      const auto& e = hs.entries[j];
      const Eigen::Index qmax = std::min<Eigen::Index>(e.height, n);
      for (Eigen::Index q = 0; q <= qmax; ++q)
        r += out.coefficients(j) *
             (derivs[e.chain][q] * elementary_wave(hs.chains[e.chain],
                                                   e.height - q, e.eigenvalue, z));
    }
    worst = std::max(worst, r.norm());
    largest = std::max(largest, out.evaluate(z).norm());
  }
  out.ode_residual = worst / ((1.0 + p.total_norm()) * (largest + 1e-30));

  double gamma = std::numeric_limits<double>::infinity();
  for (const auto& e : hs.entries) {
    if (e.real)
      ++out.propagating_terms;
    else
      gamma = std::min(gamma, std::abs(e.eigenvalue.imag()));
  }
  out.decay_rate = std::isfinite(gamma) ? gamma : 0.0;
  if (out.decay_rate > 0.0) {
    const double z0 = out.evaluate_decaying(0.0).norm();
    const double z1 =
        out.evaluate_decaying((forward ? 1.0 : -1.0) * zmax).norm();
    out.decaying_part_bounded =
        z1 <= 100.0 * std::max(1.0, z0) * std::exp(-0.5 * out.decay_rate * zmax);
  }
  return out;
}

}  // namespace polspec
