#pragma once

// Instability index of damped/gyroscopic systems A(lambda) = lambda^2 F +
// lambda (D + iG) + T, half-plane eigenvalue counts for dissipative linear
// pencils in an indefinite metric, and the nonreal-eigenvalue bound for
// selfadjoint quadratics.  The common mechanism: eigenvalues on the boundary
// axis carry metric signs, and the signed counts close an exact bookkeeping
// identity between unstable modes and the negative squares of the metric.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "core.hpp"
#include "lapack.hpp"
#include "linearize.hpp"
#include "signchar.hpp"
#include "spectral.hpp"

namespace polspec {

// One Jordan chain attached to a boundary eigenvalue.  `location` is zeta for
// lambda = i*zeta (imaginary axis) or mu itself (real axis); `sign` is the
// metric sign of the chain, zero for even length.
struct BoundaryMode {
  double location = 0.0;
  Eigen::Index length = 1;
  int sign = 0;
};

// Neutral-subspace share of one chain: a chain of length l spans a maximal
// metric-neutral subspace of dimension floor(l/2), plus one signed direction
// when l is odd.
inline Eigen::Index neutral_share(Eigen::Index length) { return length / 2; }

inline Eigen::Index signed_share(const std::vector<BoundaryMode>& modes,
                                 int sign) {
  Eigen::Index s = 0;
  for (const auto& m : modes)
    s += (m.sign == sign ? 1 : 0) + neutral_share(m.length);
  return s;
}

// Sign data for one eigenvalue i*zeta on the imaginary axis of the quadratic
// A(lambda).  `form_values` are the eigenvalues of the energy form
// zeta^2 (F w, w) + (T w, w) restricted to Ker A(i zeta);
// `formula_agreement` is the deviation between that form and its kernel
// identity zeta ((2 zeta F + G) w, w).
struct ImaginarySignSystem {
  double zeta = 0.0;
  Mat kernel;
  Eigen::VectorXd form_values;
  std::vector<BoundaryMode> modes;
  bool semisimple = true;
  double formula_agreement = 0.0;

  Eigen::Index eps_plus() const { return signed_share(modes, +1); }
};

struct IndexReport {
  Eigen::Index kappa = 0;         // eigenvalues with Re lambda > 0
  Eigen::Index oracle_kappa = 0;  // same count through an independent solver
  Eigen::Index nu_f = 0;          // negative eigenvalues of F
  Eigen::Index nu_t = 0;          // negative eigenvalues of T
  std::vector<BoundaryMode> imaginary_modes;
  Eigen::Index eps_plus = 0;  // sum over modes of eps^+ + floor(length/2)
  bool formula_holds = false;  // kappa == nu_f + nu_t - eps_plus
  bool indeterminate = false;  // eigenvalue in the axis ambiguity band
  double worst_formula_agreement = 0.0;
  std::vector<cd> eigenvalues;
};

// Half-plane counts for a linear pencil T - lambda W with W Hermitian
// invertible and Im(T x, x) >= 0.  Real eigenvalues carry W-metric signs;
// both one-sided identities close simultaneously.
struct PontryaginReport {
  bool dissipative = true;  // Im(T x, x) >= 0 certified numerically
  Eigen::Index kappa_upper = 0;  // Im lambda > 0
  Eigen::Index kappa_lower = 0;  // Im lambda < 0
  Eigen::Index pi_w = 0;         // positive eigenvalues of W
  Eigen::Index nu_w = 0;         // negative eigenvalues of W
  std::vector<BoundaryMode> real_modes;  // sign = -sign of the W form
  Eigen::Index lower_sum = 0;    // sum eps^+ + floor(length/2)
  Eigen::Index upper_sum = 0;    // sum (-eps)^+ + floor(length/2)
  bool lower_identity = false;   // kappa_lower + lower_sum == nu_w
  bool upper_identity = false;   // kappa_upper + upper_sum == pi_w
  bool identity_holds = false;   // both
  bool truncated_bound_holds = false;  // neutral shares alone stay in budget
  bool signed_bound_holds = false;     // signed sums stay in budget
  std::vector<cd> eigenvalues;
};

// Nonreal-eigenvalue bound for the selfadjoint quadratic
// L(lambda) = lambda^2 F + lambda D + T with L(a), L(b) invertible, a < b.
// Work happens on the Cayley-transformed pencil
// Lt(xi) = xi^2 L(b) + xi (2abF + (a+b)D + 2T) + L(a), whose real eigenvalues
// xi = (mu - a)/(b - mu) carry the signs of xi (Lt'(xi) y, y).
struct NonrealBoundReport {
  Eigen::Index eta = 0;  // nonreal eigenvalues, counted with multiplicity
  Eigen::Index pi_at_a = 0, nu_at_a = 0;  // inertia of L(a)
  Eigen::Index pi_at_b = 0, nu_at_b = 0;  // inertia of L(b)
  Eigen::Index delta_plus = 0;   // positive signed directions over real modes
  Eigen::Index delta_minus = 0;  // negative signed directions
  Eigen::Index neutral = 0;      // sum of floor(length/2)
  bool bound_holds = false;  // eta/2 <= pi(L(a)) + nu(L(b)) - delta_plus
  // pi(L(a)) + nu(L(b)) == pi(L(b)) + nu(L(a)); when false the stated bound
  // pairs delta_plus with the wrong inertia budget and may fail spuriously.
  bool ordering_consistent = false;
  bool identity_holds = false;  // eta/2 + delta_plus + neutral == pi(L(b)) + nu(L(a))
  bool mirror_identity_holds = false;  // delta_minus side against pi(L(a)) + nu(L(b))
  std::vector<BoundaryMode> real_modes;  // location = mu, +inf for xi = -1
  std::vector<cd> nonreal_eigenvalues;
  double worst_formula_agreement = 0.0;
};

namespace detail {

struct Inertia {
  Eigen::Index positive = 0, zero = 0, negative = 0;
};

inline Inertia form_inertia(const Mat& h, double rel_cut) {
  Inertia out;
  if (h.rows() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  const double cut =
      rel_cut * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double v = es.eigenvalues()(i);
    if (v > cut)
      ++out.positive;
    else if (v < -cut)
      ++out.negative;
    else
      ++out.zero;
  }
  return out;
}

inline Inertia hermitian_inertia(Mat h, const char* what) {
  hermitize_checked(h, 1e-8, what);
  return form_inertia(h, 1e-10);
}

inline void require_invertible(const Mat& h, const char* what) {
  Eigen::JacobiSVD<Mat> svd(h);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-10 * (1.0 + sv(0)))
    throw ValidationError(std::string(what) + ": numerically singular");
}

inline void require_psd(const Mat& h, const char* what) {
  if (h.rows() == 0) return;
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  const double floor = -1e-10 * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < floor)
    throw ValidationError(std::string(what) + ": not positive semidefinite");
}

// `yard` is the backward-error scale of the evaluated matrix (eval_scale for
// polynomial evaluations); singular values are compared against it rather
// than sigma_max, which collapses when the whole evaluation is tiny.
inline Mat kernel_basis(const Mat& a, double yard, double rel_cut = 1e-6) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cut = rel_cut * (yard + 1e-300);
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) > cut) ++r;
  return svd.matrixV().rightCols(a.cols() - r);
}

// Single-linkage clusters of a set of reals, relative radius.
inline std::vector<std::vector<double>> cluster_line(std::vector<double> xs,
                                                     double rel) {
  std::vector<std::vector<double>> groups;
  std::sort(xs.begin(), xs.end());
  for (double x : xs) {
    if (!groups.empty()) {
      const double prev = groups.back().back();
      if (x - prev <= rel * (1.0 + std::max(std::abs(prev), std::abs(x)))) {
        groups.back().push_back(x);
        continue;
      }
    }
    groups.push_back({x});
  }
  return groups;
}

inline double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline std::vector<cd> finite_eigenvalues(const GeneralizedEigen& ge,
                                          const char* what) {
  std::vector<cd> out;
  out.reserve(static_cast<std::size_t>(ge.alpha.size()));
  const double scale = ge.alpha.size() ? ge.alpha.cwiseAbs().maxCoeff() : 0.0;
  for (Eigen::Index i = 0; i < ge.alpha.size(); ++i) {
    if (std::abs(ge.beta(i)) <= 1e-12 * (1.0 + scale))
      throw NumericalError(std::string(what) +
                           ": unexpected infinite eigenvalue");
    out.push_back(ge.alpha(i) / ge.beta(i));
  }
  std::sort(out.begin(), out.end(), [](cd l, cd r) {
    return l.real() != r.real() ? l.real() < r.real() : l.imag() < r.imag();
  });
  return out;
}

inline bool off_axis(double off, double mag, double band) {
  return std::abs(off) > band * (1.0 + mag);
}

// Metric Gram of the middle elements of equal-length odd chains.  `lift`
// maps (middle, predecessor) to the first companion block of the derived
// chain; the form is congruence-invariant under admissible chain re-choices,
// so its inertia is the sign distribution of the class.
template <typename Form>
inline Inertia odd_class_inertia(const std::vector<const std::vector<Vec>*>& chains,
                                 Form&& form, const char* what) {
  const Eigen::Index q = static_cast<Eigen::Index>(chains.size());
  Mat gram(q, q);
  for (Eigen::Index j = 0; j < q; ++j)
    for (Eigen::Index l = 0; l < q; ++l)
      gram(j, l) = form(*chains[static_cast<std::size_t>(j)],
                        *chains[static_cast<std::size_t>(l)]);
  gram = 0.5 * (gram + gram.adjoint()).eval();
  auto in = form_inertia(gram, 1e-8);
  if (in.zero > 0)
    throw NumericalError(std::string(what) +
                         ": degenerate sign form on an odd chain class");
  return in;
}

// Chains grouped by length; odd classes get signs from the class Gram under
// `form`, even chains are neutral.  `eps_of_positive` maps a positive form
// direction to the reported sign.
template <typename Form>
inline std::vector<BoundaryMode> chain_modes(const CanonicalSystem& cs,
                                             double location, Form&& form,
                                             int eps_of_positive,
                                             const char* what) {
  std::vector<BoundaryMode> modes;
  std::vector<Eigen::Index> lengths;
  for (const auto& ch : cs.chains)
    lengths.push_back(static_cast<Eigen::Index>(ch.size()));
  std::sort(lengths.begin(), lengths.end());
  lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());
  for (Eigen::Index len : lengths) {
    std::vector<const std::vector<Vec>*> cls;
    for (const auto& ch : cs.chains)
      if (static_cast<Eigen::Index>(ch.size()) == len) cls.push_back(&ch);
    if (len % 2 == 0) {
      for (std::size_t i = 0; i < cls.size(); ++i)
        modes.push_back({location, len, 0});
      continue;
    }
    auto in = odd_class_inertia(cls, form, what);
    for (Eigen::Index i = 0; i < in.positive; ++i)
      modes.push_back({location, len, eps_of_positive});
    for (Eigen::Index i = 0; i < in.negative; ++i)
      modes.push_back({location, len, -eps_of_positive});
  }
  std::sort(modes.begin(), modes.end(), [](const auto& l, const auto& r) {
    return l.length != r.length ? l.length > r.length : l.sign > r.sign;
  });
  return modes;
}

// Sign data at lambda = i*zeta.  `multiplicity` is the algebraic
// multiplicity when known from clustering; -1 lets the chain filtration
// decide locally (robust even where a defective eigenvalue scatters the
// dense-solver output beyond any clustering radius).
inline ImaginarySignSystem imaginary_cluster(const MatrixPolynomial& a,
                                             const Mat& f, const Mat& g,
                                             const Mat& t, double zeta,
                                             Eigen::Index multiplicity,
                                             const Tolerances& tol) {
  ImaginarySignSystem out;
  out.zeta = zeta;
  const Mat k = kernel_basis(a.evaluate(cd(0.0, zeta)),
                             eval_scale(a, cd(0.0, zeta)));
  if (k.cols() == 0)
    throw ValidationError("imaginary_sign_characteristics: i*zeta is not an "
                          "eigenvalue");
  const Mat kfk = (k.adjoint() * f * k).eval();
  const Mat ktk = (k.adjoint() * t * k).eval();
  const Mat kgk = (k.adjoint() * g * k).eval();
  Mat h1 = (zeta * zeta * kfk + ktk).eval();
  Mat h2 = (zeta * (2.0 * zeta * kfk + kgk)).eval();
  h1 = 0.5 * (h1 + h1.adjoint()).eval();
  h2 = 0.5 * (h2 + h2.adjoint()).eval();
  out.formula_agreement = (h1 - h2).norm();
  if (out.formula_agreement >
      1e-10 * (1.0 + std::max(h1.norm(), h2.norm())))
    throw NumericalError(
        "imaginary_sign_characteristics: energy form and linearization "
        "metric disagree on the kernel, deviation " +
        std::to_string(out.formula_agreement));
  Eigen::SelfAdjointEigenSolver<Mat> es(h1);
  out.form_values = es.eigenvalues();

  CanonicalSystem cs;
  bool have_cs = false;
  bool semisimple;
  if (multiplicity >= 0) {
    semisimple = k.cols() == multiplicity;
  } else {
    cs = canonical_system(a, cd(0.0, zeta), tol);
    have_cs = true;
    semisimple = true;
    for (const auto& ch : cs.chains) semisimple &= ch.size() == 1;
    if (semisimple && cs.algebraic_multiplicity() != k.cols())
      throw NumericalError(
          "imaginary_sign_characteristics: kernel dimension disagrees with "
          "the chain count");
  }

  if (semisimple) {
    // The kernel form decides every sign.
    if (have_cs) out.zeta = cs.eigenvalue.imag();
    out.kernel = (k * es.eigenvectors()).eval();
    const double cut = 1e-8 * (1.0 + out.form_values.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < k.cols(); ++i) {
      const double v = out.form_values(i);
      if (std::abs(v) <= cut)
        throw NumericalError(
            "imaginary_sign_characteristics: degenerate energy form on a "
            "semisimple kernel");
      out.modes.push_back({out.zeta, 1, v > 0 ? -1 : +1});
    }
    std::sort(out.modes.begin(), out.modes.end(),
              [](const auto& l, const auto& r) { return l.sign > r.sign; });
    return out;
  }

  out.semisimple = false;
  out.kernel = k;
  if (!have_cs) {
    cs = canonical_system(a, cd(0.0, zeta), tol);
    if (cs.algebraic_multiplicity() != multiplicity)
      throw NumericalError(
          "imaginary_sign_characteristics: chain extraction disagrees with "
          "the clustered multiplicity");
  }
  const double zr = cs.eigenvalue.imag();
  out.zeta = zr;
  // Metric form of the derived middle elements: with u = i zeta y^m + y^{m-1}
  // the companion lift of the chain has metric (F u, u) + (T y^m, y^m),
  // reducing to the energy form when the chain is a bare eigenvector.
  auto form = [&](const std::vector<Vec>& cj, const std::vector<Vec>& cl) {
    const std::size_t m = (cj.size() - 1) / 2;
    Vec uj = cd(0.0, zr) * cj[m] + (m > 0 ? cj[m - 1] : Vec::Zero(cj[m].size()));
    Vec ul = cd(0.0, zr) * cl[m] + (m > 0 ? cl[m - 1] : Vec::Zero(cl[m].size()));
    return cd(uj.dot(f * ul) + cj[m].dot(t * cl[m]));
  };
  out.modes = chain_modes(cs, zr, form, -1,
                          "imaginary_sign_characteristics");
  return out;
}

}  // namespace detail

// Sign data of the eigenvalue i*zeta of lambda^2 F + lambda (D + iG) + T.
inline ImaginarySignSystem imaginary_sign_characteristics(
    Mat f, Mat d, Mat g, Mat t, double zeta, const Tolerances& tol = {}) {
  detail::hermitize_checked(f, 1e-8, "imaginary_sign_characteristics: F");
  detail::hermitize_checked(d, 1e-8, "imaginary_sign_characteristics: D");
  detail::hermitize_checked(g, 1e-8, "imaginary_sign_characteristics: G");
  detail::hermitize_checked(t, 1e-8, "imaginary_sign_characteristics: T");
  if (f.rows() != d.rows() || f.rows() != g.rows() || f.rows() != t.rows())
    throw ValidationError(
        "imaginary_sign_characteristics: coefficient sizes differ");
  detail::require_invertible(f, "imaginary_sign_characteristics: F");
  detail::require_invertible(t, "imaginary_sign_characteristics: T");
  detail::require_psd(d, "imaginary_sign_characteristics: D");
  MatrixPolynomial a({t, d + cd(0.0, 1.0) * g, f});
  return detail::imaginary_cluster(a, f, g, t, zeta, -1, tol);
}

// Instability index of lambda^2 F + lambda (D + iG) + T with F, T Hermitian
// invertible, D Hermitian positive semidefinite, G Hermitian.  Counts
// eigenvalues with Re lambda > 0 and closes the identity
// kappa = nu(F) + nu(T) - eps_plus against the imaginary-axis sign data.
inline IndexReport instability_index(Mat f, Mat d, Mat g, Mat t,
                                     const Tolerances& tol = {},
                                     double axis_tol = 1e-7) {
  detail::hermitize_checked(f, 1e-8, "instability_index: F");
  detail::hermitize_checked(d, 1e-8, "instability_index: D");
  detail::hermitize_checked(g, 1e-8, "instability_index: G");
  detail::hermitize_checked(t, 1e-8, "instability_index: T");
  if (f.rows() != d.rows() || f.rows() != g.rows() || f.rows() != t.rows())
    throw ValidationError("instability_index: coefficient sizes differ");
  detail::require_invertible(f, "instability_index: F");
  detail::require_invertible(t, "instability_index: T");
  detail::require_psd(d, "instability_index: D");

  IndexReport rep;
  rep.nu_f = detail::form_inertia(f, 1e-10).negative;
  rep.nu_t = detail::form_inertia(t, 1e-10).negative;

  MatrixPolynomial a({t, d + cd(0.0, 1.0) * g, f});
  auto cp = companion_first(a);
  auto ge = qz_eigen(cp.p0, cp.p1, false);
  rep.eigenvalues = detail::finite_eigenvalues(ge, "instability_index");

  std::vector<double> zetas;
  for (cd l : rep.eigenvalues) {
    const double mag = std::abs(l);
    if (detail::off_axis(l.real(), mag, axis_tol)) {
      if (l.real() > 0) ++rep.kappa;
      if (!detail::off_axis(l.real(), mag, 10.0 * axis_tol))
        rep.indeterminate = true;
    } else {
      zetas.push_back(l.imag());
    }
  }

  for (const auto& group : detail::cluster_line(zetas, tol.cluster)) {
    auto iss = detail::imaginary_cluster(
        a, f, g, t, detail::mean(group),
        static_cast<Eigen::Index>(group.size()), tol);
    rep.worst_formula_agreement =
        std::max(rep.worst_formula_agreement, iss.formula_agreement);
    rep.eps_plus += iss.eps_plus();
    rep.imaginary_modes.insert(rep.imaginary_modes.end(), iss.modes.begin(),
                               iss.modes.end());
  }
  std::sort(rep.imaginary_modes.begin(), rep.imaginary_modes.end(),
            [](const auto& l, const auto& r) {
              return l.location != r.location ? l.location < r.location
                                              : l.length > r.length;
            });

  // Independent count: monic companion through an LU solve and a dense
  // nonsymmetric eigensolver, no QZ involved.
  const Eigen::Index m = f.rows();
  Eigen::PartialPivLU<Mat> flu(f);
  Mat comp = Mat::Zero(2 * m, 2 * m);
  comp.topLeftCorner(m, m) = -flu.solve(d + cd(0.0, 1.0) * g);
  comp.topRightCorner(m, m) = -flu.solve(t);
  comp.bottomLeftCorner(m, m) = Mat::Identity(m, m);
  Eigen::ComplexEigenSolver<Mat> ces(comp, false);
  for (Eigen::Index i = 0; i < ces.eigenvalues().size(); ++i) {
    const cd l = ces.eigenvalues()(i);
    if (detail::off_axis(l.real(), std::abs(l), axis_tol) && l.real() > 0)
      ++rep.oracle_kappa;
  }

  rep.formula_holds = rep.kappa == rep.nu_f + rep.nu_t - rep.eps_plus;
  return rep;
}

// Half-plane eigenvalue counts of T - lambda W against the inertia of W.
// Real eigenvalues contribute eps = -sign((W x, x)) per odd chain plus the
// neutral share; kappa_lower + sum(eps^+ + floor(l/2)) == nu(W) and the
// mirrored identity with pi(W) close together.
inline PontryaginReport pontryagin_count_check(Mat tlin, Mat w,
                                               const Tolerances& tol = {},
                                               double axis_tol = 1e-7) {
  detail::hermitize_checked(w, 1e-8, "pontryagin_count_check: W");
  detail::require_invertible(w, "pontryagin_count_check: W");
  if (tlin.rows() != tlin.cols() || tlin.rows() != w.rows())
    throw ValidationError("pontryagin_count_check: size mismatch");

  PontryaginReport rep;
  auto wi = detail::form_inertia(w, 1e-10);
  rep.pi_w = wi.positive;
  rep.nu_w = wi.negative;
  {
    Mat im_part = ((tlin - tlin.adjoint()) / cd(0.0, 2.0)).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(im_part, Eigen::EigenvaluesOnly);
    const double floor =
        -1e-10 * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff());
    rep.dissipative =
        im_part.rows() == 0 || es.eigenvalues().minCoeff() >= floor;
  }

  auto ge = qz_eigen(tlin, w, false);
  rep.eigenvalues = detail::finite_eigenvalues(ge, "pontryagin_count_check");
  std::vector<double> mus;
  for (cd l : rep.eigenvalues) {
    if (detail::off_axis(l.imag(), std::abs(l), axis_tol)) {
      (l.imag() > 0 ? rep.kappa_upper : rep.kappa_lower) += 1;
    } else {
      mus.push_back(l.real());
    }
  }

  MatrixPolynomial pencil({tlin, -w});
  for (const auto& group : detail::cluster_line(mus, tol.cluster)) {
    const double mu = detail::mean(group);
    const auto mult = static_cast<Eigen::Index>(group.size());
    const Mat k = detail::kernel_basis((tlin - mu * w).eval(),
                                       tlin.norm() + std::abs(mu) * w.norm());
    if (k.cols() == mult) {
      Mat gram = (k.adjoint() * w * k).eval();
      gram = 0.5 * (gram + gram.adjoint()).eval();
      auto in = detail::form_inertia(gram, 1e-8);
      if (in.zero > 0)
        throw NumericalError(
            "pontryagin_count_check: degenerate W form on a semisimple "
            "kernel");
      for (Eigen::Index i = 0; i < in.positive; ++i)
        rep.real_modes.push_back({mu, 1, -1});
      for (Eigen::Index i = 0; i < in.negative; ++i)
        rep.real_modes.push_back({mu, 1, +1});
      continue;
    }
    auto cs = canonical_system(pencil, cd(mu), tol);
    if (cs.algebraic_multiplicity() != mult)
      throw NumericalError(
          "pontryagin_count_check: chain extraction disagrees with the "
          "clustered multiplicity");
    const double mr = cs.eigenvalue.real();
    auto form = [&](const std::vector<Vec>& cj, const std::vector<Vec>& cl) {
      const std::size_t mid = (cj.size() - 1) / 2;
      return cd(cj[mid].dot(w * cl[mid]));
    };
    auto modes = detail::chain_modes(cs, mr, form, -1,
                                     "pontryagin_count_check");
    rep.real_modes.insert(rep.real_modes.end(), modes.begin(), modes.end());
  }
  std::sort(rep.real_modes.begin(), rep.real_modes.end(),
            [](const auto& l, const auto& r) {
              return l.location != r.location ? l.location < r.location
                                              : l.length > r.length;
            });

  Eigen::Index neutral = 0;
  for (const auto& md : rep.real_modes) neutral += neutral_share(md.length);
  rep.lower_sum = signed_share(rep.real_modes, +1);
  rep.upper_sum = signed_share(rep.real_modes, -1);
  rep.lower_identity = rep.kappa_lower + rep.lower_sum == rep.nu_w;
  rep.upper_identity = rep.kappa_upper + rep.upper_sum == rep.pi_w;
  rep.identity_holds = rep.lower_identity && rep.upper_identity;
  rep.truncated_bound_holds = rep.kappa_lower + neutral <= rep.nu_w &&
                              rep.kappa_upper + neutral <= rep.pi_w;
  rep.signed_bound_holds = rep.kappa_lower + rep.lower_sum <= rep.nu_w &&
                           rep.kappa_upper + rep.upper_sum <= rep.pi_w;
  return rep;
}

// Bound on the nonreal spectrum of the selfadjoint quadratic
// lambda^2 F + lambda D + T through the window (a, b).
inline NonrealBoundReport selfadjoint_nonreal_bound(Mat f, Mat d, Mat t,
                                                    double a, double b,
                                                    const Tolerances& tol = {},
                                                    double axis_tol = 1e-7) {
  detail::hermitize_checked(f, 1e-8, "selfadjoint_nonreal_bound: F");
  detail::hermitize_checked(d, 1e-8, "selfadjoint_nonreal_bound: D");
  detail::hermitize_checked(t, 1e-8, "selfadjoint_nonreal_bound: T");
  if (f.rows() != d.rows() || f.rows() != t.rows())
    throw ValidationError("selfadjoint_nonreal_bound: coefficient sizes differ");
  if (!(a < b))
    throw ValidationError("selfadjoint_nonreal_bound: need a < b");

  const Mat la = (a * a * f + a * d + t).eval();
  const Mat lb = (b * b * f + b * d + t).eval();
  NonrealBoundReport rep;
  {
    Eigen::SelfAdjointEigenSolver<Mat> ea(la, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Mat> eb(lb, Eigen::EigenvaluesOnly);
    const double ca = 1e-8 * (1.0 + ea.eigenvalues().cwiseAbs().maxCoeff());
    const double cb = 1e-8 * (1.0 + eb.eigenvalues().cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < la.rows(); ++i) {
      const double va = ea.eigenvalues()(i), vb = eb.eigenvalues()(i);
      if (std::abs(va) <= ca)
        throw ValidationError(
            "selfadjoint_nonreal_bound: a is an eigenvalue of the pencil");
      if (std::abs(vb) <= cb)
        throw ValidationError(
            "selfadjoint_nonreal_bound: b is an eigenvalue of the pencil");
      (va > 0 ? rep.pi_at_a : rep.nu_at_a) += 1;
      (vb > 0 ? rep.pi_at_b : rep.nu_at_b) += 1;
    }
  }

  // xi-side pencil: leading coefficient L(b) is invertible, so the
  // transformed spectrum is finite and complete; xi = -1 recovers mu = inf.
  const Mat dt = (2.0 * a * b * f + (a + b) * d + 2.0 * t).eval();
  MatrixPolynomial lt({la, dt, lb});
  auto cp = companion_first(lt);
  auto ge = qz_eigen(cp.p0, cp.p1, false);
  auto xis = detail::finite_eigenvalues(ge, "selfadjoint_nonreal_bound");

  auto to_mu = [&](double xi) {
    if (std::abs(xi + 1.0) <= 1e-8 * (1.0 + std::abs(xi)))
      return std::numeric_limits<double>::infinity();
    return (b * xi + a) / (xi + 1.0);
  };

  std::vector<double> real_xis;
  for (cd xi : xis) {
    if (detail::off_axis(xi.imag(), std::abs(xi), axis_tol)) {
      ++rep.eta;
      rep.nonreal_eigenvalues.push_back((b * xi + a) / (xi + 1.0));
    } else {
      real_xis.push_back(xi.real());
    }
  }

  for (const auto& group : detail::cluster_line(real_xis, tol.cluster)) {
    const double xi = detail::mean(group);
    const auto mult = static_cast<Eigen::Index>(group.size());
    const double mu = to_mu(xi);
    const Mat k = detail::kernel_basis(lt.evaluate(cd(xi)),
                                       detail::eval_scale(lt, cd(xi)));
    const Mat kfk = (k.adjoint() * lb * k).eval();
    const Mat ktk = (k.adjoint() * la * k).eval();
    const Mat kdk = (k.adjoint() * dt * k).eval();
    Mat h1 = (xi * xi * kfk - ktk).eval();
    Mat h2 = (xi * (2.0 * xi * kfk + kdk)).eval();
    h1 = 0.5 * (h1 + h1.adjoint()).eval();
    h2 = 0.5 * (h2 + h2.adjoint()).eval();
    rep.worst_formula_agreement = std::max(
        rep.worst_formula_agreement, (h1 - h2).norm());
    if ((h1 - h2).norm() > 1e-10 * (1.0 + std::max(h1.norm(), h2.norm())))
      throw NumericalError(
          "selfadjoint_nonreal_bound: weighted derivative form and its "
          "kernel identity disagree");
    if (k.cols() == mult) {
      auto in = detail::form_inertia(h1, 1e-8);
      for (Eigen::Index i = 0; i < in.positive; ++i)
        rep.real_modes.push_back({mu, 1, +1});
      for (Eigen::Index i = 0; i < in.negative; ++i)
        rep.real_modes.push_back({mu, 1, -1});
      for (Eigen::Index i = 0; i < in.zero; ++i)
        rep.real_modes.push_back({mu, 1, 0});
      continue;
    }
    auto cs = canonical_system(lt, cd(xi), tol);
    if (cs.algebraic_multiplicity() != mult)
      throw NumericalError(
          "selfadjoint_nonreal_bound: chain extraction disagrees with the "
          "clustered multiplicity");
    const double xr = cs.eigenvalue.real();
    auto form = [&](const std::vector<Vec>& cj, const std::vector<Vec>& cl) {
      const std::size_t mid = (cj.size() - 1) / 2;
      Vec uj = cd(xr) * cj[mid] + (mid > 0 ? cj[mid - 1] : Vec::Zero(cj[mid].size()));
      Vec ul = cd(xr) * cl[mid] + (mid > 0 ? cl[mid - 1] : Vec::Zero(cl[mid].size()));
      return cd(uj.dot(lb * ul) - cj[mid].dot(la * cl[mid]));
    };
    auto modes =
        detail::chain_modes(cs, mu, form, +1, "selfadjoint_nonreal_bound");
    rep.real_modes.insert(rep.real_modes.end(), modes.begin(), modes.end());
  }
  std::sort(rep.real_modes.begin(), rep.real_modes.end(),
            [](const auto& l, const auto& r) {
              return l.location != r.location ? l.location < r.location
                                              : l.length > r.length;
            });

  for (const auto& md : rep.real_modes) {
    rep.neutral += neutral_share(md.length);
    if (md.sign > 0) ++rep.delta_plus;
    if (md.sign < 0) ++rep.delta_minus;
  }

  const Eigen::Index stated_budget = rep.pi_at_a + rep.nu_at_b;
  const Eigen::Index metric_budget = rep.pi_at_b + rep.nu_at_a;
  rep.bound_holds = rep.eta <= 2 * (stated_budget - rep.delta_plus);
  rep.ordering_consistent = stated_budget == metric_budget;
  rep.identity_holds =
      rep.eta + 2 * (rep.delta_plus + rep.neutral) == 2 * metric_budget;
  rep.mirror_identity_holds =
      rep.eta + 2 * (rep.delta_minus + rep.neutral) == 2 * stated_budget;
  return rep;
}

}  // namespace polspec
