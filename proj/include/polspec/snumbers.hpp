#pragma once

// Singular-number inequality battery at desk scale, determinant continuity
// checks for I - A, and the indefinite-metric l2 example as a finite
// truncation with basis-quality diagnostics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "core.hpp"
#include "rng.hpp"

namespace polspec {

// One verified inequality or identity.  `max_violation` is the worst
// relative excess (lhs - rhs)/(1 + |rhs|) over all trials and indices; for
// identities it is the relative deviation.  Anything beyond 1e-10 stores a
// witness and means the implementation, not the theorem, is wrong.
struct PropertyReport {
  std::string id;
  int trials = 0;
  double max_violation = 0.0;
  std::string witness;
};

namespace detail {

constexpr double kPropertyTol = 1e-10;

class Recorder {
 public:
  explicit Recorder(std::string id) { rep_.id = std::move(id); }

  void bound(double lhs, double rhs, int trial, const char* what) {
    note((lhs - rhs) / (1.0 + std::abs(rhs)), lhs, rhs, trial, what);
  }

  void identity(double lhs, double rhs, int trial, const char* what) {
    note(std::abs(lhs - rhs) / (1.0 + std::abs(rhs)), lhs, rhs, trial, what);
  }

  PropertyReport take(int trials) {
    rep_.trials = trials;
    return rep_;
  }

 private:
  void note(double viol, double lhs, double rhs, int trial, const char* what) {
    if (viol <= rep_.max_violation) return;
    rep_.max_violation = viol;
    if (viol > kPropertyTol) {
      std::ostringstream os;
      os << what << " at trial " << trial << ": lhs " << lhs << " rhs " << rhs;
      rep_.witness = os.str();
    }
  }

  PropertyReport rep_;
};

inline Eigen::VectorXd svals(const Mat& a) {
  return Eigen::JacobiSVD<Mat>(a).singularValues();
}

// 1-indexed access with the compact-operator convention s_k = 0 past the rank.
inline double sget(const Eigen::VectorXd& s, Eigen::Index k) {
  return k >= 1 && k <= s.size() ? s(k - 1) : 0.0;
}

inline Eigen::VectorXd eig_moduli(const Mat& a) {
  Eigen::ComplexEigenSolver<Mat> es(a, false);
  Eigen::VectorXd mod = es.eigenvalues().cwiseAbs();
  std::sort(mod.data(), mod.data() + mod.size(), std::greater<double>());
  return mod;
}

inline double trace_norm(const Mat& a) { return svals(a).sum(); }

}  // namespace detail

// Inequality battery over random complex matrices: adjoint invariance,
// multiplicative bounds, approximation numbers, Fan/Horn sums and products,
// Weyl-type eigenvalue bounds, and the trace bound |tr A| <= sum s_k.
inline std::vector<PropertyReport> snumber_battery(int m, int trials,
                                                   std::uint64_t seed) {
  if (m < 1 || m > 16)
    throw ValidationError("snumber_battery: matrix size must be in 1..16");
  if (trials < 1) throw ValidationError("snumber_battery: trials must be >= 1");

  using detail::sget;
  detail::Recorder adjoint("property-1"), scaling("property-2"),
      approx("property-3"), fan_shift("property-4"), horn_shift("property-5"),
      weyl_product("property-6"), weyl_power("property-7"),
      weyl_lattice("property-8"), fan_sum("property-9"),
      horn_sum("property-10"), trace_bound("trace");

  Rng rng(seed);
  for (int trial = 0; trial < trials; ++trial) {
    const Mat a = rand_matrix(rng, m, m);
    const Mat b = rand_matrix(rng, m, m);
    const Mat d = rand_matrix(rng, m, m);
    const Eigen::VectorXd sa = detail::svals(a);
    const Eigen::VectorXd sb = detail::svals(b);
    const Eigen::VectorXd sab_sum = detail::svals(a + b);
    const Eigen::VectorXd sab_prod = detail::svals(a * b);

    // 1: adjoint invariance.
    {
      const Eigen::VectorXd sa_adj = detail::svals(a.adjoint());
      for (int k = 1; k <= m; ++k)
        adjoint.identity(sget(sa_adj, k), sget(sa, k), trial, "s_k(A*)");
    }

    // 2: two-sided multiplicative bound by the operator norm.
    {
      const double dnorm = detail::svals(d)(0);
      const Eigen::VectorXd sda = detail::svals(d * a);
      const Eigen::VectorXd sad = detail::svals(a * d);
      for (int k = 1; k <= m; ++k) {
        scaling.bound(sget(sda, k), dnorm * sget(sa, k), trial, "s_k(DA)");
        scaling.bound(sget(sad, k), dnorm * sget(sa, k), trial, "s_k(AD)");
      }
    }

    // 3: approximation numbers: s_{k+1}(A) equals the distance to rank-k
    // matrices, attained by the singular truncation; rank-r perturbations
    // shift the tail by at most r.
    {
      Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
      for (int k = 0; k < m; ++k) {
        Mat trunc = Mat::Zero(m, m);
        if (k > 0)
          trunc = svd.matrixU().leftCols(k) *
                  svd.singularValues().head(k).asDiagonal() *
                  svd.matrixV().leftCols(k).adjoint();
        const double dist = detail::svals(a - trunc)(0);
        approx.identity(dist, sget(sa, k + 1), trial, "min rank-k distance");
      }
      const int r = 1 + trial % std::max(1, std::min(3, m));
      const Mat f = rand_matrix(rng, m, r) * rand_matrix(rng, r, m);
      const Eigen::VectorXd saf = detail::svals(a + f);
      for (int k = r + 1; k <= m; ++k)
        approx.bound(sget(saf, k), sget(sa, k - r), trial,
                     "s_k(A+F) vs s_{k-r}(A)");
    }

    // 4: shifted additive bound plus the q-term consequence.
    {
      for (int k = 1; k <= m; ++k)
        for (int j = 1; k + j + 1 <= m; ++j)
          fan_shift.bound(sget(sab_sum, k + j + 1), sget(sa, k) + sget(sb, j),
                          trial, "s_{k+m+1}(A+B)");
      const Mat c = rand_matrix(rng, m, m);
      const Eigen::VectorXd sc = detail::svals(c);
      const Eigen::VectorXd s3 = detail::svals(a + b + c);
      for (int k = 1; k <= m; ++k) {
        const int k2 = (k - 1) / 2 + 1;
        fan_shift.bound(sget(sab_sum, k), sget(sa, k2) + sget(sb, k2), trial,
                        "two-term split");
        const int k3 = (k - 1) / 3 + 1;
        fan_shift.bound(sget(s3, k), sget(sa, k3) + sget(sb, k3) + sget(sc, k3),
                        trial, "three-term split");
      }

      // 5: multiplicative analogue.
      for (int k = 1; k <= m; ++k)
        for (int j = 1; k + j - 1 <= m; ++j)
          horn_shift.bound(sget(sab_prod, k + j - 1), sget(sa, k) * sget(sb, j),
                           trial, "s_{k+m-1}(AB)");
      const Eigen::VectorXd p3 = detail::svals(a * b * c);
      for (int k = 1; k <= m; ++k) {
        const int k3 = (k - 1) / 3 + 1;
        horn_shift.bound(sget(p3, k), sget(sa, k3) * sget(sb, k3) * sget(sc, k3),
                         trial, "three-factor split");
      }
    }

    // 6-8: eigenvalue bounds by singular numbers.
    {
      const Eigen::VectorXd mod = detail::eig_moduli(a);
      double lam_prod = 1.0, s_prod = 1.0;
      for (int k = 1; k <= m; ++k) {
        lam_prod *= mod(k - 1);
        s_prod *= sget(sa, k);
        weyl_product.bound(lam_prod, s_prod, trial, "|lambda| product");
      }
      for (double p : {0.5, 1.0, 2.0}) {
        double lam_sum = 0.0, s_sum = 0.0;
        for (int k = 1; k <= m; ++k) {
          lam_sum += std::pow(mod(k - 1), p);
          s_sum += std::pow(sget(sa, k), p);
          weyl_power.bound(lam_sum, s_sum, trial, "power sums");
        }
      }
      for (double r : {0.5, 1.0, 2.0}) {
        double lam_lat = 1.0, s_lat = 1.0;
        for (int k = 1; k <= m; ++k) {
          lam_lat *= 1.0 + r * mod(k - 1);
          s_lat *= 1.0 + r * sget(sa, k);
          weyl_lattice.bound(lam_lat, s_lat, trial, "lattice products");
        }
      }

      // trace bound.
      trace_bound.bound(std::abs(a.trace()), sa.sum(), trial, "|tr A|");
    }

    // 9-10: Fan sums and Horn products in summed form.
    {
      double lhs_sum = 0.0, rhs_sum = 0.0;
      double lhs_prod = 0.0, rhs_prod = 0.0;
      for (int k = 1; k <= m; ++k) {
        lhs_sum += sget(sab_sum, k);
        rhs_sum += sget(sa, k) + sget(sb, k);
        fan_sum.bound(lhs_sum, rhs_sum, trial, "sum s_j(A+B)");
        lhs_prod += sget(sab_prod, k);
        rhs_prod += sget(sa, k) * sget(sb, k);
        horn_sum.bound(lhs_prod, rhs_prod, trial, "sum s_j(AB)");
      }
    }
  }

  std::vector<PropertyReport> out;
  for (auto* r : {&adjoint, &scaling, &approx, &fan_shift, &horn_shift,
                  &weyl_product, &weyl_power, &weyl_lattice, &fan_sum,
                  &horn_sum, &trace_bound})
    out.push_back(r->take(trials));
  return out;
}

// Determinant functional checks for I - A: rank-one closed form,
// multiplicativity, the quotient identity, and the continuity trend in the
// trace norm (the measured Lipschitz constant is reported, the monotone
// decrease of |det(I-A) - det(I-B)| with ||A-B||_1 is the asserted part).
inline std::vector<PropertyReport> det_continuity_check(
    int m, int trials, std::uint64_t seed = 0x5eed0de7) {
  if (m < 1 || m > 16)
    throw ValidationError("det_continuity_check: matrix size must be in 1..16");
  if (trials < 1)
    throw ValidationError("det_continuity_check: trials must be >= 1");

  detail::Recorder rank_one("det-rank-one"), mult("det-multiplicativity"),
      quot("det-quotient"), trend("det-continuity");
  double measured_constant = 0.0;

  Rng rng(seed);
  const Mat eye = Mat::Identity(m, m);
  for (int trial = 0; trial < trials; ++trial) {
    {
      Vec e = rand_matrix(rng, m, 1).col(0);
      e /= e.norm();
      const cd amp = rng.cnormal();
      const Mat r1 = (amp * e * e.adjoint()).eval();
      rank_one.identity(std::abs((eye - r1).determinant() - (1.0 - amp)), 0.0,
                        trial, "rank-one determinant");
    }

    const Mat a = rand_matrix(rng, m, m);
    const Mat b = rand_matrix(rng, m, m);
    const cd da = (eye - a).determinant();
    const cd db = (eye - b).determinant();
    mult.identity(std::abs(((eye - a) * (eye - b)).determinant() - da * db),
                  0.0, trial, "product determinant");
    if (std::abs(db) > 1e-8) {
      const Mat quotient = (eye - a) * (eye - b).inverse();
      quot.identity(std::abs(quotient.determinant() - da / db), 0.0, trial,
                    "quotient determinant");
    }

    // Continuity: fixed direction, shrinking trace-norm steps.
    {
      Mat base = rand_matrix(rng, m, m);
      base /= detail::trace_norm(base);
      Mat dir = rand_matrix(rng, m, m);
      dir /= detail::trace_norm(dir);
      const cd det_base = (eye - base).determinant();
      double prev = 0.0;
      bool first = true;
      for (double delta : {1e-2, 1e-4, 1e-6}) {
        const cd det_pert = (eye - (base + delta * dir)).determinant();
        const double diff = std::abs(det_base - det_pert);
        measured_constant = std::max(
            measured_constant, diff / (delta * std::max(1e-30, std::abs(det_base))));
        if (!first)
          trend.bound(diff, prev, trial, "shrinking step must shrink the gap");
        prev = diff;
        first = false;
      }
    }
  }

  auto out = std::vector<PropertyReport>{rank_one.take(trials),
                                         mult.take(trials), quot.take(trials)};
  PropertyReport tr = trend.take(trials);
  if (tr.witness.empty()) {
    std::ostringstream os;
    os << "measured constant " << measured_constant;
    tr.witness = os.str();
  }
  out.push_back(std::move(tr));
  return out;
}

// Finite truncation of the indefinite-metric l2 example: the compact
// operator with a degenerate kernel direction, the metric G that makes it
// selfadjoint, its explicit eigenvectors, and basis-quality diagnostics for
// the root system.
struct PontryaginFixture {
  Mat a;
  Mat g;
  Eigen::VectorXd betas;          // beta_3 .. beta_n
  std::vector<Vec> root_vectors;  // y^1, y^2, y^3 .. y^n
  double gamma = 0.0;             // 1 - sum |alpha_k|^2 / beta_k
  double ratio_sq_sum = 0.0;      // sum |alpha_k / beta_k|^2 (truncated)
  double ga_deviation = 0.0;      // || GA - (GA)* ||
  double eigvec_residual = 0.0;   // worst || A y^k - beta_k y^k ||
  double condition_number = 0.0;  // normalized root-vector matrix
  double sigma_min = 0.0;         // its smallest singular value
};

inline PontryaginFixture pontryagin_example(
    int n, const std::function<cd(int)>& alpha,
    const std::function<double(int)>& beta) {
  if (n < 4) throw ValidationError("pontryagin_example: need n >= 4");
  PontryaginFixture fx;
  fx.betas.resize(n - 2);
  for (int k = 3; k <= n; ++k) {
    const double bk = beta(k);
    if (!(bk > 0.0))
      throw ValidationError("pontryagin_example: beta must be positive");
    if (k > 3 && !(bk < fx.betas(k - 4)))
      throw ValidationError(
          "pontryagin_example: beta must be strictly decreasing");
    fx.betas(k - 3) = bk;
  }

  fx.a = Mat::Zero(n, n);
  fx.g = Mat::Zero(n, n);
  fx.g(0, 1) = fx.g(1, 0) = 1.0;
  for (int i = 2; i < n; ++i) fx.g(i, i) = 1.0;
  fx.a(1, 0) = 1.0;
  for (int k = 3; k <= n; ++k) {
    const cd ak = alpha(k);
    const double bk = fx.betas(k - 3);
    fx.a(1, k - 1) = ak;
    fx.a(k - 1, 0) = std::conj(ak);
    fx.a(k - 1, k - 1) = bk;
    fx.gamma -= std::norm(ak) / bk;
    fx.ratio_sq_sum += std::norm(ak / bk);
  }
  fx.gamma += 1.0;
  fx.ga_deviation = (fx.g * fx.a - (fx.g * fx.a).adjoint()).norm();

  // y^1: the kernel chain partner (scaled by -1/gamma when gamma != 0);
  // y^2 = e_2; y^k has alpha_k/beta_k in slot 2 and 1 in slot k.
  Vec y1 = Vec::Zero(n);
  y1(0) = -1.0;
  for (int k = 3; k <= n; ++k)
    y1(k - 1) = std::conj(alpha(k)) / fx.betas(k - 3);
  if (std::abs(fx.gamma) > 1e-12) y1 *= -1.0 / fx.gamma;
  fx.root_vectors.push_back(y1);
  fx.root_vectors.push_back(Vec::Unit(n, 1));
  for (int k = 3; k <= n; ++k) {
    Vec yk = Vec::Zero(n);
    yk(1) = alpha(k) / fx.betas(k - 3);
    yk(k - 1) = 1.0;
    fx.eigvec_residual = std::max(
        fx.eigvec_residual, (fx.a * yk - fx.betas(k - 3) * yk).norm());
    fx.root_vectors.push_back(yk);
  }

  Mat basis(n, n);
  for (int j = 0; j < n; ++j)
    basis.col(j) = fx.root_vectors[static_cast<std::size_t>(j)].normalized();
  Eigen::JacobiSVD<Mat> svd(basis);
  fx.sigma_min = svd.singularValues()(n - 1);
  fx.condition_number =
      fx.sigma_min > 0 ? svd.singularValues()(0) / fx.sigma_min
                       : std::numeric_limits<double>::infinity();
  return fx;
}

}  // namespace polspec
