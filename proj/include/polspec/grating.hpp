#pragma once

// Plane-wave scattering off a periodic corrugated boundary, reduced to a
// quadratic pencil over the quasi-periodic Fourier basis e^{i mu_n x}.
// Straightening the boundary (eta = y - a(x)) leaves coefficients that are
// x-independent in eta, so separation of variables yields a pencil whose
// blocks are Toeplitz in the profile harmonics.  Its eigenfunctions are
// known exactly: dressed carriers e^{+-i lambda_n a(x)} e^{i mu_n x} with
// lambda_n = sqrt(k^2 - mu_n^2), which makes the module a sharp end-to-end
// accuracy probe as well as a solver.

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "core.hpp"
#include "lapack.hpp"
#include "linearize.hpp"

namespace polspec {

struct GratingProblem {
  Vec profile_hat;  // harmonics of the real boundary profile, ascending -J..J
  double wavenum = 0.0;  // k > 0
  double angle = 0.0;    // incidence measured from the vertical
  int modes = 0;         // truncation half-width M (basis -M..M)
  std::vector<std::string> warnings;

  int bandwidth() const {
    return static_cast<int>((profile_hat.size() - 1) / 2);
  }
  // horizontal wavenumber of the carrier, nu / 2pi
  double carrier() const { return wavenum * std::sin(angle); }
  double mu(int n) const { return carrier() + n; }
  // principal branch: positive real for propagating modes, positive
  // imaginary for evanescent ones
  cd vertical_wavenumber(int n) const {
    const double m = mu(n);
    return std::sqrt(cd(wavenum * wavenum - m * m, 0.0));
  }
  cd harmonic(int j) const {
    return std::abs(j) <= bandwidth() ? profile_hat(bandwidth() + j) : cd(0);
  }
  double profile(double x) const {
    cd v = 0;
    for (int j = -bandwidth(); j <= bandwidth(); ++j)
      v += harmonic(j) * std::exp(cd(0, j * x));
    return v.real();
  }
  double profile_slope(double x) const {
    cd v = 0;
    for (int j = -bandwidth(); j <= bandwidth(); ++j)
      v += cd(0, j) * harmonic(j) * std::exp(cd(0, j * x));
    return v.real();
  }
};

namespace detail {

inline void validate_grating(GratingProblem& gp) {
  if (!(gp.wavenum > 0)) throw ValidationError("wavenum must be positive");
  if (gp.modes < 1) throw ValidationError("mode truncation must be positive");
  if (!(gp.angle >= 0 && gp.angle < 1.5707963267948966))
    throw ValidationError("incidence angle must lie in [0, pi/2)");
  if (gp.profile_hat.size() % 2 == 0)
    throw ValidationError("profile harmonics must come as -J..J (odd count)");
  const int bw = gp.bandwidth();
  double scale = 1.0 + gp.profile_hat.cwiseAbs().maxCoeff();
  for (int j = 1; j <= bw; ++j)
    if (std::abs(gp.profile_hat(bw + j) - std::conj(gp.profile_hat(bw - j))) >
        1e-12 * scale)
      throw ValidationError("profile must be real-valued");
  if (std::abs(gp.profile_hat(bw).imag()) > 1e-12 * scale)
    throw ValidationError("profile must be real-valued");
  // exact conjugate symmetry from here on
  gp.profile_hat(bw) = gp.profile_hat(bw).real();
  for (int j = 1; j <= bw; ++j) {
    const cd sym =
        0.5 * (gp.profile_hat(bw + j) + std::conj(gp.profile_hat(bw - j)));
    gp.profile_hat(bw + j) = sym;
    gp.profile_hat(bw - j) = std::conj(sym);
  }
  if (gp.angle > 0) {
    double max_slope = -1e300;
    for (int l = 0; l < 512; ++l)
      max_slope =
          std::max(max_slope, gp.profile_slope(2 * M_PI * l / 512.0));
    if (1.0 / std::tan(gp.angle) <= max_slope)
      throw ValidationError(
          "incident wave must reach every boundary point (cot angle above "
          "the maximal slope)");
  }
  if (bw > 2 * gp.modes) {
    double tail = 0, total = 0;
    for (int j = -bw; j <= bw; ++j) {
      total += std::abs(gp.harmonic(j));
      if (std::abs(j) > 2 * gp.modes) tail += std::abs(gp.harmonic(j));
    }
    if (tail > 1e-12 * (1.0 + total))
      gp.warnings.push_back(
          "profile harmonics beyond the representable band are ignored");
  }
}

inline int propagating_count(const GratingProblem& gp) {
  int count = 0;
  const int lim = static_cast<int>(std::ceil(gp.wavenum + 2));
  for (int n = -lim; n <= lim; ++n)
    if (gp.mu(n) * gp.mu(n) < gp.wavenum * gp.wavenum) ++count;
  return count;
}

}  // namespace detail

inline GratingProblem make_grating(const Vec& fourier, double k, double phi,
                                   int m) {
  GratingProblem gp;
  gp.profile_hat = fourier;
  gp.wavenum = k;
  gp.angle = phi;
  gp.modes = m;
  detail::validate_grating(gp);
  return gp;
}

// equispaced real samples on [0, 2pi), trigonometric interpolation
inline GratingProblem make_grating_samples(const Eigen::VectorXd& samples,
                                           double k, double phi, int m) {
  const int count = static_cast<int>(samples.size());
  if (count < 3) throw ValidationError("need at least three profile samples");
  const int bw = (count - 1) / 2;
  Vec hat(2 * bw + 1);
  for (int j = -bw; j <= bw; ++j) {
    cd acc = 0;
    for (int l = 0; l < count; ++l)
      acc += samples(l) * std::exp(cd(0, -2.0 * M_PI * j * l / count));
    hat(bw + j) = acc / double(count);
  }
  GratingProblem gp = make_grating(hat, k, phi, m);
  if (count % 2 == 0) {
    cd nyq = 0;
    for (int l = 0; l < count; ++l)
      nyq += samples(l) *
             std::exp(cd(0, -M_PI * l)) / double(count);
    if (std::abs(nyq) > 1e-12 * (1.0 + samples.cwiseAbs().maxCoeff()))
      gp.warnings.push_back(
          "sampling-limit harmonic dropped by the interpolation");
  }
  return gp;
}

// T(lambda) = lambda^2 F + lambda G + C over e^{i mu_n x}, n = -M..M:
//   C  = diag(mu_n^2 - k^2)
//   G_{nm} = -i (n-m) (mu_n + mu_m) a_{n-m}
//   F  = I + Toeplitz of the harmonics of (a')^2
inline MatrixPolynomial build_pencil(const GratingProblem& gp) {
  const int big_m = gp.modes;
  if (big_m < detail::propagating_count(gp) + 4)
    throw ValidationError(
        "mode truncation must exceed the propagating band by at least four");
  const int dim = 2 * big_m + 1;
  const int bw = gp.bandwidth();

  Mat c = Mat::Zero(dim, dim);
  for (int n = -big_m; n <= big_m; ++n)
    c(n + big_m, n + big_m) =
        gp.mu(n) * gp.mu(n) - gp.wavenum * gp.wavenum;

  Mat g = Mat::Zero(dim, dim);
  for (int n = -big_m; n <= big_m; ++n)
    for (int m = std::max(-big_m, n - bw); m <= std::min(big_m, n + bw); ++m) {
      const int j = n - m;
      if (j == 0) continue;
      g(n + big_m, m + big_m) =
          cd(0, -double(j)) * (gp.mu(n) + gp.mu(m)) * gp.harmonic(j);
    }

  // harmonics of (a')^2 by convolution of those of a'
  std::vector<cd> slope_sq(4 * bw + 1, cd(0));
  for (int p = -bw; p <= bw; ++p)
    for (int q = -bw; q <= bw; ++q)
      slope_sq[static_cast<std::size_t>(p + q + 2 * bw)] +=
          cd(0, p) * gp.harmonic(p) * cd(0, q) * gp.harmonic(q);
  Mat f = Mat::Identity(dim, dim);
  for (int n = -big_m; n <= big_m; ++n)
    for (int m = -big_m; m <= big_m; ++m) {
      const int j = n - m;
      if (std::abs(j) <= 2 * bw)
        f(n + big_m, m + big_m) += slope_sq[static_cast<std::size_t>(j + 2 * bw)];
    }

  for (const Mat* blk : {&c, &g, &f}) {
    const double dev = (*blk - blk->adjoint()).norm();
    if (dev > 1e-12 * (1.0 + blk->norm()))
      throw NumericalError("assembled pencil block lost Hermitian symmetry");
  }
  c = ((c + c.adjoint()) / 2.0).eval();
  g = ((g + g.adjoint()) / 2.0).eval();
  f = ((f + f.adjoint()) / 2.0).eval();
  return MatrixPolynomial({c, g, f});
}

// Exact eigenpair family: f_n^{+-}(x) = e^{+-i lambda_n a(x)} e^{i mu_n x},
// stored as coefficient vectors over the truncated basis.
struct GratingMode {
  int n = 0;
  double mu = 0.0;
  cd lambda;
  int sign = 0;   // +1 when lambda is real positive (the outgoing member)
  Vec outgoing;   // coefficients of the + dressing
  Vec incoming;   // coefficients of the - dressing
};

namespace detail {

inline Vec dressed_coefficients(const GratingProblem& gp, int n, cd lambda) {
  const int big_m = gp.modes;
  const int quad = 2048;
  Vec out = Vec::Zero(2 * big_m + 1);
  std::vector<cd> dressing(quad);
  for (int l = 0; l < quad; ++l) {
    const double x = 2 * M_PI * l / quad;
    dressing[static_cast<std::size_t>(l)] =
        std::exp(cd(0, 1) * lambda * gp.profile(x));
  }
  for (int m = -big_m; m <= big_m; ++m) {
    cd acc = 0;
    for (int l = 0; l < quad; ++l)
      acc += dressing[static_cast<std::size_t>(l)] *
             std::exp(cd(0, -2.0 * M_PI * (m - n) * l / quad));
    out(m + big_m) = acc / double(quad);
  }
  return out;
}

}  // namespace detail

inline std::vector<GratingMode> analytic_modes(const GratingProblem& gp,
                                               int n_lo, int n_hi) {
  if (n_lo > n_hi) throw ValidationError("empty mode range");
  std::vector<GratingMode> out;
  for (int n = n_lo; n <= n_hi; ++n) {
    GratingMode md;
    md.n = n;
    md.mu = gp.mu(n);
    md.lambda = gp.vertical_wavenumber(n);
    const bool resonant =
        std::abs(md.lambda) <= 1e-10 * (1.0 + gp.wavenum);
    md.sign = (!resonant && md.lambda.imag() == 0.0) ? +1 : 0;
    md.outgoing = detail::dressed_coefficients(gp, n, md.lambda);
    md.incoming = detail::dressed_coefficients(gp, n, -md.lambda);
    out.push_back(std::move(md));
  }
  return out;
}

// The selected half system: outgoing propagating waves (sign +1), decaying
// waves, and at a resonance only the eigenfunction of the length-2 chain.
struct SelectedMode {
  int n = 0;
  double mu = 0.0;
  cd lambda;
  int sign = 0;
  bool resonant = false;
  double sign_check = 0.0;  // (T'(lambda_n) f_n, f_n) / (4 pi lambda_n)
  Vec coeffs;
};

struct HalfSelection {
  std::vector<SelectedMode> modes;
  int propagating = 0;
  std::vector<int> resonant_indices;
};

inline HalfSelection outgoing_selection(const GratingProblem& gp) {
  const MatrixPolynomial pencil = build_pencil(gp);
  const Mat& g = pencil.coeff(1);
  const Mat& f = pencil.coeff(2);
  HalfSelection sel;
  for (const GratingMode& md : analytic_modes(gp, -gp.modes, gp.modes)) {
    SelectedMode sm;
    sm.n = md.n;
    sm.mu = md.mu;
    sm.lambda = md.lambda;
    sm.resonant = std::abs(md.lambda) <= 1e-10 * (1.0 + gp.wavenum);
    sm.sign = md.sign;
    sm.coeffs = md.outgoing;
    if (sm.sign == +1) {
      ++sel.propagating;
      const Mat tprime = g + 2.0 * md.lambda * f;
      sm.sign_check =
          (md.outgoing.adjoint() * tprime * md.outgoing)(0).real() /
          (2.0 * md.lambda.real());
    }
    if (sm.resonant)
      sel.resonant_indices.push_back(sm.n);
    sel.modes.push_back(std::move(sm));
  }
  return sel;
}

struct ResonanceInfo {
  bool resonant = false;
  std::vector<int> indices;
  bool double_case = false;  // carrier at a half-integer: two cut-off modes
};

inline ResonanceInfo resonance_detect(double k, double phi) {
  if (!(k > 0)) throw ValidationError("wavenum must be positive");
  const double q = k * std::sin(phi);
  ResonanceInfo info;
  for (double target : {k - q, -k - q}) {
    const int n = static_cast<int>(std::lround(target));
    const double m = q + n;
    if (std::abs(m * m - k * k) <= 1e-10 &&
        (info.indices.empty() || info.indices.back() != n))
      info.indices.push_back(n);
  }
  std::sort(info.indices.begin(), info.indices.end());
  info.resonant = !info.indices.empty();
  info.double_case = info.indices.size() == 2;
  return info;
}

inline ResonanceInfo resonance_detect(const GratingProblem& gp) {
  return resonance_detect(gp.wavenum, gp.angle);
}

// Reflected field: boundary trace matched in the selected half system by
// least squares on 4M+1 collocation points; the expansion then evaluates as
// a finite sum of exact plane waves e^{i mu_n x + i lambda_n y}.
struct ScatterSolution {
  std::vector<SelectedMode> modes;
  Vec amplitudes;
  double boundary_residual = 0.0;
  double condition = 0.0;
  int propagating = 0;
  std::vector<int> resonant_indices;
  Vec profile_hat;
  double wavenum = 0.0;
  double angle = 0.0;

  double profile(double x) const {
    const int bw = static_cast<int>((profile_hat.size() - 1) / 2);
    cd v = 0;
    for (int j = -bw; j <= bw; ++j)
      v += profile_hat(bw + j) * std::exp(cd(0, j * x));
    return v.real();
  }
  cd incident(double x, double y) const {
    return std::exp(cd(0, wavenum * std::sin(angle) * x -
                          wavenum * std::cos(angle) * y));
  }
  cd field(double x, double y) const {
    if (y < profile(x) - 1e-12)
      throw ValidationError("field point below the boundary");
    cd u = 0;
    for (std::size_t i = 0; i < modes.size(); ++i)
      u += amplitudes(static_cast<Eigen::Index>(i)) *
           std::exp(cd(0, 1) * (modes[i].mu * x + modes[i].lambda * y));
    return u;
  }
};

inline ScatterSolution solve_scattering(const GratingProblem& gp) {
  HalfSelection sel = outgoing_selection(gp);
  const int rows = 4 * gp.modes + 1;
  const int cols = static_cast<int>(sel.modes.size());
  Mat a(rows, cols);
  Vec rhs(rows);
  const double q = gp.carrier();
  const double depth = gp.wavenum * std::cos(gp.angle);
  for (int l = 0; l < rows; ++l) {
    const double x = 2 * M_PI * l / rows;
    const double ax = gp.profile(x);
    rhs(l) = std::exp(cd(0, q * x - depth * ax));
    for (int i = 0; i < cols; ++i) {
      const SelectedMode& sm = sel.modes[static_cast<std::size_t>(i)];
      a(l, i) = std::exp(cd(0, 1) * (sm.lambda * ax + sm.mu * x));
    }
  }
  Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues()(cols - 1);
  const double cond =
      smin > 0 ? svd.singularValues()(0) / smin : 1e300;
  if (cond > 1e10) {
    std::ostringstream os;
    os << "collocation system condition " << cond
       << " exceeds 1e10; increase the mode truncation";
    throw NumericalError(os.str());
  }
  ScatterSolution sol;
  sol.amplitudes = svd.solve(rhs);
  sol.boundary_residual = (a * sol.amplitudes - rhs).norm() / rhs.norm();
  sol.condition = cond;
  sol.modes = std::move(sel.modes);
  sol.propagating = sel.propagating;
  sol.resonant_indices = std::move(sel.resonant_indices);
  sol.profile_hat = gp.profile_hat;
  sol.wavenum = gp.wavenum;
  sol.angle = gp.angle;
  return sol;
}

}  // namespace polspec
