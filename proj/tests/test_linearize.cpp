#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <complex>
#include <vector>

#include "polspec/core.hpp"
#include "polspec/lapack.hpp"
#include "polspec/linearize.hpp"
#include "polspec/rng.hpp"
#include "oracles.hpp"

using namespace polspec;

namespace {

MatrixPolynomial scalar_poly(std::initializer_list<cd> cs) {
  std::vector<Mat> coeffs;
  for (cd c : cs) {
    Mat m(1, 1);
    m(0, 0) = c;
    coeffs.push_back(m);
  }
  return MatrixPolynomial(coeffs);
}

MatrixPolynomial random_poly(Rng& rng, Eigen::Index m, Eigen::Index n,
                             bool hermitian_a0 = false) {
  std::vector<Mat> coeffs;
  for (Eigen::Index j = 0; j <= n; ++j) coeffs.push_back(rand_matrix(rng, m, m));
  if (hermitian_a0) coeffs[0] = 0.5 * (coeffs[0] + coeffs[0].adjoint().eval());
  return MatrixPolynomial(coeffs);
}

std::vector<cd> sorted_complex(std::vector<cd> v) {
  std::sort(v.begin(), v.end(), [](cd a, cd b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return v;
}

Mat real_part(const Mat& c) { return 0.5 * (c + c.adjoint()); }

}  // namespace

TEST_CASE("first companion of lambda^2 - 1 matches the frozen pair",
          "[linearize]") {
  auto p = scalar_poly({-1.0, 0.0, 1.0});
  auto cp = companion_first(p);
  Mat p0(2, 2), p1(2, 2);
  p0 << cd(-1), cd(0), cd(0), cd(1);
  p1 << cd(0), cd(-1), cd(1), cd(0);
  REQUIRE((cp.p0 - p0).norm() == 0.0);
  REQUIRE((cp.p1 - p1).norm() == 0.0);
  auto ge = qz_eigen(cp.p0, cp.p1);
  std::vector<cd> eig;
  for (Eigen::Index i = 0; i < ge.alpha.size(); ++i)
    eig.push_back(ge.alpha(i) / ge.beta(i));
  eig = sorted_complex(eig);
  REQUIRE(std::abs(eig[0] - cd(-1)) < 1e-12);
  REQUIRE(std::abs(eig[1] - cd(1)) < 1e-12);
}

TEST_CASE("companion pencil maps derived chains like the polynomial",
          "[linearize]") {
  // (lambda-1)^2: chain y0=1, y1=alpha for any alpha.
  const cd alpha(0.7, -0.3);
  auto p = scalar_poly({1.0, -2.0, 1.0});
  auto cp = companion_first(p);
  auto lifted = derived_chain({Vec::Constant(1, cd(1)), Vec::Constant(1, alpha)},
                              cd(1), 2);
  const Mat at1 = cp.p0 - cp.p1;
  REQUIRE((at1 * lifted[0]).norm() < 1e-14);
  REQUIRE((at1 * lifted[1] - cp.p1 * lifted[0]).norm() < 1e-14);
}

TEST_CASE("derived chain lift has the binomial block structure", "[linearize]") {
  Rng rng(11);
  const cd lambda(0.3, 1.1);
  Vec y0 = rand_matrix(rng, 3, 1).col(0);
  Vec y1 = rand_matrix(rng, 3, 1).col(0);
  auto lifted = derived_chain({y0, y1}, lambda, 3);
  REQUIRE((lifted[0].segment(0, 3) - y0).norm() == 0.0);
  REQUIRE((lifted[0].segment(3, 3) - lambda * y0).norm() < 1e-15);
  REQUIRE((lifted[0].segment(6, 3) - lambda * lambda * y0).norm() < 1e-15);
  REQUIRE((lifted[1].segment(0, 3) - y1).norm() == 0.0);
  REQUIRE((lifted[1].segment(3, 3) - (lambda * y1 + y0)).norm() < 1e-15);
  REQUIRE((lifted[1].segment(6, 3) -
           (lambda * lambda * y1 + 2.0 * lambda * y0)).norm() < 1e-15);
}

TEST_CASE("companion eigenvectors stack powers of the eigenvalue",
          "[linearize]") {
  Rng rng(21);
  for (int trial = 0; trial < 8; ++trial) {
    const Eigen::Index m = rng.uniform_int(1, 3);
    const Eigen::Index n = rng.uniform_int(1, 3);
    auto p = random_poly(rng, m, n);
    auto cp = companion_first(p);
    auto ge = qz_eigen(cp.p0, cp.p1);
    for (Eigen::Index i = 0; i < ge.alpha.size(); ++i) {
      if (std::abs(ge.beta(i)) < 1e-8) continue;
      const cd lambda = ge.alpha(i) / ge.beta(i);
      if (std::abs(lambda) > 1e3) continue;
      Vec v = ge.vectors.col(i);
      Vec y = v.segment(0, m);
      if (y.norm() < 1e-6 * v.norm()) continue;
      for (Eigen::Index r = 1; r < n; ++r)
        REQUIRE((v.segment(r * m, m) - std::pow(lambda, double(r)) * y).norm() <
                1e-7 * v.norm() * std::max(1.0, std::pow(std::abs(lambda), double(n))));
      REQUIRE((p.evaluate(lambda) * y).norm() <
              1e-7 * (1.0 + p.coeff_scale()) * y.norm() *
                  std::max(1.0, std::pow(std::abs(lambda), double(n))));
    }
  }
}

TEST_CASE("monic companion agrees with the companion pencil", "[linearize]") {
  Rng rng(33);
  int done = 0;
  while (done < 50) {
    const Eigen::Index m = rng.uniform_int(1, 4);
    const Eigen::Index n = rng.uniform_int(1, 3);
    auto p = random_poly(rng, m, n);
    if (!p.leading_invertible() || !p.zero_invertible()) continue;
    ++done;
    auto mc = companion_monic(p);
    Eigen::ComplexEigenSolver<Mat> es(mc.a);
    std::vector<cd> from_monic(es.eigenvalues().data(),
                               es.eigenvalues().data() + es.eigenvalues().size());
    auto cp = companion_first(p);
    auto ge = qz_eigen(cp.p0, cp.p1, false);
    std::vector<cd> from_pencil;
    for (Eigen::Index i = 0; i < ge.alpha.size(); ++i) {
      REQUIRE(std::abs(ge.beta(i)) > 1e-10);
      from_pencil.push_back(ge.alpha(i) / ge.beta(i));
    }
    auto a = sorted_complex(from_monic);
    auto b = sorted_complex(from_pencil);
    REQUIRE(a.size() == b.size());
    double scale = 0.0;
    for (cd z : a) scale = std::max(scale, std::abs(z));
    for (size_t i = 0; i < a.size(); ++i)
      REQUIRE(std::abs(a[i] - b[i]) < 1e-8 * (1.0 + scale));
  }
}

TEST_CASE("monic companion eigenvectors stack descending powers",
          "[linearize]") {
  auto p = scalar_poly({-1.0, 0.0, 0.0, 1.0});  // lambda^3 = 1
  auto mc = companion_monic(p);
  Eigen::ComplexEigenSolver<Mat> es(mc.a);
  for (Eigen::Index i = 0; i < 3; ++i) {
    const cd lambda = es.eigenvalues()(i);
    Vec v = es.eigenvectors().col(i);
    const cd y = v(2);
    REQUIRE(std::abs(v(1) - lambda * y) < 1e-12);
    REQUIRE(std::abs(v(0) - lambda * lambda * y) < 1e-12);
    REQUIRE(std::abs(std::pow(lambda, 3.0) - cd(1)) < 1e-12);
  }
}

TEST_CASE("monic companion rejects singular leading coefficient",
          "[linearize]") {
  Mat a0 = Mat::Identity(2, 2);
  Mat a1 = Mat::Zero(2, 2);
  a1(0, 0) = 1.0;
  REQUIRE_THROWS_AS(companion_monic(MatrixPolynomial({a0, a1})),
                    ValidationError);
  REQUIRE_THROWS_AS(companion_first(MatrixPolynomial({a0})), ValidationError);
}

TEST_CASE("ascending linearization inverts the spectrum", "[linearize]") {
  Rng rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index m = rng.uniform_int(1, 3);
    const Eigen::Index n = rng.uniform_int(1, 3);
    auto p = random_poly(rng, m, n);
    if (!p.zero_invertible() || !p.leading_invertible()) continue;
    Mat b = companion_ascending(p);
    Eigen::ComplexEigenSolver<Mat> es(b);
    std::vector<cd> inverted;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      inverted.push_back(-1.0 / es.eigenvalues()(i));
    auto direct = oracle::dense_polyeig(p);
    auto a = sorted_complex(inverted);
    auto c = sorted_complex(direct);
    REQUIRE(a.size() == c.size());
    double scale = 0.0;
    for (cd z : c) scale = std::max(scale, std::abs(z));
    for (size_t i = 0; i < a.size(); ++i)
      REQUIRE(std::abs(a[i] - c[i]) < 1e-7 * (1.0 + scale));
  }
  Mat z0 = Mat::Zero(2, 2);
  Mat z1 = Mat::Identity(2, 2);
  REQUIRE_THROWS_AS(companion_ascending(MatrixPolynomial({z0, z1})),
                    ValidationError);
}

TEST_CASE("symmetrizer family matches powers of the ascending linearization",
          "[linearize]") {
  Rng rng(59);
  for (Eigen::Index n : {1, 2, 3, 4}) {
    const Eigen::Index m = 2;
    auto p = random_poly(rng, m, n);
    if (!p.zero_invertible()) continue;
    Mat b = companion_ascending(p);
    Mat g0 = symmetrizer_g(p);
    Mat power = Mat::Identity(m * n, m * n);
    const double scale = g0.norm() * std::max(1.0, std::pow(b.norm(), double(n)));
    for (Eigen::Index q = 0; q <= n; ++q) {
      REQUIRE((symmetrizer_g(p, q) - g0 * power).norm() < 1e-10 * scale);
      power = (power * b).eval();
    }
  }
}

TEST_CASE("frozen weight matrices for quadratic pencils", "[linearize]") {
  Rng rng(61);
  auto p = random_poly(rng, 3, 2);
  const Mat a0 = p.coeff(0), a1 = p.coeff(1), a2 = p.coeff(2);
  auto fam = wq_family(p);
  REQUIRE(fam.w.size() == 3);

  Mat w0 = Mat::Zero(6, 6);
  w0.block(0, 3, 3, 3) = a0.adjoint();
  w0.block(3, 0, 3, 3) = a0;
  w0.block(3, 3, 3, 3) = real_part(a1);
  REQUIRE((fam.w[0] - w0).norm() < 1e-14 * p.coeff_scale());

  Mat w1 = Mat::Zero(6, 6);
  w1.block(0, 0, 3, 3) = -real_part(a0);
  w1.block(3, 3, 3, 3) = real_part(a2);
  REQUIRE((fam.w[1] - w1).norm() < 1e-14 * p.coeff_scale());

  Mat w2 = Mat::Zero(6, 6);
  w2.block(0, 0, 3, 3) = -real_part(a1);
  w2.block(0, 3, 3, 3) = -a2;
  w2.block(3, 0, 3, 3) = -a2.adjoint();
  REQUIRE((fam.w[2] - w2).norm() < 1e-14 * p.coeff_scale());

  for (const Mat& w : fam.w)
    REQUIRE((w - w.adjoint()).norm() == 0.0);
}

TEST_CASE("frozen quartic weight matrix", "[linearize]") {
  Rng rng(67);
  auto p = random_poly(rng, 2, 4);
  auto fam = wq_family(p);
  const Mat a0 = p.coeff(0), a1 = p.coeff(1), a3 = p.coeff(3), a4 = p.coeff(4);
  Mat w2 = Mat::Zero(8, 8);
  w2.block(0, 2, 2, 2) = a0.adjoint();
  w2.block(2, 0, 2, 2) = a0;
  w2.block(2, 2, 2, 2) = real_part(a1);
  w2.block(4, 4, 2, 2) = -real_part(a3);
  w2.block(4, 6, 2, 2) = -a4;
  w2.block(6, 4, 2, 2) = -a4.adjoint();
  REQUIRE((fam.w[2] - w2).norm() < 1e-14 * p.coeff_scale());
}

TEST_CASE("skew identities tie the weights to the linearization",
          "[linearize]") {
  Rng rng(71);
  for (Eigen::Index n : {2, 4}) {
    const Eigen::Index m = 2;
    // Odd-index identities need a Hermitian constant coefficient.
    auto p = random_poly(rng, m, n, /*hermitian_a0=*/true);
    REQUIRE(p.zero_invertible());
    Mat b = companion_ascending(p);
    auto fam = wq_family(p);
    const double scale =
        (1.0 + p.coeff_scale()) * std::max(1.0, b.norm());
    for (Eigen::Index widx = 0; widx < n; ++widx) {
      Mat lhs = fam.w[widx] * b;
      lhs = (lhs - lhs.adjoint()).eval();
      Mat rhs = skew_identity_rhs(p, widx);
      INFO("degree " << n << " weight " << widx);
      REQUIRE((lhs - rhs).norm() < 1e-10 * scale);
    }
  }
}

TEST_CASE("even-index skew identities hold without Hermitian assumptions",
          "[linearize]") {
  Rng rng(73);
  for (Eigen::Index n : {2, 4}) {
    auto p = random_poly(rng, 2, n);
    if (!p.zero_invertible()) continue;
    Mat b = companion_ascending(p);
    auto fam = wq_family(p);
    const double scale = (1.0 + p.coeff_scale()) * std::max(1.0, b.norm());
    for (Eigen::Index widx = 0; widx < n; widx += 2) {
      Mat lhs = fam.w[widx] * b;
      lhs = (lhs - lhs.adjoint()).eval();
      REQUIRE((lhs - skew_identity_rhs(p, widx)).norm() < 1e-10 * scale);
    }
  }
}

TEST_CASE("weight pairing reproduces the eigenvalue derivative form",
          "[linearize]") {
  // (W_0 ytilde, ytilde) = -lambda^n (A'(lambda) y, y) at simple real
  // eigenvalues of Hermitian pencils.
  auto p = scalar_poly({-1.0, 0.0, 1.0});
  auto fam = wq_family(p);
  for (double lambda : {1.0, -1.0}) {
    Vec y = Vec::Constant(1, cd(1));
    auto lifted = derived_chain({y}, cd(lambda), 2);
    const cd quad = lifted[0].dot(fam.w[0] * lifted[0]);
    const cd expect = -std::pow(lambda, 2.0) *
                      (p.derivative(1).evaluate(cd(lambda)) * y)(0);
    REQUIRE(std::abs(quad - expect) < 1e-13);
  }
}

TEST_CASE("spectral split projects onto the signed eigenspaces",
          "[linearize]") {
  Rng rng(79);
  Mat h = rand_with_inertia(rng, 3, 2, 1);
  auto s = spectral_split(h);
  REQUIRE(s.rank_plus == 3);
  REQUIRE(s.rank_minus == 2);
  REQUIRE((s.plus * s.plus - s.plus).norm() < 1e-12);
  REQUIRE((s.minus * s.minus - s.minus).norm() < 1e-12);
  REQUIRE((s.plus * s.minus).norm() < 1e-12);
  REQUIRE((s.plus - s.plus.adjoint()).norm() < 1e-12);
  // h maps its positive subspace into itself with positive definite restriction
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.adjoint()));
  Mat restricted = s.plus * h * s.plus;
  Eigen::SelfAdjointEigenSolver<Mat> er(0.5 * (restricted + restricted.adjoint()));
  REQUIRE(er.eigenvalues().maxCoeff() > 0.0);
  REQUIRE(er.eigenvalues().minCoeff() > -1e-12);
  Mat nonherm(2, 2);
  nonherm << cd(0), cd(1), cd(0), cd(0);
  REQUIRE_THROWS_AS(spectral_split(nonherm), ValidationError);
}

TEST_CASE("odd degree family carries the endpoint projectors", "[linearize]") {
  Rng rng(83);
  Mat a0 = rand_with_inertia(rng, 2, 1, 0);
  Mat a1 = rand_matrix(rng, 3, 3);
  Mat a2 = rand_matrix(rng, 3, 3);
  Mat a3 = rand_with_inertia(rng, 1, 2, 0);
  auto fam = wq_family(MatrixPolynomial({a0, a1, a2, a3}));
  REQUIRE(fam.leading_split_valid);
  REQUIRE(fam.trailing_split_valid);
  REQUIRE(fam.leading_split.rank_plus == 1);
  REQUIRE(fam.leading_split.rank_minus == 2);
  REQUIRE(fam.trailing_split.rank_plus == 2);
  REQUIRE(fam.trailing_split.rank_minus == 1);
  auto fam2 = wq_family(MatrixPolynomial({a1, a2}));
  REQUIRE_FALSE(fam2.leading_split_valid);
}

TEST_CASE("quadratic linearization assembles the weighted companion",
          "[linearize]") {
  Rng rng(89);
  const Eigen::Index m = 3;
  Mat f = rand_posdef(rng, m);
  Mat d = rand_psd_singular(rng, m, 2);
  Mat g = rand_hermitian(rng, m);
  Mat t = rand_with_inertia(rng, 2, 1, 0);
  auto ql = quad_linearization(f, d, g, t);

  REQUIRE((ql.w_big * ql.a_desc - ql.t_big).norm() <
          1e-12 * (1.0 + ql.t_big.norm()));
  REQUIRE((ql.w_big - ql.w_big.adjoint()).norm() < 1e-12);
  REQUIRE((ql.j_sign - ql.j_sign.adjoint()).norm() < 1e-12);
  REQUIRE((ql.j_sign * ql.j_sign - Mat::Identity(m, m)).norm() < 1e-12);
  auto inertia_j = hermitian_inertia(ql.j_sign, 1e-10);
  REQUIRE(inertia_j.pos == 2);
  REQUIRE(inertia_j.neg == 1);

  MatrixPolynomial p({t, d + cd(0, 1) * g, f});
  auto direct = sorted_complex(oracle::dense_polyeig(p));
  Eigen::ComplexEigenSolver<Mat> es(ql.a_desc);
  std::vector<cd> lin(es.eigenvalues().data(),
                      es.eigenvalues().data() + es.eigenvalues().size());
  auto got = sorted_complex(lin);
  REQUIRE(got.size() == direct.size());
  double scale = 0.0;
  for (cd z : direct) scale = std::max(scale, std::abs(z));
  for (size_t i = 0; i < got.size(); ++i)
    REQUIRE(std::abs(got[i] - direct[i]) < 1e-8 * (1.0 + scale));

  Mat singular = Mat::Zero(m, m);
  REQUIRE_THROWS_AS(quad_linearization(f, d, g, singular), ValidationError);
  REQUIRE_THROWS_AS(quad_linearization(singular, d, g, t), ValidationError);
}
