#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <complex>
#include <vector>

#include "polspec/core.hpp"
#include "polspec/spectral.hpp"
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

MatrixPolynomial radzievskii() {
  Mat a0(2, 2), a1(2, 2), a2(2, 2);
  a0 << cd(0), cd(1), cd(1), cd(0);
  a1 << cd(0), cd(0, -3), cd(0, 3), cd(0);
  a2 << cd(0), cd(-2), cd(-2), cd(0);
  return MatrixPolynomial({a0, a1, a2});
}

MatrixPolynomial pm_identity_quadratic(Eigen::Index m) {
  return MatrixPolynomial({-Mat::Identity(m, m), Mat::Zero(m, m),
                           Mat::Identity(m, m)});
}

const EigenData* find_eigen(const Spectrum& sp, cd target) {
  for (const auto& e : sp.eigenvalues)
    if (std::abs(e.eigenvalue - target) < 1e-6) return &e;
  return nullptr;
}

}  // namespace

TEST_CASE("spectrum of lambda^2 I - I", "[spectral]") {
  auto sp = eigenvalues(pm_identity_quadratic(2));
  REQUIRE(sp.eigenvalues.size() == 2);
  REQUIRE(sp.infinite_count == 0);
  for (cd target : {cd(-1), cd(1)}) {
    const auto* e = find_eigen(sp, target);
    REQUIRE(e != nullptr);
    REQUIRE(e->algebraic_multiplicity == 2);
    REQUIRE(e->geometric_multiplicity == 2);
    REQUIRE(e->is_real);
    REQUIRE(e->is_semisimple);
  }
  REQUIRE(sp.total_finite() == 4);
}

TEST_CASE("spectrum of the gyroscopic 2x2 fixture", "[spectral]") {
  auto sp = eigenvalues(radzievskii());
  REQUIRE(sp.eigenvalues.size() == 4);
  for (cd target : {cd(0, 1), cd(0, 0.5), cd(0, -1), cd(0, -0.5)}) {
    const auto* e = find_eigen(sp, target);
    REQUIRE(e != nullptr);
    REQUIRE(e->algebraic_multiplicity == 1);
    REQUIRE_FALSE(e->is_real);
    REQUIRE(e->is_semisimple);
  }
}

TEST_CASE("QZ-split double root is reclustered", "[spectral]") {
  auto sp = eigenvalues(scalar_poly({1.0, -2.0, 1.0}));
  REQUIRE(sp.eigenvalues.size() == 1);
  const auto& e = sp.eigenvalues.front();
  REQUIRE(std::abs(e.eigenvalue - cd(1)) < 1e-7);
  REQUIRE(e.is_real);
  REQUIRE(e.algebraic_multiplicity == 2);
  REQUIRE(e.geometric_multiplicity == 1);
  REQUIRE(e.partial_multiplicities == std::vector<Eigen::Index>{2});
  REQUIRE_FALSE(e.is_semisimple);
}

TEST_CASE("rank-deficient leading coefficient yields infinite eigenvalues",
          "[spectral]") {
  Mat a0 = -Mat::Identity(2, 2);
  Mat a1 = Mat::Zero(2, 2);
  a1(0, 0) = 1.0;
  auto sp = eigenvalues(MatrixPolynomial({a0, a1}));
  REQUIRE(sp.eigenvalues.size() == 1);
  REQUIRE(std::abs(sp.eigenvalues.front().eigenvalue - cd(1)) < 1e-10);
  REQUIRE(sp.infinite_count == 1);
}

TEST_CASE("identically singular pencils are rejected", "[spectral]") {
  Mat a0 = Mat::Zero(2, 2);
  Mat a1 = Mat::Zero(2, 2);
  a1(0, 0) = 1.0;
  REQUIRE_THROWS_AS(eigenvalues(MatrixPolynomial({a0, a1})), ValidationError);
  Mat c = Mat::Zero(2, 2);
  c(0, 0) = 1.0;
  REQUIRE_THROWS_AS(eigenvalues(MatrixPolynomial({c})), ValidationError);
  REQUIRE(eigenvalues(MatrixPolynomial({Mat::Identity(2, 2)}))
              .eigenvalues.empty());
}

TEST_CASE("finite multiplicities and infinite count partition the degree",
          "[spectral]") {
  Rng rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index m = rng.uniform_int(1, 3);
    const Eigen::Index n = rng.uniform_int(1, 3);
    std::vector<Mat> coeffs;
    for (Eigen::Index j = 0; j <= n; ++j)
      coeffs.push_back(rand_matrix(rng, m, m));
    if (trial % 3 == 0) coeffs.back().col(0).setZero();
    MatrixPolynomial p(coeffs);
    auto sp = eigenvalues(p);
    REQUIRE(sp.total_finite() + sp.infinite_count == m * n);
  }
}

TEST_CASE("canonical system at a simple eigenvalue", "[spectral]") {
  auto p = pm_identity_quadratic(1);
  auto cs = canonical_system(p, cd(1));
  REQUIRE(cs.chains.size() == 1);
  REQUIRE(cs.chains.front().size() == 1);
  REQUIRE(std::abs(std::abs(cs.chains.front().front()(0)) - 1.0) < 1e-12);
  REQUIRE_THROWS_AS(canonical_system(p, cd(3)), ValidationError);
}

TEST_CASE("canonical system finds the double chain of (lambda-1)^2",
          "[spectral]") {
  auto p = scalar_poly({1.0, -2.0, 1.0});
  auto cs = canonical_system(p, cd(1));
  REQUIRE(cs.chains.size() == 1);
  REQUIRE(cs.chains.front().size() == 2);
  REQUIRE(oracle::chain_residual(p, cd(1), cs.chains.front()) < 1e-12);
}

TEST_CASE("canonical system of the gyroscopic fixture is simple at i",
          "[spectral]") {
  auto p = radzievskii();
  auto cs = canonical_system(p, cd(0, 1));
  REQUIRE(cs.chains.size() == 1);
  REQUIRE(cs.chains.front().size() == 1);
  // kernel of [[0,6],[0,0]] is the first coordinate axis
  REQUIRE(std::abs(cs.chains.front().front()(1)) < 1e-12);
}

TEST_CASE("chain residual invariant holds on random spectra", "[spectral]") {
  Rng rng(113);
  for (int trial = 0; trial < 6; ++trial) {
    const Eigen::Index m = rng.uniform_int(1, 3);
    const Eigen::Index n = rng.uniform_int(1, 2);
    std::vector<Mat> coeffs;
    for (Eigen::Index j = 0; j <= n; ++j)
      coeffs.push_back(rand_matrix(rng, m, m));
    MatrixPolynomial p(coeffs);
    auto sp = eigenvalues(p);
    for (const auto& e : sp.eigenvalues) {
      auto cs = canonical_system(p, e.eigenvalue);
      for (const auto& chain : cs.chains)
        REQUIRE(oracle::chain_residual(p, e.eigenvalue, chain) <
                1e-9 * (1.0 + p.total_norm()) *
                    std::pow(1.0 + std::abs(e.eigenvalue), double(n)));
    }
  }
}

TEST_CASE("adjoint system of a scalar linear pencil matches the residue",
          "[spectral]") {
  auto p = scalar_poly({-1.0, 1.0});  // lambda - 1
  auto cs = canonical_system(p, cd(1));
  auto adj = adjoint_canonical_system(p, cs);
  REQUIRE(adj.adjoint_residual >= 0.0);
  REQUIRE(adj.adjoint_residual < 1e-10);
  const cd y = cs.chains.front().front()(0);
  const cd z = adj.adjoint_chains.front().front()(0);
  REQUIRE(std::abs(y * std::conj(z) - cd(1)) < 1e-10);
}

TEST_CASE("adjoint vectors of Hermitian pencils are signed copies",
          "[spectral]") {
  auto p = pm_identity_quadratic(1);
  for (double lambda : {1.0, -1.0}) {
    auto adj = adjoint_canonical_system(p, canonical_system(p, cd(lambda)));
    const cd y = adj.chains.front().front()(0);
    const cd z = adj.adjoint_chains.front().front()(0);
    // z = y / (A'(lambda) y, y); the ratio sign is the derivative sign
    const cd ratio = z / y;
    REQUIRE(std::abs(ratio.imag()) < 1e-10);
    if (lambda > 0)
      REQUIRE(ratio.real() > 0.0);
    else
      REQUIRE(ratio.real() < 0.0);
    REQUIRE(std::abs(std::abs(ratio) - 0.5) < 1e-10);
  }
}

TEST_CASE("adjoint system of the gyroscopic fixture reconstructs the residue",
          "[spectral]") {
  auto p = radzievskii();
  auto adj = adjoint_canonical_system(p, canonical_system(p, cd(0, 1)));
  REQUIRE(adj.adjoint_residual < 1e-8);
  Mat residue = adj.chains.front().front() *
                adj.adjoint_chains.front().front().adjoint();
  Eigen::JacobiSVD<Mat> svd(residue);
  REQUIRE(svd.singularValues()(0) > 1e-3);
  REQUIRE(svd.singularValues()(1) < 1e-10);
}

TEST_CASE("adjoint chains satisfy the adjoint chain equations", "[spectral]") {
  auto p = scalar_poly({1.0, -2.0, 1.0});
  auto adj = adjoint_canonical_system(p, canonical_system(p, cd(1)));
  REQUIRE(adj.adjoint_chains.front().size() == 2);
  REQUIRE(oracle::chain_residual(p.adjoint(), cd(1),
                                 adj.adjoint_chains.front()) < 1e-8);
}

TEST_CASE("derived chains reduce to power stacking at semisimple eigenvalues",
          "[spectral]") {
  auto p = radzievskii();
  auto cs = canonical_system(p, cd(0, 0.5));
  auto dcs = derived_chains({cs}, 3);
  REQUIRE(dcs.vectors.size() == 1);
  REQUIRE(dcs.provenance.front().height == 0);
  const Vec y = cs.chains.front().front();
  const cd lam(0, 0.5);
  REQUIRE((dcs.vectors.front().segment(0, 2) - y).norm() < 1e-14);
  REQUIRE((dcs.vectors.front().segment(2, 2) - lam * y).norm() < 1e-14);
  REQUIRE((dcs.vectors.front().segment(4, 2) - lam * lam * y).norm() < 1e-14);
}

TEST_CASE("derived chains at a zero eigenvalue shift the heights",
          "[spectral]") {
  auto p = scalar_poly({0.0, 0.0, 1.0});  // lambda^2
  auto cs = canonical_system(p, cd(0));
  REQUIRE(cs.chains.size() == 1);
  REQUIRE(cs.chains.front().size() == 2);
  auto dcs = derived_chains({cs}, 2);
  REQUIRE(dcs.vectors.size() == 2);
  // ytilde^0 = (y0, 0), ytilde^1 = (y1, y0)
  const cd y0 = cs.chains.front()[0](0);
  const cd y1 = cs.chains.front()[1](0);
  REQUIRE(std::abs(dcs.vectors[0](0) - y0) < 1e-14);
  REQUIRE(std::abs(dcs.vectors[0](1)) < 1e-14);
  REQUIRE(std::abs(dcs.vectors[1](0) - y1) < 1e-14);
  REQUIRE(std::abs(dcs.vectors[1](1) - y0) < 1e-14);
  REQUIRE_THROWS_AS(derived_chains({cs}, 0), ValidationError);
}

TEST_CASE("shifted pencils evaluate consistently", "[spectral]") {
  Rng rng(127);
  std::vector<Mat> coeffs;
  for (int j = 0; j <= 3; ++j) coeffs.push_back(rand_matrix(rng, 2, 2));
  MatrixPolynomial p(coeffs);
  const cd s(0.7, -0.2), mu(1.1, 0.4);
  auto shifted = shift_argument(p, s);
  REQUIRE((shifted.evaluate(mu) - p.evaluate(mu + s)).norm() <
          1e-12 * p.coeff_scale());
}

TEST_CASE("basis diagnostic for invertible leading coefficients",
          "[spectral]") {
  auto bc = basis_check(pm_identity_quadratic(2));
  REQUIRE(bc.rank == 4);
  REQUIRE(bc.deficiency == 0);
  REQUIRE(bc.predicted_deficiency == 0);
  auto bcr = basis_check(radzievskii());
  REQUIRE(bcr.rank == 4);
  REQUIRE(bcr.deficiency == 0);
  REQUIRE(bcr.predicted_deficiency == 0);
}

TEST_CASE("basis deficiency matches the reversed-linearization prediction",
          "[spectral]") {
  // scalar lambda - 1 padded to degree 2 with zero leading coefficient
  auto p = scalar_poly({-1.0, 1.0, 0.0});
  auto bc = basis_check(p);
  REQUIRE(bc.rank == 1);
  REQUIRE(bc.deficiency == 1);
  REQUIRE(bc.predicted_deficiency == 1);

  Mat a0 = -Mat::Identity(2, 2);
  Mat a1 = Mat::Zero(2, 2);
  a1(0, 0) = 1.0;
  auto bc2 = basis_check(MatrixPolynomial({a0, a1}));
  REQUIRE(bc2.deficiency == 1);
  REQUIRE(bc2.predicted_deficiency == 1);
}

TEST_CASE("deficiency prediction survives a singular constant coefficient",
          "[spectral]") {
  // lambda(lambda-1) = -lambda + lambda^2 padded with zero leading coefficient
  auto p = scalar_poly({0.0, -1.0, 1.0, 0.0});
  auto bc = basis_check(p);
  REQUIRE(bc.deficiency == 1);
  REQUIRE(bc.predicted_deficiency == 1);
}

TEST_CASE("biorthogonality of a Hermitian linear pencil", "[spectral]") {
  Mat a0 = Mat::Identity(2, 2);
  Mat a1(2, 2);
  a1 << cd(-1), cd(0), cd(0), cd(-2);
  MatrixPolynomial p({a0, a1});
  std::vector<CanonicalSystem> systems;
  for (cd lam : {cd(1), cd(0.5)})
    systems.push_back(adjoint_canonical_system(p, canonical_system(p, lam)));
  REQUIRE(biorthogonality_check(p, systems) < 1e-10);
}

TEST_CASE("biorthogonality across a Jordan chain", "[spectral]") {
  auto p = scalar_poly({1.0, -2.0, 1.0});
  auto adj = adjoint_canonical_system(p, canonical_system(p, cd(1)));
  REQUIRE(biorthogonality_check(p, {adj}) < 1e-8);
}

TEST_CASE("biorthogonality on random dissipative quadratics", "[spectral]") {
  Rng rng(131);
  auto p = oracle::random_dissipative_quadratic(rng, 3);
  auto sp = eigenvalues(p);
  std::vector<CanonicalSystem> systems;
  for (const auto& e : sp.eigenvalues)
    systems.push_back(
        adjoint_canonical_system(p, canonical_system(p, e.eigenvalue)));
  REQUIRE(biorthogonality_check(p, systems) < 1e-8);
}

TEST_CASE("biorthogonality of the plus-minus identity quadratic", "[spectral]") {
  auto p = pm_identity_quadratic(2);
  std::vector<CanonicalSystem> systems;
  for (cd lam : {cd(1), cd(-1)})
    systems.push_back(adjoint_canonical_system(p, canonical_system(p, lam)));
  REQUIRE(biorthogonality_check(p, systems) < 1e-10);
}
