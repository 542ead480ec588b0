#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include <polspec/snumbers.hpp>

using namespace polspec;

namespace {

const PropertyReport& find_report(const std::vector<PropertyReport>& reps,
                                  const std::string& id) {
  for (const auto& r : reps)
    if (r.id == id) return r;
  FAIL("missing report " << id);
  return reps.front();
}

PontryaginFixture riesz_case(int n) {
  return pontryagin_example(
      n, [](int k) { return cd(1.0 / (double(k) * k), 0.0); },
      [](int k) { return 1.0 / k; });
}

PontryaginFixture tilted_case(int n) {
  return pontryagin_example(n, [](int k) { return cd(1.0 / k, 0.0); },
                            [](int k) { return 1.0 / (double(k) * k); });
}

}  // namespace

TEST_CASE("nilpotent cell separates eigenvalues from singular numbers",
          "[snumbers]") {
  Mat a(2, 2);
  a << 0, 1, 0, 0;
  Eigen::VectorXd s = Eigen::JacobiSVD<Mat>(a).singularValues();
  CHECK(s(0) == Catch::Approx(1.0).margin(1e-15));
  CHECK(s(1) == Catch::Approx(0.0).margin(1e-15));
  Eigen::ComplexEigenSolver<Mat> es(a, false);
  CHECK(es.eigenvalues().cwiseAbs().maxCoeff() <= 1e-15);
  // both eigenvalue moduli vanish, so every product bound holds with slack
  CHECK(std::abs(a.trace()) <= s.sum());
}

TEST_CASE("best rank-k distance equals the next singular number",
          "[snumbers]") {
  Rng rng(42);
  const Mat a = rand_matrix(rng, 6, 6);
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  for (int k = 0; k < 6; ++k) {
    Mat trunc = Mat::Zero(6, 6);
    if (k > 0)
      trunc = svd.matrixU().leftCols(k) * s.head(k).asDiagonal() *
              svd.matrixV().leftCols(k).adjoint();
    const double dist =
        Eigen::JacobiSVD<Mat>(a - trunc).singularValues()(0);
    CHECK(dist == Catch::Approx(s(k)).margin(1e-12 * (1 + s(0))));
  }
}

TEST_CASE("battery at size eight stays within fp noise", "[snumbers]") {
  const auto reps = snumber_battery(8, 1000, 0xABCD1234u);
  REQUIRE(reps.size() == 11);
  const char* ids[] = {"property-1", "property-2", "property-3", "property-4",
                       "property-5", "property-6", "property-7", "property-8",
                       "property-9", "property-10", "trace"};
  for (std::size_t i = 0; i < 11; ++i) {
    CAPTURE(reps[i].id, reps[i].witness);
    CHECK(reps[i].id == ids[i]);
    CHECK(reps[i].trials == 1000);
    CHECK(reps[i].max_violation <= 1e-10);
  }
  CHECK(find_report(reps, "trace").max_violation <= 1e-12);
}

TEST_CASE("battery is deterministic in the seed", "[snumbers]") {
  const auto a = snumber_battery(5, 40, 99);
  const auto b = snumber_battery(5, 40, 99);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a[i].max_violation == b[i].max_violation);
}

TEST_CASE("battery covers the largest admissible size", "[snumbers]") {
  for (const auto& r : snumber_battery(16, 100, 7)) {
    CAPTURE(r.id, r.witness);
    CHECK(r.max_violation <= 1e-10);
  }
}

TEST_CASE("battery input validation", "[snumbers]") {
  CHECK_THROWS_AS(snumber_battery(17, 10, 1), ValidationError);
  CHECK_THROWS_AS(snumber_battery(0, 10, 1), ValidationError);
  CHECK_THROWS_AS(snumber_battery(4, 0, 1), ValidationError);
  CHECK_THROWS_AS(det_continuity_check(17, 10), ValidationError);
  CHECK_THROWS_AS(det_continuity_check(4, 0), ValidationError);
}

TEST_CASE("determinant functional checks", "[snumbers]") {
  const auto reps = det_continuity_check(6, 200, 0x00D37001u);
  REQUIRE(reps.size() == 4);
  for (const auto& r : reps) {
    CAPTURE(r.id, r.witness);
    CHECK(r.max_violation <= 1e-10);
  }
  const auto& trend = find_report(reps, "det-continuity");
  CHECK(trend.witness.find("measured constant") != std::string::npos);
}

TEST_CASE("square-summable ratio keeps the root basis well conditioned",
          "[snumbers]") {
  std::vector<double> conds;
  for (int n : {8, 16, 32, 64}) {
    const auto fx = riesz_case(n);
    CAPTURE(n);
    CHECK(fx.ga_deviation <= 1e-14);
    CHECK(fx.eigvec_residual <= 1e-12);
    // chain structure at zero: A y2 = 0 and A y1 = y2
    CHECK((fx.a * fx.root_vectors[1]).norm() <= 1e-14);
    CHECK((fx.a * fx.root_vectors[0] - fx.root_vectors[1]).norm() <= 1e-12);

    double gamma_ref = 1.0;
    for (int k = 3; k <= n; ++k) gamma_ref -= 1.0 / (double(k) * k * k);
    CHECK(fx.gamma == Catch::Approx(gamma_ref).margin(1e-14));
    conds.push_back(fx.condition_number);
  }
  // gamma converges just above 0.9229 = 2.125 - zeta(3)
  CHECK(riesz_case(64).gamma == Catch::Approx(0.92306).margin(5e-4));
  for (double c : conds) CHECK(c < 10.0);
  CHECK(conds.back() - conds.front() < 0.5);
}

TEST_CASE("growing ratio drives the root basis toward dependence",
          "[snumbers]") {
  std::vector<double> sigmas;
  for (int n : {8, 16, 32, 64}) {
    const auto fx = tilted_case(n);
    CAPTURE(n);
    CHECK(fx.ga_deviation <= 1e-14);
    CHECK(fx.eigvec_residual <= 1e-12);
    CHECK(fx.gamma == Catch::Approx(3.0 - n).margin(1e-10));
    sigmas.push_back(fx.sigma_min);
  }
  for (std::size_t i = 1; i < sigmas.size(); ++i)
    CHECK(sigmas[i] < sigmas[i - 1]);
  CHECK(sigmas.back() < sigmas.front() / 4);
}

TEST_CASE("truncated example validation", "[snumbers]") {
  CHECK_THROWS_AS(pontryagin_example(
                      3, [](int) { return cd(0.1, 0); },
                      [](int k) { return 1.0 / k; }),
                  ValidationError);
  CHECK_THROWS_AS(pontryagin_example(
                      8, [](int) { return cd(0.1, 0); },
                      [](int) { return 0.5; }),
                  ValidationError);
  CHECK_THROWS_AS(pontryagin_example(
                      8, [](int) { return cd(0.1, 0); },
                      [](int k) { return k == 3 ? 1.0 : -1.0 / k; }),
                  ValidationError);
}

TEST_CASE("degenerate direction becomes an eigenvector when gamma vanishes",
          "[snumbers]") {
  // first alpha tuned so gamma = 1 - |alpha_3|^2/beta_3 = 0
  const auto fx = pontryagin_example(
      4, [](int k) { return cd(k == 3 ? 0.5 : 0.0, 0.0); },
      [](int k) { return k == 3 ? 0.25 : 0.1; });
  REQUIRE(fx.gamma == Catch::Approx(0.0).margin(1e-15));
  CHECK((fx.a * fx.root_vectors[0]).norm() <= 1e-14);
}
