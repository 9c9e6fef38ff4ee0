#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gqmp/hermitian.hpp"
#include "gqmp/matrix_io.hpp"
#include "gqmp/rng.hpp"
#include "support/oracles.hpp"

using namespace gqmp;

namespace {
Mat mat2(Complex a, Complex b, Complex c, Complex d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}
}  // namespace

TEST_CASE("construction validates conjugate symmetry and names the offending pair") {
  CHECK_NOTHROW(HermitianMatrix(mat2(1.0, {0, 1}, {0, -1}, 2.0)));
  try {
    HermitianMatrix bad(mat2(1.0, {0, 1}, {0, 1}, 2.0));
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(0,1)") != std::string::npos);
    CHECK(msg.find("(1,0)") != std::string::npos);
  }
  CHECK_THROWS_AS(HermitianMatrix(Mat::Zero(2, 3)), std::invalid_argument);
  // Tiny asymmetry inside tolerance is accepted and symmetrized away.
  Mat near = mat2(1.0, Complex(0.5, 1e-14), Complex(0.5, 1e-14), 2.0);
  HermitianMatrix h(near);
  CHECK(std::abs(h(0, 1) - std::conj(h(1, 0))) == 0.0);
}

TEST_CASE("hermitian_eig: diagonal matrix") {
  RealVec d(2);
  d << 3.0, -1.0;
  auto r = hermitian_eig(HermitianMatrix::diagonal(d));
  CHECK(r.values(0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(r.values(1) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(std::abs(r.vectors(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(r.vectors(1, 1)) == doctest::Approx(1.0));
}

TEST_CASE("hermitian_eig: identity is spectrum {1,1,1} with unitary basis") {
  auto r = hermitian_eig(HermitianMatrix::identity(3));
  for (int i = 0; i < 3; ++i) CHECK(r.values(i) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((r.vectors.adjoint() * r.vectors - Mat::Identity(3, 3)).norm() < 1e-10);
}

TEST_CASE("hermitian_eig: random 4x4 reconstruction, orthonormality, ordering") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u, 6u, 7u, 8u}) {
    auto a = oracle::random_hermitian(4, seed);
    auto r = hermitian_eig(a);
    Mat rec = r.vectors * r.values.asDiagonal().toDenseMatrix().cast<Complex>() *
              r.vectors.adjoint();
    CHECK((rec - a.mat()).norm() <= 1e-9 * std::max(1.0, a.mat().norm()));
    CHECK((r.vectors.adjoint() * r.vectors - Mat::Identity(4, 4)).norm() <= 1e-10);
    for (int k = 0; k + 1 < 4; ++k) CHECK(r.values(k) >= r.values(k + 1));
  }
}

TEST_CASE("hermitian_eig: known 2x2 real symmetric spectrum") {
  // [[2,1],[1,1]] Gram matrix has eigenvalues (7 +- sqrt(45))/2.
  Mat h = mat2(2.0, 1.0, 1.0, 1.0);
  auto g = HermitianMatrix((h.adjoint() * h).eval());
  auto r = hermitian_eig(g);
  CHECK(r.values(0) == doctest::Approx(6.854101966249685).epsilon(1e-12));
  CHECK(r.values(1) == doctest::Approx(0.145898033750315).epsilon(1e-9));
}

TEST_CASE("psd_split: diagonal example and identity") {
  RealVec d(2);
  d << 2.0, -1.0;
  auto s = psd_split(HermitianMatrix::diagonal(d));
  CHECK(s.positive(0, 0).real() == doctest::Approx(2.0));
  CHECK(s.positive(1, 1).real() == doctest::Approx(0.0));
  CHECK(s.negative(1, 1).real() == doctest::Approx(-1.0));
  CHECK(s.negative(0, 0).real() == doctest::Approx(0.0));

  auto si = psd_split(HermitianMatrix::identity(3));
  CHECK((si.positive.mat() - Mat::Identity(3, 3)).norm() < 1e-12);
  CHECK(si.negative.mat().norm() < 1e-12);
}

TEST_CASE("psd_split: reconstruction, sign property, idempotence") {
  for (std::uint64_t seed : {10u, 11u, 12u, 13u, 14u}) {
    auto a = oracle::random_hermitian(3, seed);
    auto s = psd_split(a);
    const double scale = std::max(1.0, a.mat().norm());
    CHECK((s.positive.mat() + s.negative.mat() - a.mat()).norm() <= 1e-9 * scale);
    auto rp = hermitian_eig(s.positive);
    auto rn = hermitian_eig(s.negative);
    CHECK(rp.values.minCoeff() >= -1e-12 * scale);
    CHECK(rn.values.maxCoeff() <= 1e-12 * scale);
    // Splitting the parts again changes nothing.
    auto spp = psd_split(s.positive);
    CHECK((spp.positive.mat() - s.positive.mat()).norm() <= 1e-8 * scale);
    CHECK(spp.negative.mat().norm() <= 1e-8 * scale);
  }
}

TEST_CASE("quad_map: identity, zero, Gram positivity, dimension check") {
  Mat x = gaussian_matrix(3, 2, 42);
  auto w = quad_map(x, HermitianMatrix::identity(3));
  CHECK((w.mat() - x.adjoint() * x).norm() < 1e-12);

  CHECK(quad_map(Mat::Zero(3, 2), oracle::random_hermitian(3, 7)).mat().norm() == 0.0);

  auto wg = quad_map(x, oracle::random_psd(3, 21));
  CHECK(hermitian_eig(wg).values.minCoeff() >= -1e-12);

  CHECK_THROWS_AS(quad_map(Mat::Zero(2, 2), HermitianMatrix::identity(3)),
                  std::invalid_argument);
}

TEST_CASE("trace identity: tr(X^H A X) == tr(quad_map(X, A))") {
  for (std::uint64_t seed : {31u, 32u, 33u}) {
    Mat x = gaussian_matrix(4, 3, seed);
    auto a = oracle::random_hermitian(4, seed, 99);
    const double lhs = (x.adjoint() * a.mat() * x).trace().real();
    const double rhs = quad_map(x, a).mat().trace().real();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("matrix literals: round trip is value-exact") {
  Mat m = gaussian_matrix(2, 3, 1234);
  m(0, 0) = Complex(1.0 / 3.0, -2.0 / 7.0);
  const auto j = matrix_to_json(m);
  const Mat back = matrix_from_json(nlohmann::json::parse(j.dump()));
  CHECK((back - m).norm() == 0.0);

  auto a = oracle::random_hermitian(3, 99);
  const auto ja = hermitian_to_json(a);
  const auto backa = hermitian_from_json(nlohmann::json::parse(ja.dump()));
  CHECK((backa.mat() - a.mat()).norm() == 0.0);

  CHECK_THROWS_AS(hermitian_from_json(matrix_to_json(m)), std::invalid_argument);
  CHECK_THROWS_AS(matrix_from_json(nlohmann::json{{"rows", 2}, {"cols", 2}, {"entries", {1, 2}}}),
                  std::invalid_argument);
}

TEST_CASE("deterministic rng: stable across calls, unit variance") {
  CHECK(complex_gaussian(7, 0, 5) == complex_gaussian(7, 0, 5));
  CHECK(complex_gaussian(7, 0, 5) != complex_gaussian(7, 0, 6));
  CHECK(complex_gaussian(7, 0, 5) != complex_gaussian(8, 0, 5));
  double acc = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) acc += std::norm(complex_gaussian(3, 1, i));
  CHECK(acc / n == doctest::Approx(1.0).epsilon(0.03));
}
