#include "doctest.h"
#include "oracles.hpp"
#include "svl/error.hpp"
#include "svl/linalg.hpp"

#include <cmath>
#include <limits>

using namespace svl;

namespace {

Matrix with_spectrum(Index rows, Index cols, const Vector& sigma, std::uint64_t seed) {
  const Matrix u = random_orthonormal(rows, sigma.size(), seed);
  const Matrix v = random_orthonormal(cols, sigma.size(), seed + 1000);
  return u * sigma.asDiagonal() * v.transpose();
}

bool orthonormal(const Matrix& q, double tol) {
  return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

TEST_CASE("soft_threshold_svd shrinks diag(3, 1) by 2 to a single triplet") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 3.0;
  m(1, 1) = 1.0;
  const ThinSvd s = soft_threshold_svd(m, 2.0);
  REQUIRE(s.rank() == 1);
  CHECK(s.singulars[0] == doctest::Approx(1.0).epsilon(1e-14));
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = 1.0;
  CHECK((s.reconstruct() - expected).norm() <= 1e-14);
}

TEST_CASE("soft_threshold_svd with tau = 0 is an exact thin SVD") {
  const Matrix m = gaussian_matrix(7, 5, 11);
  const ThinSvd s = soft_threshold_svd(m, 0.0);
  CHECK(s.rank() == 5);
  CHECK((s.reconstruct() - m).norm() <= 1e-10 * m.norm());
  CHECK(orthonormal(s.left, 1e-10));
  CHECK(orthonormal(s.right, 1e-10));
  for (Index i = 1; i < s.rank(); ++i) CHECK(s.singulars[i] <= s.singulars[i - 1]);
}

TEST_CASE("soft_threshold_svd agrees with the embedding-eigen oracle") {
  for (const double tau : {0.1, 1.0, 10.0}) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const Matrix m = 3.0 * gaussian_matrix(10, 8, 100 + seed);
      const ThinSvd s = soft_threshold_svd(m, tau);
      for (Index i = 0; i < s.rank(); ++i) REQUIRE(s.singulars[i] > 0.0);
      CHECK((s.reconstruct() - oracle::soft_threshold(m, tau)).norm() <= 1e-8);
    }
  }
}

TEST_CASE("soft_threshold_svd rejects non-finite input and negative tau") {
  Matrix m = Matrix::Ones(3, 3);
  CHECK_THROWS_AS(soft_threshold_svd(m, -1.0), InvalidInput);
  m(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(soft_threshold_svd(m, 0.5), InvalidInput);
  m(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(soft_threshold_svd(m, 0.5), InvalidInput);
}

TEST_CASE("soft_threshold_svd is non-expansive") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Matrix a = gaussian_matrix(9, 6, 500 + seed);
    const Matrix b = a + 0.3 * gaussian_matrix(9, 6, 900 + seed);
    const double tau = 0.2 + 0.1 * static_cast<double>(seed % 7);
    const double lhs =
        (soft_threshold_svd(a, tau).reconstruct() - soft_threshold_svd(b, tau).reconstruct()).norm();
    CHECK(lhs <= (a - b).norm() + 1e-12);
  }
}

TEST_CASE("soft_threshold_svd nuclear norm equals the shrunk spectrum") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix m = gaussian_matrix(8, 8, 40 + seed);
    const double tau = 0.75;
    const ThinSvd s = soft_threshold_svd(m, tau);
    const double bound = oracle::nuclear(m) - tau * static_cast<double>(s.rank());
    CHECK(oracle::nuclear(s.reconstruct()) <= bound + 1e-10);
    CHECK(oracle::nuclear(s.reconstruct()) >= 0.0);
  }
}

TEST_CASE("power_svd recovers an exact rank-one matrix") {
  const Vector u = gaussian_matrix(30, 1, 1).col(0).normalized();
  const Vector v = gaussian_matrix(12, 1, 2).col(0).normalized();
  const Matrix m = 5.0 * u * v.transpose();
  const ThinSvd s = power_svd(m, 1, 4, 5, 7);
  REQUIRE(s.rank() == 1);
  CHECK(std::abs(s.singulars[0] - 5.0) <= 1e-10);
}

TEST_CASE("power_svd on the identity returns unit singular values") {
  const ThinSvd s = power_svd(Matrix::Identity(8, 8), 8, 4, 0, 3);
  REQUIRE(s.rank() == 8);
  CHECK((s.singulars.array() - 1.0).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("power_svd matches the exact top singular values under spectral decay") {
  Vector sigma(50);
  for (Index i = 0; i < 50; ++i) sigma[i] = std::pow(0.7, static_cast<double>(i));
  const Matrix m = with_spectrum(200, 50, sigma, 21);
  const ThinSvd s = power_svd(m, 10, 4, 5, 8);
  const Vector exact = oracle::singular_values(m);
  REQUIRE(s.rank() == 10);
  for (Index i = 0; i < 10; ++i) CHECK(std::abs(s.singulars[i] - exact[i]) <= 1e-3 * exact[i]);
}

TEST_CASE("power_svd subspace is within 1e-3 rad when the gap ratio is >= 10") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Vector sigma(40);
    for (Index i = 0; i < 40; ++i) sigma[i] = i < 6 ? 10.0 - static_cast<double>(i) : 0.5 * std::pow(0.9, static_cast<double>(i));
    const Matrix m = with_spectrum(120, 40, sigma, 300 + seed);
    const ThinSvd s = power_svd(m, 6, 4, 5, seed);
    CHECK(max_principal_angle(s.left, oracle::top_left_subspace(m, 6)) <= 1e-3);
  }
}

TEST_CASE("power_svd angle does not grow with more power iterations") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Vector sigma(40);
    for (Index i = 0; i < 40; ++i) sigma[i] = i < 5 ? 4.0 : 1.0 * std::pow(0.95, static_cast<double>(i));
    const Matrix m = with_spectrum(100, 40, sigma, 700 + seed);
    const Matrix exact = oracle::top_left_subspace(m, 5);
    double previous = 10.0;
    for (int q = 0; q <= 6; ++q) {
      const double angle = max_principal_angle(power_svd(m, 5, q, 3, seed).left, exact);
      CHECK(angle <= previous + 1e-12);
      previous = angle;
    }
  }
}

TEST_CASE("power_svd rejects rank requests beyond the matrix") {
  const Matrix m = gaussian_matrix(10, 6, 1);
  CHECK_THROWS_AS(power_svd(m, 4, 4, 3, 1), InvalidInput);
  CHECK_THROWS_AS(power_svd(m, 0, 4, 1, 1), InvalidInput);
  CHECK_NOTHROW(power_svd(m, 3, 4, 3, 1));
}

TEST_CASE("power_svd is deterministic for a fixed seed") {
  const Matrix m = gaussian_matrix(40, 20, 5);
  const ThinSvd a = power_svd(m, 4, 2, 5, 99);
  const ThinSvd b = power_svd(m, 4, 2, 5, 99);
  CHECK(a.left == b.left);
  CHECK(a.singulars == b.singulars);
}

TEST_CASE("orthonormal_union drops a dependent column") {
  const Matrix e1 = Matrix::Identity(4, 1);
  const Matrix q = orthonormal_union(e1, e1);
  REQUIRE(q.cols() == 1);
  CHECK(q == e1);
}

TEST_CASE("orthonormal_union of orthogonal axes") {
  const Matrix id = Matrix::Identity(4, 4);
  const Matrix q = orthonormal_union(id.col(0), id.col(1));
  REQUIRE(q.cols() == 2);
  CHECK((q - id.leftCols(2)).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("orthonormal_union spans both inputs with U as its leading block") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix u = random_orthonormal(100, 5, 10 + seed);
    const Matrix v = gaussian_matrix(100, 3, 50 + seed);
    const Matrix q = orthonormal_union(u, v);
    CHECK(q.cols() == 8);
    CHECK(orthonormal(q, 1e-10));
    CHECK(q.leftCols(5) == u);
    for (Index j = 0; j < 5; ++j) CHECK((u.col(j) - q * (q.transpose() * u.col(j))).norm() <= 1e-8);
    for (Index j = 0; j < 3; ++j) CHECK((v.col(j) - q * (q.transpose() * v.col(j))).norm() <= 1e-8 * v.col(j).norm());
  }
}

TEST_CASE("orthonormal_union column count lies in [cols(U), cols(U) + cols(V)]") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Index ku = 1 + static_cast<Index>(seed % 4);
    const Matrix u = random_orthonormal(12, ku, seed);
    // Half of V's columns repeat columns of U.
    Matrix v = gaussian_matrix(12, 4, 200 + seed);
    v.col(0) = u.col(0);
    v.col(2) = 2.0 * u.col(ku - 1);
    const Matrix q = orthonormal_union(u, v);
    CHECK(q.cols() >= ku);
    CHECK(q.cols() <= ku + 4);
    CHECK(q.cols() == ku + 2);
  }
}

TEST_CASE("orthonormal_union rejects a non-orthonormal U") {
  CHECK_THROWS_AS(orthonormal_union(2.0 * Matrix::Identity(3, 1), Matrix::Identity(3, 1)),
                  InvalidInput);
  CHECK_THROWS_AS(orthonormal_union(Matrix::Identity(3, 1), Matrix::Identity(4, 1)),
                  InvalidInput);
}
