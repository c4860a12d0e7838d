// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "phylab/numerics.hpp"
#include "support.hpp"

using namespace phylab;
using namespace phylab::numerics;
using phylab::test::random_complex_matrix;
using phylab::test::random_hermitian;

namespace {

double unitarity_error(const ComplexMatrix& u) {
  const ComplexMatrix g = u.adjoint() * u;
  return max_abs(g - ComplexMatrix::Identity(u.cols(), u.cols()));
}

// Independent route to the singular values: sqrt of the eigenvalues of A^H A.
RealVector singular_values_via_gram(const ComplexMatrix& a) {
  const ComplexMatrix gram = a.adjoint() * a;
  const EigFactors e = eig_hermitian(gram);
  RealVector s(e.values.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = std::sqrt(std::max(0.0, e.values(i)));
  return s;
}

void check_svd_invariants(const ComplexMatrix& a, const SvdFactors& f) {
  const double scale = std::max(max_abs(a), 1e-300);
  CHECK(unitarity_error(f.u) <= 1e-10);
  CHECK(unitarity_error(f.v) <= 1e-10);
  for (Eigen::Index i = 0; i < f.sigma.size(); ++i) {
    CHECK(f.sigma(i) >= 0.0);
    if (i > 0) CHECK(f.sigma(i) <= f.sigma(i - 1) + 1e-14 * scale);
  }
  const Eigen::Index k = std::min(a.rows(), a.cols());
  const ComplexMatrix recon =
      f.u.leftCols(k) * f.sigma.head(k).asDiagonal() * f.v.leftCols(k).adjoint();
  CHECK(max_abs(recon - a) <= 1e-9 * scale);
  // Phase convention: largest-magnitude entry of each u column real positive.
  for (Eigen::Index j = 0; j < f.u.cols(); ++j) {
    Eigen::Index imax = 0;
    f.u.col(j).cwiseAbs().maxCoeff(&imax);
    CHECK(std::abs(std::imag(f.u(imax, j))) <= 1e-10);
    CHECK(std::real(f.u(imax, j)) >= -1e-12);
  }
}

void check_gmd_invariants(const ComplexMatrix& a, Eigen::Index k, const GmdFactors& g) {
  const SvdFactors f = svd(a);
  CHECK(unitarity_error(g.q) <= 1e-9);
  CHECK(unitarity_error(g.p) <= 1e-9);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) CHECK(std::abs(g.r(i, j)) == 0.0);
    CHECK(std::abs(std::imag(g.r(i, i))) == 0.0);
    CHECK(std::real(g.r(i, i)) > 0.0);
    CHECK(std::abs(std::real(g.r(i, i)) - g.sigma_bar) <= 1e-8 * g.sigma_bar);
  }
  const ComplexMatrix a_k =
      f.u.leftCols(k) * f.sigma.head(k).asDiagonal() * f.v.leftCols(k).adjoint();
  CHECK(max_abs(g.q * g.r * g.p.adjoint() - a_k) <= 1e-9 * std::max(max_abs(a), 1e-300));
  // Equalization preserves the product of the diagonal entries.
  double log_prod_r = 0.0, log_prod_s = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    log_prod_r += std::log(std::real(g.r(i, i)));
    log_prod_s += std::log(f.sigma(i));
  }
  CHECK(std::abs(log_prod_r - log_prod_s) <= 1e-7);
}

}  // namespace

TEST_CASE("svd of identity") {
  const SvdFactors f = svd(ComplexMatrix::Identity(3, 3));
  for (int i = 0; i < 3; ++i) CHECK(f.sigma(i) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("svd of real diagonal") {
  ComplexMatrix a = ComplexMatrix::Zero(2, 2);
  a(0, 0) = 3.0;
  a(1, 1) = 1.0;
  const SvdFactors f = svd(a);
  CHECK(f.sigma(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.sigma(1) == doctest::Approx(1.0).epsilon(1e-12));
  // With the phase convention the factors are exactly the identity.
  CHECK(max_abs(f.u - ComplexMatrix::Identity(2, 2)) <= 1e-12);
  CHECK(max_abs(f.v - ComplexMatrix::Identity(2, 2)) <= 1e-12);
}

TEST_CASE("svd of seeded rectangular matrix") {
  Rng rng(2024);
  const ComplexMatrix a = random_complex_matrix(rng, 4, 3);
  const SvdFactors f = svd(a);
  check_svd_invariants(a, f);
  const ComplexMatrix recon = f.u.leftCols(3) * f.sigma.asDiagonal() * f.v.adjoint();
  CHECK(max_abs(recon - a) <= 1e-10);
}

TEST_CASE("svd singular values match gram-matrix route") {
  Rng rng(77);
  const ComplexMatrix a = random_complex_matrix(rng, 6, 6);
  const SvdFactors f = svd(a);
  const RealVector s2 = singular_values_via_gram(a);
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(f.sigma(i) == doctest::Approx(s2(i)).epsilon(1e-9));
}

TEST_CASE("svd invariant under left diagonal unitary") {
  Rng rng(31);
  const ComplexMatrix a = random_complex_matrix(rng, 5, 4);
  ComplexMatrix d = ComplexMatrix::Identity(5, 5);
  for (int i = 0; i < 5; ++i) d(i, i) = std::exp(kJ * rng.uniform(0.0, 2.0 * kPi));
  const SvdFactors f1 = svd(a);
  const SvdFactors f2 = svd(d * a);
  for (Eigen::Index i = 0; i < 4; ++i)
    CHECK(std::abs(f1.sigma(i) - f2.sigma(i)) <= 1e-10 * std::max(1.0, f1.sigma(0)));
}

TEST_CASE("svd rejects bad input") {
  CHECK_THROWS_AS(svd(ComplexMatrix(0, 0)), std::invalid_argument);
  ComplexMatrix a = ComplexMatrix::Zero(2, 2);
  a(0, 1) = Complex(std::nan(""), 0.0);
  CHECK_THROWS_AS(svd(a), std::invalid_argument);
}

TEST_CASE("eig_hermitian of identity and diagonal") {
  const EigFactors e1 = eig_hermitian(ComplexMatrix::Identity(4, 4));
  for (int i = 0; i < 4; ++i) CHECK(e1.values(i) == doctest::Approx(1.0).epsilon(1e-12));

  ComplexMatrix d = ComplexMatrix::Zero(2, 2);
  d(0, 0) = 5.0;
  d(1, 1) = 2.0;
  const EigFactors e2 = eig_hermitian(d);
  CHECK(e2.values(0) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(e2.values(1) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("eig_hermitian invariants on seeded matrix") {
  Rng rng(5150);
  const ComplexMatrix a = random_hermitian(rng, 6);
  const EigFactors e = eig_hermitian(a);
  CHECK(std::abs(e.values.sum() - std::real(a.trace())) <= 1e-10);
  CHECK(unitarity_error(e.vectors) <= 1e-10);
  const double scale = max_abs(a);
  for (Eigen::Index i = 0; i < 6; ++i) {
    if (i > 0) CHECK(e.values(i) <= e.values(i - 1) + 1e-12 * scale);
    const ComplexVector resid = a * e.vectors.col(i) - e.values(i) * e.vectors.col(i);
    CHECK(resid.cwiseAbs().maxCoeff() <= 1e-9 * scale);
  }
}

TEST_CASE("eig_hermitian rejects non-hermitian input") {
  ComplexMatrix a = ComplexMatrix::Zero(2, 2);
  a(0, 1) = 1.0;
  CHECK_THROWS_AS(eig_hermitian(a), std::invalid_argument);
  CHECK_THROWS_AS(eig_hermitian(ComplexMatrix::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("gmd of diag(4,1) equalizes to 2") {
  ComplexMatrix a = ComplexMatrix::Zero(2, 2);
  a(0, 0) = 4.0;
  a(1, 1) = 1.0;
  const GmdFactors g = gmd(a, 2);
  CHECK(std::real(g.r(0, 0)) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(std::real(g.r(1, 1)) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(g.sigma_bar == doctest::Approx(2.0).epsilon(1e-12));
  check_gmd_invariants(a, 2, g);
}

TEST_CASE("gmd of identity is identity") {
  const GmdFactors g = gmd(ComplexMatrix::Identity(3, 3), 3);
  CHECK(max_abs(g.r - ComplexMatrix::Identity(3, 3)) <= 1e-12);
  check_gmd_invariants(ComplexMatrix::Identity(3, 3), 3, g);
}

TEST_CASE("gmd diagonal matches geometric mean from independent oracle") {
  Rng rng(404);
  const ComplexMatrix a = random_complex_matrix(rng, 4, 4);
  const GmdFactors g = gmd(a, 3);
  const RealVector s = singular_values_via_gram(a);
  const double want = std::cbrt(s(0) * s(1) * s(2));
  for (int i = 0; i < 3; ++i)
    CHECK(std::real(g.r(i, i)) == doctest::Approx(want).epsilon(1e-8));
  check_gmd_invariants(a, 3, g);
}

TEST_CASE("gmd rejects rank-deficient truncation") {
  Rng rng(88);
  const ComplexMatrix a = random_complex_matrix(rng, 4, 2);
  const ComplexMatrix low_rank = a * a.adjoint();  // 4x4, rank 2
  CHECK_THROWS_AS(gmd(low_rank, 3), std::invalid_argument);
  CHECK_THROWS_AS(gmd(low_rank, 0), std::invalid_argument);
  CHECK_THROWS_AS(gmd(low_rank, 5), std::invalid_argument);
}

TEST_CASE("factorization property sweep on seeded matrices") {
  Rng rng(20240817);
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Index m = 1 + rng.uniform_int(16);
    const Eigen::Index n = 1 + rng.uniform_int(16);
    const ComplexMatrix a = random_complex_matrix(rng, m, n);
    const SvdFactors f = svd(a);
    check_svd_invariants(a, f);

    const Eigen::Index kmax = std::min(m, n);
    Eigen::Index k = 1 + rng.uniform_int(static_cast<int>(kmax));
    while (k > 1 && f.sigma(k - 1) <= 1e-10 * f.sigma(0)) --k;
    check_gmd_invariants(a, k, gmd(a, k));

    const ComplexMatrix h = random_hermitian(rng, 1 + rng.uniform_int(16));
    const EigFactors e = eig_hermitian(h);
    CHECK(std::abs(e.values.sum() - std::real(h.trace())) <= 1e-9 * std::max(1.0, max_abs(h)));
  }
}
