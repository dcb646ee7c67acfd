#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fpdecay/linalg.hpp"
#include "test_util.hpp"

using namespace fpdecay;
using fpdecay::testing::mat2;

TEST(Linalg, SpectralNormAndRank) {
  EXPECT_NEAR(spectral_norm(mat2(3, 0, 0, -4)), 4.0, 1e-14);
  EXPECT_EQ(numerical_rank(mat2(1, 2, 2, 4)), 1);
  EXPECT_EQ(numerical_rank(Matrix::Identity(3, 3)), 3);
  EXPECT_EQ(numerical_rank(Matrix::Zero(2, 2)), 0);
}

TEST(Linalg, PsdCheck) {
  auto r = psd_check(mat2(0, 0, 0, 2));
  EXPECT_TRUE(r.is_symmetric_psd);
  EXPECT_EQ(r.rank, 1);
  EXPECT_FALSE(psd_check(mat2(1, 0, 0, -1)).is_symmetric_psd);
  EXPECT_FALSE(psd_check(mat2(1, 1, 0, 1)).is_symmetric_psd);
}

TEST(Linalg, PsdSqrtSquaresBack) {
  std::mt19937_64 rng(4);
  const Matrix s = fpdecay::testing::random_spd(rng, 3, 0.1, 5.0);
  const Matrix r = psd_sqrt(s);
  EXPECT_LT((r * r - s).norm(), 1e-12);
  EXPECT_LT((r - r.transpose()).norm(), 1e-14);
}

TEST(Linalg, MatrixExpNilpotent) {
  // e^{Nt} = I + Nt for N^2 = 0.
  const Matrix n = mat2(-1, -1, 1, 1);
  const Matrix e = matrix_exp(n, 2.5);
  EXPECT_LT((e - (Matrix::Identity(2, 2) + 2.5 * n)).norm(), 1e-13);
}

TEST(Linalg, MatrixExpRotation) {
  const Matrix j = mat2(0, -1, 1, 0);
  const Matrix e = matrix_exp(j, 0.7);
  EXPECT_NEAR(e(0, 0), std::cos(0.7), 1e-14);
  EXPECT_NEAR(e(1, 0), std::sin(0.7), 1e-14);
}

TEST(Linalg, LyapunovKineticGivesIdentity) {
  const Matrix k = solve_lyapunov(fpdecay::testing::kinetic_c(), fpdecay::testing::kinetic_d());
  EXPECT_LT((k - Matrix::Identity(2, 2)).norm(), 1e-13);
}

TEST(Linalg, LyapunovMatchesIntegralOracle) {
  // K = 2 int_0^inf e^{-Cs} D e^{-C^T s} ds, entrywise by adaptive Gauss-Kronrod.
  Matrix c(3, 3);
  c << 2, 1, 0, -1, 1, 0.5, 0, -0.5, 3;
  Matrix d(3, 3);
  d << 1, 0.2, 0, 0.2, 0.5, 0, 0, 0, 0;
  const Matrix k = solve_lyapunov(c, d);
  EXPECT_LT((c * k + k * c.transpose() - 2 * d).norm(), 1e-12);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      auto f = [&](double s) {
        const Matrix e = matrix_exp(-c, s);
        return 2.0 * (e * d * e.transpose())(i, j);
      };
      const double ref = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
          f, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-12);
      EXPECT_NEAR(k(i, j), ref, 1e-9) << i << "," << j;
    }
  }
}

TEST(Linalg, LyapunovRejectsUnstable) {
  EXPECT_THROW(solve_lyapunov(mat2(-1, 0, 0, 1), Matrix::Identity(2, 2)), NumericalError);
}

TEST(Linalg, KronSumSolveAgreesWithLyapunov) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  Matrix c = 3.0 * Matrix::Identity(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c(i, j) += 0.5 * n(rng);
  const Matrix d = fpdecay::testing::random_spd(rng, 3, 0.2, 2.0);
  EXPECT_LT((kron_sum_solve(c, 2 * d) - solve_lyapunov(c, d)).norm(), 1e-11);
  const Matrix ks = kron_sum(c);
  EXPECT_EQ(ks.rows(), 9);
}

TEST(Linalg, DimensionChecks) {
  EXPECT_THROW(solve_lyapunov(Matrix::Identity(2, 3), Matrix::Identity(2, 2)), DimensionError);
  EXPECT_THROW(kron_sum_solve(Matrix::Identity(2, 2), Matrix::Identity(3, 3)), DimensionError);
}

TEST(EigenStructure, DiagonalDistinct) {
  const auto es = eigen_structure(mat2(3, 0, 0, 5));
  ASSERT_EQ(es.clusters.size(), 2u);
  EXPECT_EQ(es.max_defect(), 0);
  EXPECT_FALSE(es.ill_conditioned);
}

TEST(EigenStructure, KineticJordanBlock) {
  const auto es = eigen_structure(fpdecay::testing::kinetic_c());
  ASSERT_EQ(es.clusters.size(), 1u);
  EXPECT_NEAR(es.clusters[0].value.real(), 1.0, 1e-6);
  EXPECT_EQ(es.clusters[0].algebraic, 2);
  EXPECT_EQ(es.clusters[0].geometric, 1);
  EXPECT_EQ(es.max_defect(), 1);
}

TEST(EigenStructure, RepeatedButDiagonalizable) {
  const auto es = eigen_structure(2.0 * Matrix::Identity(3, 3));
  ASSERT_EQ(es.clusters.size(), 1u);
  EXPECT_EQ(es.clusters[0].algebraic, 3);
  EXPECT_EQ(es.clusters[0].geometric, 3);
}

TEST(EigenStructure, ComplexPair) {
  const auto es = eigen_structure(fpdecay::testing::nondefective_c());
  ASSERT_EQ(es.clusters.size(), 2u);
  EXPECT_TRUE(fpdecay::testing::multisets_match(es.multiset(), {{1, 3.5}, {1, -3.5}}, 1e-10));
}

TEST(EigenStructure, Jordan3ScatteredEigenvalues) {
  // Similar to a 3x3 Jordan block at 2; computed eigenvalues scatter by ~1e-5.
  Matrix j(3, 3);
  j << 2, 1, 0, 0, 2, 1, 0, 0, 2;
  Matrix s(3, 3);
  s << 1, 2, 0, 0, 1, 1, 1, 0, 1;
  const Matrix m = s * j * s.inverse();
  const auto es = eigen_structure(m);
  ASSERT_EQ(es.clusters.size(), 1u);
  EXPECT_EQ(es.clusters[0].algebraic, 3);
  EXPECT_EQ(es.clusters[0].geometric, 1);
  EXPECT_EQ(es.max_defect(), 2);
}

TEST(MuAndDefect, Canonical) {
  auto g = mu_and_defect(fpdecay::testing::kinetic_c());
  EXPECT_NEAR(g.mu, 1.0, 1e-6);
  EXPECT_EQ(g.n, 1);
  g = mu_and_defect(mat2(1, 0, 0, 2));
  EXPECT_NEAR(g.mu, 1.0, 1e-12);
  EXPECT_EQ(g.n, 0);
  EXPECT_THROW(mu_and_defect(mat2(0, 1, -1, 0)), std::domain_error);
}

TEST(Kalman, KineticKappaOne) {
  const Matrix qh = psd_sqrt(2.0 * fpdecay::testing::kinetic_d());
  const auto r = kalman_kappa(qh, -fpdecay::testing::kinetic_c());
  ASSERT_TRUE(r.kappa.has_value());
  EXPECT_EQ(*r.kappa, 1);
}

TEST(Kalman, UncontrollablePair) {
  const Matrix qh = psd_sqrt(mat2(0, 0, 0, 2));
  const auto r = kalman_kappa(qh, mat2(-1, 0, 0, -2));
  EXPECT_FALSE(r.kappa.has_value());
}
