#include <gtest/gtest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "fpdecay/system.hpp"
#include "test_util.hpp"

using namespace fpdecay;
using fpdecay::testing::mat2;

namespace {

// Condition (C) by the PBH test: no left eigenvector v of -C (eigenvector of
// C^T) lies in Ker D.
bool pbh_condition_c(const Matrix& d, const Matrix& c) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(c.transpose().cast<Complex>());
  for (int k = 0; k < c.rows(); ++k) {
    const Complex lam = es.eigenvalues()(k);
    Eigen::MatrixXcd stacked(2 * c.rows(), c.rows());
    stacked << c.transpose().cast<Complex>() - lam * Eigen::MatrixXcd::Identity(c.rows(), c.rows()),
        d.cast<Complex>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(stacked);
    const auto sv = svd.singularValues();
    // Loose threshold: a defective eigenvalue is only known to ~sqrt(eps).
    if (sv(sv.size() - 1) < 1e-6 * std::max(1.0, sv(0))) return false;
  }
  return true;
}

}  // namespace

TEST(Validate, KineticSystem) {
  const auto r = validate(fpdecay::testing::kinetic_d(), fpdecay::testing::kinetic_c());
  EXPECT_TRUE(r.overall);
  EXPECT_EQ(r.diffusion_rank, 1);
  EXPECT_NEAR(r.mu, 1.0, 1e-6);
  EXPECT_EQ(r.defect, 1);
  ASSERT_TRUE(r.kappa.has_value());
  EXPECT_EQ(*r.kappa, 1);
}

TEST(Validate, FailuresAreReported) {
  // D not PSD.
  auto r = validate(mat2(1, 0, 0, -1), Matrix::Identity(2, 2));
  EXPECT_FALSE(r.condition_a);
  EXPECT_FALSE(r.overall);
  // D = 0.
  r = validate(Matrix::Zero(2, 2), Matrix::Identity(2, 2));
  EXPECT_FALSE(r.condition_a);
  // C unstable.
  r = validate(Matrix::Identity(2, 2), mat2(1, 0, 0, -1));
  EXPECT_FALSE(r.condition_b);
  // Ker D = span(e1) is invariant under the diagonal C^T.
  r = validate(mat2(0, 0, 0, 1), mat2(1, 0, 0, 2));
  EXPECT_TRUE(r.condition_a);
  EXPECT_TRUE(r.condition_b);
  EXPECT_FALSE(r.condition_c);
  EXPECT_THROW(FPSystem::create(mat2(0, 0, 0, 1), mat2(1, 0, 0, 2)), ValidationError);
}

TEST(Validate, ConditionCAgreesWithPbh) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> pick(-2, 2);
  int disagreements = 0, tried = 0;
  for (int trial = 0; trial < 300; ++trial) {
    Matrix c(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) c(i, j) = pick(rng);
    c += 4.0 * Matrix::Identity(3, 3);
    Eigen::EigenSolver<Matrix> ev(c);
    if (ev.eigenvalues().real().minCoeff() <= 0.1) continue;
    Matrix d = Matrix::Zero(3, 3);
    d(2, 2) = 1.0;
    if (trial % 3 == 0) d(1, 1) = 1.0;
    const auto r = validate(d, c);
    ++tried;
    if (r.condition_c != pbh_condition_c(d, c)) {
      ++disagreements;
      ADD_FAILURE() << "C =\n" << c << "\nD =\n" << d << "\nkalman " << r.condition_c;
    }
  }
  EXPECT_GT(tried, 100);
  EXPECT_EQ(disagreements, 0);
}

TEST(Equilibrium, KineticIsStandardNormal) {
  const auto sys = FPSystem::create(fpdecay::testing::kinetic_d(), fpdecay::testing::kinetic_c());
  const auto eq = equilibrium(sys);
  EXPECT_LT((eq.covariance - Matrix::Identity(2, 2)).norm(), 1e-12);
  EXPECT_NEAR(eq.density(Vector::Zero(2)), 1.0 / (2 * M_PI), 1e-14);
}

TEST(Normalize, Invariants) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + trial % 2;
    Matrix c = 2.0 * Matrix::Identity(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) c(i, j) += 0.6 * n(rng);
    Eigen::EigenSolver<Matrix> ev(c);
    if (ev.eigenvalues().real().minCoeff() <= 0.2) continue;
    const Matrix dd = fpdecay::testing::random_spd(rng, d, 0.3, 2.0);
    const auto sys = FPSystem::create(dd, c);
    const auto ns = normalize(sys);
    const Matrix& d2 = ns.diffusion();
    const Matrix& c2 = ns.drift();
    // K = I in the new coordinates.
    EXPECT_LT((c2 + c2.transpose() - 2 * d2).norm(), 1e-10);
    // D diagonal, descending.
    EXPECT_LT((d2 - Matrix(d2.diagonal().asDiagonal())).norm(), 1e-12);
    for (int i = 1; i < d; ++i) EXPECT_GE(d2(i - 1, i - 1), d2(i, i) - 1e-12);
    // Similarity preserves the spectrum.
    std::vector<Complex> a, b;
    Eigen::EigenSolver<Matrix> e1(c), e2(c2);
    for (int i = 0; i < d; ++i) {
      a.push_back(e1.eigenvalues()(i));
      b.push_back(e2.eigenvalues()(i));
    }
    EXPECT_TRUE(fpdecay::testing::multisets_match(a, b, 1e-9));
    EXPECT_LT((ns.transform() * ns.inverse_transform() - Matrix::Identity(d, d)).norm(), 1e-12);
  }
}

TEST(Normalize, KineticSwapsCoordinates) {
  const auto sys = FPSystem::create(fpdecay::testing::kinetic_d(), fpdecay::testing::kinetic_c());
  const auto ns = normalize(sys);
  EXPECT_LT((ns.diffusion() - mat2(2, 0, 0, 0)).norm(), 1e-12);
  EXPECT_LT((ns.drift() - mat2(2, 1, -1, 0)).norm(), 1e-12);
  const auto adj = adjoint_system(ns);
  EXPECT_LT((adj.drift() - ns.drift().transpose()).norm(), 1e-15);
}
