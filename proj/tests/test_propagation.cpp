#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fpdecay/propagation.hpp"
#include "test_util.hpp"

using namespace fpdecay;
using fpdecay::testing::mat2;
using fpdecay::testing::vec2;

namespace {

FPSystem kinetic() {
  return FPSystem::create(fpdecay::testing::kinetic_d(), fpdecay::testing::kinetic_c());
}

// Covariance ODE S' = -C S - S C^T + 2D by classical RK4.
Matrix rk4_covariance(const Matrix& c, const Matrix& d, Matrix s, double t, int steps) {
  const double h = t / steps;
  auto rhs = [&](const Matrix& x) -> Matrix { return -c * x - x * c.transpose() + 2 * d; };
  for (int i = 0; i < steps; ++i) {
    const Matrix k1 = rhs(s);
    const Matrix k2 = rhs(s + 0.5 * h * k1);
    const Matrix k3 = rhs(s + 0.5 * h * k2);
    const Matrix k4 = rhs(s + h * k3);
    s += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return s;
}

std::vector<double> grid(double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(hi * i / (n - 1));
  return g;
}

}  // namespace

TEST(GramW, MatchesQuadrature) {
  const auto sys = kinetic();
  for (double t : {0.25, 1.0, 3.0}) {
    const Matrix w = gram_w(sys, t);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        auto f = [&](double s) {
          const Matrix e = matrix_exp(-sys.drift(), s);
          return 2.0 * (e * sys.diffusion() * e.transpose())(i, j);
        };
        const double ref =
            boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, t, 10, 1e-13);
        EXPECT_NEAR(w(i, j), ref, 1e-11);
      }
    }
  }
  EXPECT_EQ(gram_w(sys, 0.0).norm(), 0.0);
  EXPECT_THROW(gram_w(sys, -1.0), std::invalid_argument);
}

TEST(GramW, DeficitIsComplement) {
  const auto sys = FPSystem::create(fpdecay::testing::nondefective_d(), 0.5 * fpdecay::testing::nondefective_c());
  const Matrix k = equilibrium(sys).covariance;
  for (double t : {0.1, 2.0}) EXPECT_LT((gram_w_deficit(sys, t) - (k - gram_w(sys, t))).norm(), 1e-12);
  // Far out the deficit stays accurate where K - W has cancelled to round-off.
  const double t = 20.0;
  const double ref = 1 + 2 * t * t + 2 * t * std::sqrt(1 + t * t);
  EXPECT_NEAR(spectral_norm(gram_w_deficit(kinetic(), t)) / std::exp(-2 * t), ref, 1e-9 * ref);
}

TEST(EvolveMixture, MatchesCovarianceOde) {
  const auto sys = kinetic();
  const Matrix s0 = mat2(0.5, 0.1, 0.1, 0.3);
  const Vector m0 = vec2(1.0, -2.0);
  const auto mix = GaussianMixture::single(m0, s0);
  const double t = 1.3;
  const auto out = evolve_mixture(sys, mix, t);
  const auto& c = out.components()[0];
  EXPECT_LT((c.cov - rk4_covariance(sys.drift(), sys.diffusion(), s0, t, 4000)).norm(), 1e-10);
  // a(t) = e^{-t} (1 + t, -t) for a0 = (1, 0) on the kinetic drift.
  const auto unit = evolve_mixture(sys, GaussianMixture::single(vec2(1, 0), s0), t);
  EXPECT_NEAR(unit.components()[0].mean(0), std::exp(-t) * (1 + t), 1e-13);
  EXPECT_NEAR(unit.components()[0].mean(1), -std::exp(-t) * t, 1e-13);
  EXPECT_DOUBLE_EQ(out.components()[0].weight, 1.0);
}

TEST(EvolveMixture, ConvergesToEquilibrium) {
  const auto out = evolve_mixture(kinetic(), GaussianMixture::single(vec2(3, 3), mat2(4, 0, 0, 0.1)), 30.0);
  EXPECT_LT(out.components()[0].mean.norm(), 1e-10);
  EXPECT_LT((out.components()[0].cov - Matrix::Identity(2, 2)).norm(), 1e-10);
  EXPECT_NEAR(covariance_condition(out), 1.0, 1e-8);
}

TEST(FitEnvelope, KineticClosedFormRatio) {
  // |W - I| = |e^{-Ct}|^2 = e^{-2t} (1 + 2t^2 + 2t sqrt(1 + t^2)).
  const auto ns = normalize(kinetic());
  const auto g = grid(20.0, 401);
  const auto fit = fit_w_convergence(ns, g);
  double max_ref = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double t = g[i];
    const double ref = (1 + 2 * t * t + 2 * t * std::sqrt(1 + t * t)) / (1 + t * t);
    EXPECT_NEAR(fit.ratios[i], ref, 1e-8 * ref);
    max_ref = std::max(max_ref, ref);
  }
  EXPECT_NEAR(fit.c_fit, max_ref, 1e-8);
  EXPECT_LT(fit.c_fit, 4.0);
}

TEST(FitEnvelope, DriftDecayBounded) {
  const auto fit = fit_drift_decay(fpdecay::testing::nondefective_c(), grid(20.0, 401));
  EXPECT_NEAR(fit.c_fit, 1.0, 1e-10);  // normal drift: |e^{-Ct}| = e^{-t}
}

TEST(FitEnvelope, DetectsBlowUp) {
  const auto g = grid(20.0, 201);
  std::vector<double> q, shape;
  for (double t : g) {
    q.push_back(std::pow(t, 3) * std::exp(-2 * t));
    shape.push_back(std::exp(-2 * t));
  }
  EXPECT_THROW(fit_envelope(g, q, shape), EnvelopeViolation);
  shape.back() = 0.0;
  EXPECT_THROW(fit_envelope(g, q, shape), EnvelopeViolation);
}

TEST(SdeOracle, ScalarMomentsWithinErrors) {
  const auto sys = FPSystem::create(Matrix::Ones(1, 1), Matrix::Ones(1, 1));
  const auto mix = GaussianMixture::single(Vector::Constant(1, 2.0), Matrix::Constant(1, 1, 0.25));
  SdeOptions opt;
  opt.n_paths = 20000;
  opt.dt = 1e-3;
  opt.seed = 9;
  const auto res = sde_oracle(sys, mix, {1.0, 0.5}, opt);
  ASSERT_EQ(res.size(), 2u);
  EXPECT_DOUBLE_EQ(res[0].t, 0.5);
  for (const auto& m : res) {
    Vector mean;
    Matrix cov;
    mixture_moments(evolve_mixture(sys, mix, m.t), mean, cov);
    EXPECT_LT(std::abs(m.mean(0) - mean(0)), 4 * m.mean_stderr(0));
    EXPECT_LT(std::abs(m.cov(0, 0) - cov(0, 0)), 4 * m.cov_stderr(0, 0));
  }
}

TEST(SdeOracle, IndependentOfWorkerCount) {
  const auto sys = kinetic();
  const auto mix = GaussianMixture::single(vec2(1, 1), 0.5 * Matrix::Identity(2, 2));
  SdeOptions opt;
  opt.n_paths = 10000;
  opt.dt = 2e-3;
  opt.seed = 4;
  opt.workers = 1;
  const auto a = sde_oracle(sys, mix, {0.2}, opt);
  opt.workers = 3;
  const auto b = sde_oracle(sys, mix, {0.2}, opt);
  EXPECT_EQ(a[0].mean, b[0].mean);
  EXPECT_EQ(a[0].cov, b[0].cov);
}

TEST(SdeOracle, RejectsBadOptions) {
  const auto sys = kinetic();
  const auto mix = GaussianMixture::standard(2);
  SdeOptions opt;
  opt.n_paths = 100;
  EXPECT_THROW(sde_oracle(sys, mix, {1.0}, opt), std::invalid_argument);
  opt.n_paths = 10000;
  opt.dt = 0.1;
  EXPECT_THROW(sde_oracle(sys, mix, {1.0}, opt), std::invalid_argument);
}

TEST(MixtureMoments, TwoComponents) {
  GaussianMixture mix({{0.25, Vector::Constant(1, 2.0), Matrix::Constant(1, 1, 1.0)},
                       {0.75, Vector::Constant(1, -2.0), Matrix::Constant(1, 1, 3.0)}});
  Vector m;
  Matrix c;
  mixture_moments(mix, m, c);
  EXPECT_NEAR(m(0), -1.0, 1e-15);
  EXPECT_NEAR(c(0, 0), 0.25 * 5 + 0.75 * 7 - 1.0, 1e-14);
}
