#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "fpdecay/entropy.hpp"
#include "fpdecay/propagation.hpp"
#include "test_util.hpp"

using namespace fpdecay;
using fpdecay::testing::mat2;
using fpdecay::testing::vec2;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_pdf(double x, double m, double s2) {
  return std::exp(-0.5 * (x - m) * (x - m) / s2) / std::sqrt(2 * M_PI * s2);
}

// 1D oracle: int g(u(x), u'(x)) f_inf(x) dx for u = N(m, s2) / N(0, 1).
template <class G>
double oracle_1d(double m, double s2, G g) {
  auto f = [&](double x) {
    if (std::abs(x) > 36.0) return 0.0;  // f_inf underflows; integrands here decay
    const double finf = normal_pdf(x, 0.0, 1.0);
    const double fx = normal_pdf(x, m, s2);
    const double u = fx / finf;
    if (u == 0.0) return 0.0;
    const double du = u * (-(x - m) / s2 + x);
    return g(u, du) * finf;
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -kInf, kInf, 15, 1e-13);
}

GaussianMixture gauss1(double m, double s2) {
  return GaussianMixture::single(Vector::Constant(1, m), Matrix::Constant(1, 1, s2));
}

}  // namespace

TEST(Generator, PowerDerivativesMatchFiniteDifferences) {
  for (double p : {1.3, 1.5, 2.0}) {
    const auto g = EntropyGenerator::power(p);
    for (double y : {0.2, 0.9, 1.0, 2.5, 7.0}) {
      const double h = 1e-5;
      EXPECT_NEAR(g.d1(y), (g.psi(y + h) - g.psi(y - h)) / (2 * h), 1e-7 * (1 + std::abs(g.d1(y))));
      EXPECT_NEAR(g.d2(y), (g.d1(y + h) - g.d1(y - h)) / (2 * h), 1e-7 * (1 + std::abs(g.d2(y))));
      EXPECT_NEAR(g.d3(y), (g.d2(y + h) - g.d2(y - h)) / (2 * h), 1e-7 * (1 + std::abs(g.d3(y))));
      EXPECT_NEAR(g.d4(y), (g.d3(y + h) - g.d3(y - h)) / (2 * h), 1e-6 * (1 + std::abs(g.d4(y))));
    }
    EXPECT_EQ(g.psi(1.0), 0.0);
    EXPECT_EQ(g.d1(1.0), 0.0);
  }
}

TEST(Generator, AccurateNearOne) {
  const auto g = EntropyGenerator::power(1.5);
  using big = boost::multiprecision::cpp_bin_float_50;
  for (double delta : {1e-2, 1e-4, -3e-6, 1e-9, -2e-12}) {
    const double y = 1.0 + delta;  // exact double argument
    const big by(y);
    const big ref = (boost::multiprecision::pow(by, big(1.5)) - big(1.5) * (by - 1) - 1) / big(0.75);
    const double r = static_cast<double>(ref);
    EXPECT_NEAR(g.psi(y), r, 1e-12 * r) << delta;
  }
}

TEST(Generator, Domains) {
  EXPECT_THROW(EntropyGenerator::power(1.0), std::invalid_argument);
  EXPECT_THROW(EntropyGenerator::power(2.5), std::invalid_argument);
  EXPECT_THROW(EntropyGenerator::power(1.5).psi(-0.1), std::domain_error);
  EXPECT_NO_THROW(EntropyGenerator::power(2.0).psi(-0.1));
  EXPECT_TRUE(EntropyGenerator::power(2.0).signed_domain());
  EXPECT_NEAR(EntropyGenerator::boltzmann().psi(std::exp(1.0)), 1.0, 1e-15);
}

TEST(Generator, WeightedEvaluation) {
  const auto g = EntropyGenerator::power(1.5);
  EXPECT_NEAR(g.psi_weighted(std::log(3.0), std::log(0.2)), g.psi(3.0) * 0.2, 1e-15);
  EXPECT_NEAR(g.psi2_u2_weighted(std::log(3.0), std::log(0.2)), g.d2(3.0) * 9 * 0.2, 1e-14);
  // u = e^800 against w = e^-900 must stay finite.
  EXPECT_TRUE(std::isfinite(g.psi_weighted(800.0, -900.0)));
}

TEST(Admissibility, Families) {
  const auto grid = log_grid();
  EXPECT_TRUE(check_admissible(EntropyGenerator::power(1.5), grid).admissible);
  EXPECT_TRUE(check_admissible(EntropyGenerator::power(2.0), grid).admissible);
  EXPECT_TRUE(check_admissible(EntropyGenerator::boltzmann(), grid).admissible);
  // (y-1)^2/2 + (y-1)^4 violates the inequality for |y - 1| > 1/6.
  EntropyGenerator::Functions f;
  f.psi = [](double y) { return 0.5 * (y - 1) * (y - 1) + std::pow(y - 1, 4); };
  f.d1 = [](double y) { return (y - 1) + 4 * std::pow(y - 1, 3); };
  f.d2 = [](double y) { return 1 + 12 * (y - 1) * (y - 1); };
  f.d3 = [](double y) { return 24 * (y - 1); };
  f.d4 = [](double) { return 24.0; };
  const auto r = check_admissible(EntropyGenerator::custom("quartic", f), grid);
  EXPECT_FALSE(r.admissible);
  EXPECT_LT(r.worst_margin, 0.0);
  EXPECT_EQ(std::count(grid.begin(), grid.end(), 1.0), 1);
}

TEST(E2Mixture, ClosedForm1D) {
  for (double s2 : {0.5, 1.0, 1.7}) {
    const double m = 0.4;
    const double ref = oracle_1d(m, s2, [](double u, double) { return 0.5 * (u - 1) * (u - 1); });
    EXPECT_NEAR(e2_mixture(gauss1(m, s2)), ref, 1e-10 * (1 + ref));
  }
  EXPECT_EQ(e2_mixture(gauss1(0.0, 2.5)), kInfiniteEntropy);
  EXPECT_EQ(e2_mixture(GaussianMixture::standard(2)), 0.0);
}

TEST(EpQuadrature, PowerMatchesOracle) {
  const auto g = EntropyGenerator::power(1.5);
  for (double s2 : {0.4, 1.0, 2.5}) {
    const double m = 0.7;
    const double ref = oracle_1d(m, s2, [&](double u, double) { return g.psi(u); });
    EXPECT_NEAR(ep_quadrature(gauss1(m, s2), g, QuadratureSpec::defaults(1)), ref, 1e-8 * (1 + ref))
        << s2;
  }
  // p S^{-1} - (p - 1) I not PD: 1.5 / 4 < 0.5.
  EXPECT_EQ(ep_quadrature(gauss1(0.0, 4.0), g, QuadratureSpec::defaults(1)), kInfiniteEntropy);
}

TEST(EpQuadrature, TwoEqualsE2) {
  std::mt19937_64 rng(3);
  const auto mix = fpdecay::testing::random_mixture(rng, 2, 0.5, 0.6, 1.4);
  EXPECT_NEAR(ep_quadrature(mix, EntropyGenerator::power(2.0), QuadratureSpec::defaults(2)),
              e2_mixture(mix), 1e-10);
}

TEST(EpQuadrature, BoltzmannIsKullbackLeibler) {
  const double m = 0.5, s2 = 0.6;
  const double kl = 0.5 * (s2 + m * m - 1 - std::log(s2));
  EXPECT_NEAR(ep_quadrature(gauss1(m, s2), EntropyGenerator::boltzmann(), QuadratureSpec::defaults(1)),
              kl, 1e-10);
}

TEST(EpQuadrature, HermiteStateRejectsNegativeDensity) {
  HermiteState s(1, 1);
  s.set_coefficient(MultiIndex{{1}}, 0.5);  // u = 1 + x/2 < 0 for x < -2
  EXPECT_THROW(ep_quadrature(s, EntropyGenerator::power(1.5), QuadratureSpec::defaults(1)),
               std::domain_error);
  EXPECT_NEAR(ep_quadrature(s, EntropyGenerator::power(2.0), QuadratureSpec::defaults(1)),
              s.e2(), 1e-13);
}

TEST(Fisher, MixtureMatchesOracle) {
  for (double p : {1.5, 2.0}) {
    const auto g = EntropyGenerator::power(p);
    const double m = -0.3, s2 = 0.8;
    const double ref = oracle_1d(m, s2, [&](double u, double du) { return g.d2(u) * du * du; });
    EXPECT_NEAR(fisher_info(gauss1(m, s2), g, Matrix::Ones(1, 1), QuadratureSpec::defaults(1)), ref,
                1e-8 * (1 + ref));
  }
}

TEST(Fisher, HermiteQuadraticIdentity) {
  // p = 2, P = I: I = sum |alpha| a_alpha^2.
  HermiteState s(2, 2);
  s.set_coefficient(MultiIndex{{1, 0}}, 0.2);
  s.set_coefficient(MultiIndex{{1, 1}}, -0.3);
  s.set_coefficient(MultiIndex{{0, 2}}, 0.1);
  const double ref = 1 * 0.04 + 2 * 0.09 + 2 * 0.01;
  EXPECT_NEAR(fisher_info(s, EntropyGenerator::power(2.0), Matrix::Identity(2, 2),
                          QuadratureSpec::defaults(2)),
              ref, 1e-12);
}

TEST(Dissipation, KineticMixture) {
  const auto ns = normalize(
      FPSystem::create(fpdecay::testing::kinetic_d(), fpdecay::testing::kinetic_c()));
  const auto mix = GaussianMixture::single(vec2(0.5, -0.3), mat2(0.8, 0.1, 0.1, 1.1));
  for (double p : {1.5, 2.0}) {
    const auto r = dissipation_check(ns, mix, EntropyGenerator::power(p), 0.5, 1e-3,
                                     QuadratureSpec::defaults(2));
    EXPECT_LT(r.rhs, 0.0);
    EXPECT_LT(r.gap, 1e-5) << p;
  }
  EXPECT_THROW(dissipation_check(ns, mix, EntropyGenerator::power(2.0), 0.0, 1e-3,
                                 QuadratureSpec::defaults(2)),
               std::invalid_argument);
}

TEST(Dominance, Constants) {
  EXPECT_NEAR(dominance_ratio(1.5, 2.0, 0.0), 2.0 / 1.5, 1e-15);
  EXPECT_EQ(dominance_ratio(1.5, 2.0, 1.0), 1.0);
  const double c = dominance_constant(1.2, 1.8);
  for (double y : {0.0, 0.01, 0.5, 0.99, 1.01, 3.0, 1e4}) EXPECT_LE(dominance_ratio(1.2, 1.8, y), c);
  EXPECT_GE(c, 1.8 / 1.2);
  EXPECT_DOUBLE_EQ(psi_vs_e2_bound(EntropyGenerator::power(1.5)), 2.0);
}
