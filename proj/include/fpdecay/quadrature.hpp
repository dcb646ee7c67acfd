#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "fpdecay/linalg.hpp"

namespace fpdecay {

struct QuadratureSpec {
  enum class Rule { GaussHermite, MonteCarlo };

  Rule rule = Rule::GaussHermite;
  int order = 60;                  // nodes per axis (Gauss-Hermite)
  std::size_t samples = 200000;    // Monte Carlo sample count
  std::uint64_t seed = 1;

  /// Order 60 per axis for d <= 2, 30 for d = 3, seeded Monte Carlo beyond.
  static QuadratureSpec defaults(int dim);
};

/// Gauss-Hermite rule for the standard normal weight (probabilists'
/// convention): sum_k w_k g(x_k) ~ E[g(X)], X ~ N(0, 1). Weights sum to 1.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached per order. Nodes from Golub-Welsch, polished by Newton on the
/// normalized three-term recurrence; weights w_k = 1 / (n h_{n-1}(x_k)^2).
const GaussHermiteRule& gauss_hermite(int order);

/// Normalized probabilists' Hermite values h_j(x) = He_j(x) / sqrt(j!),
/// j = 0..max_degree.
void normalized_hermite(double x, int max_degree, double* out);

/// Integrates g(x) f_inf(x) over R^d, f_inf = N(0, I), by sampling nodes from
/// the wider reference N(0, sigma^2 I) (sigma >= 1).
///
/// `g(x, log_w)` must return g(x) * exp(log_w), where
/// log_w = log(f_inf(x) / N(x; 0, sigma^2 I)) <= d log sigma. Passing the
/// weight in log form lets integrands with rapidly growing g combine
/// exponents before exponentiating.
template <class G>
double integrate_equilibrium(const QuadratureSpec& spec, int dim, double sigma, G&& g) {
  if (sigma < 1.0) sigma = 1.0;
  const double inv_s2 = 1.0 / (sigma * sigma);
  const double log_sigma_d = dim * std::log(sigma);
  auto log_weight = [&](const Vector& x) {
    return log_sigma_d - 0.5 * x.squaredNorm() * (1.0 - inv_s2);
  };
  Vector x(dim);
  if (spec.rule == QuadratureSpec::Rule::MonteCarlo) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal;
    double acc = 0.0;
    for (std::size_t s = 0; s < spec.samples; ++s) {
      for (int i = 0; i < dim; ++i) x(i) = sigma * normal(rng);
      acc += g(x, log_weight(x));
    }
    return acc / static_cast<double>(spec.samples);
  }
  const GaussHermiteRule& rule = gauss_hermite(spec.order);
  const int n = spec.order;
  std::vector<int> idx(dim, 0);
  double acc = 0.0;
  while (true) {
    double w = 1.0;
    for (int i = 0; i < dim; ++i) {
      x(i) = sigma * rule.nodes[idx[i]];
      w *= rule.weights[idx[i]];
    }
    acc += w * g(x, log_weight(x));
    int axis = 0;
    while (axis < dim && ++idx[axis] == n) idx[axis++] = 0;
    if (axis == dim) break;
  }
  return acc;
}

}  // namespace fpdecay
