#include "fpdecay/quadrature.hpp"

#include <map>
#include <memory>
#include <mutex>

#include <Eigen/Eigenvalues>

namespace fpdecay {

QuadratureSpec QuadratureSpec::defaults(int dim) {
  QuadratureSpec q;
  if (dim <= 2) {
    q.order = 60;
  } else if (dim == 3) {
    q.order = 30;
  } else {
    q.rule = Rule::MonteCarlo;
  }
  return q;
}

void normalized_hermite(double x, int max_degree, double* out) {
  out[0] = 1.0;
  if (max_degree >= 1) out[1] = x;
  for (int j = 1; j < max_degree; ++j) {
    out[j + 1] = (x * out[j] - std::sqrt(static_cast<double>(j)) * out[j - 1]) /
                 std::sqrt(static_cast<double>(j + 1));
  }
}

namespace {

GaussHermiteRule build_rule(int n) {
  // Jacobi matrix of the probabilists' Hermite recurrence.
  Matrix jac = Matrix::Zero(n, n);
  for (int k = 1; k < n; ++k) jac(k, k - 1) = jac(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Matrix> es(jac, Eigen::EigenvaluesOnly);

  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  std::vector<double> h(n + 1);
  for (int k = 0; k < n; ++k) {
    double x = es.eigenvalues()(k);
    for (int it = 0; it < 8; ++it) {
      normalized_hermite(x, n, h.data());
      // h_n'(x) = sqrt(n) h_{n-1}(x)
      const double step = h[n] / (std::sqrt(static_cast<double>(n)) * h[n - 1]);
      x -= step;
      if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    normalized_hermite(x, n, h.data());
    rule.nodes[k] = x;
    rule.weights[k] = 1.0 / (n * h[n - 1] * h[n - 1]);
  }
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w /= total;
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite(int order) {
  if (order < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GaussHermiteRule>(build_rule(order));
  return *slot;
}

}  // namespace fpdecay
