#pragma once

#include <vector>

#include <Eigen/Cholesky>

#include "fpdecay/linalg.hpp"

namespace fpdecay {

struct GaussianComponent {
  double weight = 1.0;
  Vector mean;
  Matrix cov;
};

/// Weighted sum of Gaussian densities. Weights are positive and sum to the
/// total mass (1 for probability data).
class GaussianMixture {
 public:
  GaussianMixture() = default;
  explicit GaussianMixture(std::vector<GaussianComponent> components);

  /// N(0, I) in dimension d, the equilibrium of a normalized system.
  static GaussianMixture standard(int d);
  static GaussianMixture single(Vector mean, Matrix cov, double weight = 1.0);

  int dim() const { return dim_; }
  const std::vector<GaussianComponent>& components() const { return components_; }
  double total_mass() const;

  /// Pushforward under x -> A x.
  GaussianMixture linear_map(const Matrix& a) const;

 private:
  std::vector<GaussianComponent> components_;
  int dim_ = 0;
};

/// Evaluates u = f / f_inf and grad u for a mixture against the standard
/// Gaussian, with per-component factorizations cached.
class MixtureRatio {
 public:
  explicit MixtureRatio(const GaussianMixture& mix);

  double value(const Vector& x) const;
  /// Returns u and writes grad u into `grad`.
  double value_and_gradient(const Vector& x, Vector& grad) const;
  /// Returns log u and writes grad log u = grad u / u into `grad_log`.
  /// Safe when u itself would overflow.
  double log_value_and_grad_log(const Vector& x, Vector& grad_log) const;
  /// log f(x)
  double log_density(const Vector& x) const;

 private:
  struct Prepared {
    double log_weight;   // log w - d/2 log(2 pi) - 1/2 log det(cov)
    Vector mean;
    Matrix precision;
  };
  std::vector<Prepared> parts_;
  int dim_;
};

}  // namespace fpdecay
