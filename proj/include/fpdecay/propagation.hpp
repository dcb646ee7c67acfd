#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fpdecay/linalg.hpp"
#include "fpdecay/mixture.hpp"
#include "fpdecay/system.hpp"

namespace fpdecay {

/// W(t) = 2 int_0^t e^{-Cs} D e^{-C^T s} ds, evaluated in closed form as the
/// solution of C W + W C^T = 2D - e^{-Ct} 2D e^{-C^T t} (Kronecker-sum solve).
Matrix gram_w(const FPSystem& sys, double t);
inline Matrix gram_w(const NormalizedSystem& sys, double t) { return gram_w(sys.base(), t); }

/// K - W(t) = e^{-Ct} K e^{-C^T t}, formed directly so it keeps full relative
/// accuracy once W(t) is within round-off of K.
Matrix gram_w_deficit(const FPSystem& sys, double t);
inline Matrix gram_w_deficit(const NormalizedSystem& sys, double t) {
  return gram_w_deficit(sys.base(), t);
}

/// Each component N(y, S) moves to N(e^{-Ct} y, W(t) + e^{-Ct} S e^{-C^T t});
/// weights are untouched.
GaussianMixture evolve_mixture(const FPSystem& sys, const GaussianMixture& mix, double t);
inline GaussianMixture evolve_mixture(const NormalizedSystem& sys, const GaussianMixture& mix,
                                      double t) {
  return evolve_mixture(sys.base(), mix, t);
}

/// Largest condition number among the component covariances.
double covariance_condition(const GaussianMixture& mix);

class EnvelopeViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EnvelopeFit {
  double c_fit = 0.0;
  std::vector<double> grid;
  std::vector<double> ratios;
  double max_ratio_location = 0.0;
  /// Log-log slope of the ratio over the last 10% of the grid (0 if too few
  /// points to tell).
  double tail_slope = 0.0;
};

/// Tail slope above which a ratio is treated as blowing up.
inline constexpr double kTailSlopeLimit = 0.5;

/// c_fit = max quantity / shape over the grid, with the tail blow-up check
/// used by the two fits below. `what` prefixes error messages.
EnvelopeFit fit_envelope(const std::vector<double>& grid, const std::vector<double>& quantity,
                         const std::vector<double>& shape, const char* what = "fit_envelope");

/// c_fit = max_t |W(t) - I| / ((1 + t^{2n}) e^{-2 mu t}) for a normalized
/// system. Throws EnvelopeViolation if the ratio grows polynomially over the
/// last 10% of the grid (wrong mu or n).
EnvelopeFit fit_w_convergence(const NormalizedSystem& sys, const std::vector<double>& grid);

/// Same with |e^{-Ct}| / ((1 + t^n) e^{-mu t}).
EnvelopeFit fit_drift_decay(const Matrix& c, const std::vector<double>& grid);

struct SdeOptions {
  std::size_t n_paths = 100000;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  unsigned workers = 0;  // 0: hardware concurrency
};

struct SdeMoments {
  double t = 0.0;
  std::size_t n_paths = 0;
  Vector mean;
  Matrix cov;
  Vector mean_stderr;
  /// Standard error of each covariance entry, from the sample variance of
  /// the centred products.
  Matrix cov_stderr;
};

/// Euler-Maruyama paths of dX = -C X dt + sqrt(2D) dW started from samples of
/// `mix`, with moments recorded at each requested time. Paths are split into
/// fixed chunks with derived seeds, so results do not depend on `workers`.
/// Requires n_paths >= 1e4 and dt <= 1e-2 / |C|.
std::vector<SdeMoments> sde_oracle(const FPSystem& sys, const GaussianMixture& mix,
                                   const std::vector<double>& times, const SdeOptions& opt);

/// Moments of a mixture (used to compare against sde_oracle).
void mixture_moments(const GaussianMixture& mix, Vector& mean, Matrix& cov);

}  // namespace fpdecay
