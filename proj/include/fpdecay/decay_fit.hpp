#pragma once

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fpdecay {

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Estimate {
  double value = 0.0;
  /// 95% confidence half-width: OLS Student-t interval plus the spread of
  /// the estimates on the two halves of the window.
  double ci = 0.0;
  double ols_ci = 0.0;
  double window_spread = 0.0;
};

struct DecayFit {
  /// Fixed-rate fit: log v + 2 mu t = a + b log t, b = poly_order.
  Estimate poly_order;
  /// Free fit: log v = a - r t + b log t, r = rate.
  Estimate rate;
  double free_poly_order = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  int points = 0;
};

/// Minimum number of usable samples in the window.
inline constexpr int kMinFitPoints = 10;

/// Tail regression of a decaying series. The default window is the upper half
/// of the grid restricted to t >= 5/mu. Values below 1e-300 (and non-finite
/// ones) are dropped. Throws InsufficientDataError below kMinFitPoints.
DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& value, double mu,
                   std::optional<std::pair<double, double>> window = std::nullopt);

}  // namespace fpdecay
