#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "fpdecay/entropy.hpp"
#include "fpdecay/mixture.hpp"
#include "fpdecay/propagation.hpp"
#include "fpdecay/quadrature.hpp"
#include "fpdecay/system.hpp"

namespace fpdecay {

/// int e^{eps |x|^2} f_0(x) dx for a mixture; +inf unless 2 eps S_i < I for
/// every component.
double weighted_mass(const GaussianMixture& mix, double eps);

struct HyperParams {
  double mu = 1.0;
  int n = 0;
  double c = 1.0;   // |W(t) - K| <= c (1 + t^{2n}) e^{-2 mu t}
  double c2 = 1.0;  // |e^{-Ct}| <= c2 (1 + t^n) e^{-mu t}
  double alpha = 0.5;

  /// Throws std::invalid_argument unless 0 < alpha < mu and c, c2 >= 1.
  void check() const;
};

/// 1 + (n / (alpha e))^{2n}; equal to 1 when n = 0.
double polynomial_factor(int n, double alpha);

/// t_1(eps) = log(c (1 + eps) F / eps) / (2 (mu - alpha)), F = polynomial_factor(n, alpha).
double waiting_time_t1(double eps, const HyperParams& params);
/// t_2(eps1) = log(c2^2 (1 - eps1) F / ((q (1 - eps1) - 1) eps1)) / (2 (mu - alpha)).
/// Requires q (1 - eps1) > 1.
double waiting_time_t2(double q, double eps1, const HyperParams& params);
/// max(t_1(eps1), t_2(eps1)) with eps1 = min(eps, (q - 1) / (2q)).
double waiting_time_t0(double q, double eps, const HyperParams& params);
/// (1/mu) log(max(c (3q - 1), 2 c2^2 (q + 1)/(q - 1)) (1 + (2n/(mu e))^{2n}) / (q - 1)).
double waiting_time_t0bar(double q, const HyperParams& params);
/// (1/mu) log(max(c (5p - 1), 2 c2^2 (3p^2 + p)/(p + 1)) (1 + (2n/(mu e))^{2n}) / (p - 1)).
double waiting_time_T0(double p, const HyperParams& params);

/// (q / (pi (q + 1)))^{qd/2} (8 pi^2 / (q - 1))^{d/2} mass^q.
double hyper_rhs(double q, int d, double mass);
/// (8 sqrt(2) / (3 2^{1/p}))^d.
double entropic_hyper_prefactor(double p, int d);
/// 1/2 (prefactor (p (p - 1) ep0 + 1)^{2/p} - 1).
double entropic_hyper_rhs(double p, int d, double ep0);
/// Same bound for a generator with psi_p <= c_psi psi: ep0 is replaced by
/// c_psi * e_psi0.
double generalized_e2_bound(double p, int d, double c_psi, double e_psi0);

/// mu and n from C; c and c2 from envelope fits on [0, t_fit] (floored at 1);
/// alpha = mu / 2.
HyperParams fit_hyper_params(const NormalizedSystem& sys, double t_fit = 20.0,
                             int grid_points = 2001);

class HyperPreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct HyperRow {
  double t = 0.0;
  double e2 = 0.0;
  bool checked = false;  // t >= T_0
  bool holds = true;     // e2 <= bound (only meaningful when checked)
};

struct HyperReport {
  double p = 0.0;
  int dim = 0;
  HyperParams params;
  double weighted_mass = 0.0;
  double ep0 = 0.0;
  double e2_0 = 0.0;
  double T0 = 0.0;
  double bound = 0.0;
  std::optional<double> first_finite_e2;
  bool e2_monotone_once_finite = true;
  std::vector<HyperRow> rows;
  int checked_rows = 0;
  bool overall = false;
};

/// End-to-end check: after T_0(p), e_2(f(t)) <= entropic_hyper_rhs(p, d, e_p(f_0))
/// for every grid time. `mix` is in normalized coordinates. Throws
/// HyperPreconditionError when the weighted mass at eps = (p - 1)/(4p) or
/// e_p(f_0) is infinite.
HyperReport verify_hypercontractivity(const NormalizedSystem& sys, const GaussianMixture& mix,
                                      double p, const std::vector<double>& t_grid,
                                      const QuadratureSpec& quad,
                                      std::optional<HyperParams> params = std::nullopt);

}  // namespace fpdecay
