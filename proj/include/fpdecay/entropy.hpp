#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fpdecay/linalg.hpp"
#include "fpdecay/mixture.hpp"
#include "fpdecay/quadrature.hpp"
#include "fpdecay/spectral.hpp"
#include "fpdecay/system.hpp"

namespace fpdecay {

/// Value used for entropies whose defining integral diverges.
inline constexpr double kInfiniteEntropy = std::numeric_limits<double>::infinity();

/// A generator psi of a relative entropy, with four derivatives.
///
/// power(p): psi_p(y) = (y^p - p(y - 1) - 1) / (p(p - 1)), 1 < p <= 2.
/// boltzmann(): psi_1(y) = y log y - y + 1.
class EntropyGenerator {
 public:
  struct Functions {
    std::function<double(double)> psi, d1, d2, d3, d4;
  };

  static EntropyGenerator power(double p);
  static EntropyGenerator boltzmann();
  /// `signed_domain` admits negative arguments.
  static EntropyGenerator custom(std::string name, Functions f, bool signed_domain = false);

  const std::string& name() const { return name_; }
  /// p for the power family, 1 for Boltzmann, 0 for custom generators.
  double p() const { return p_; }
  bool signed_domain() const { return signed_domain_; }

  /// Throw std::domain_error outside the admitted domain.
  double psi(double y) const;
  double d1(double y) const;
  double d2(double y) const;
  double d3(double y) const;
  double d4(double y) const;

  /// psi(u) * w with u = e^{log_u}, w = e^{log_w}, combining exponents so
  /// large u against small w does not overflow.
  double psi_weighted(double log_u, double log_w) const;
  /// psi''(u) u^2 w, same conventions.
  double psi2_u2_weighted(double log_u, double log_w) const;

 private:
  enum class Kind { Power, Boltzmann, Custom };
  void check_domain(double y) const;

  Kind kind_ = Kind::Power;
  double p_ = 2.0;
  std::string name_;
  bool signed_domain_ = false;
  Functions f_;
};

struct Admissibility {
  bool admissible = false;
  /// min over the grid of (psi'' psi''''/2 - psi'''^2) / scale; negative
  /// means the inequality failed somewhere.
  double worst_margin = 0.0;
  double worst_at = 0.0;
};

/// psi(1) = psi'(1) = 0, psi'' > 0 and (psi''')^2 <= psi'' psi''''/2 on the grid
/// (relative slack 1e-12).
Admissibility check_admissible(const EntropyGenerator& gen, const std::vector<double>& grid);

/// n log-spaced points on [lo, hi] with 1 inserted.
std::vector<double> log_grid(double lo = 1e-8, double hi = 1e8, int n = 2001);

/// e_2 = 1/2 int (f - f_inf)^2 / f_inf for a mixture in normalized
/// coordinates (f_inf = N(0, I)), in closed form. Returns kInfiniteEntropy
/// when some S_i^{-1} + S_j^{-1} - I is not positive definite.
double e2_mixture(const GaussianMixture& mix);

/// int psi(f / f_inf) f_inf by quadrature. Returns kInfiniteEntropy for a
/// power generator when some p S_i^{-1} - (p - 1) I is not positive definite.
double ep_quadrature(const GaussianMixture& mix, const EntropyGenerator& gen,
                     const QuadratureSpec& quad);
/// Throws std::domain_error if u < 0 at a node and the generator needs u >= 0.
double ep_quadrature(const HermiteState& state, const EntropyGenerator& gen,
                     const QuadratureSpec& quad);

/// int psi''(u) grad u^T P grad u f_inf, u = f / f_inf.
double fisher_info(const GaussianMixture& mix, const EntropyGenerator& gen, const Matrix& p,
                   const QuadratureSpec& quad);
double fisher_info(const HermiteState& state, const EntropyGenerator& gen, const Matrix& p,
                   const QuadratureSpec& quad);

struct DissipationCheck {
  double lhs = 0.0;  // centred difference of e_psi at t
  double rhs = 0.0;  // -I_psi^{C_s}(f(t))
  double gap = 0.0;
};

/// Compares d/dt e_psi(f(t)) with -I_psi^{D}(f(t)) for a normalized system.
/// Requires t >= dt > 0.
DissipationCheck dissipation_check(const NormalizedSystem& sys, const GaussianMixture& f0,
                                   const EntropyGenerator& gen, double t, double dt,
                                   const QuadratureSpec& quad);
DissipationCheck dissipation_check(const NormalizedSystem& sys, const HermiteState& f0,
                                   const EntropyGenerator& gen, double t, double dt,
                                   const QuadratureSpec& quad);

/// g(y) = psi_{p1}(y) / psi_{p2}(y), with g(1) = 1.
double dominance_ratio(double p1, double p2, double y);

/// sup_{y >= 0} g(y) over log_grid() plus the limits g(0) = p2/p1, g(inf) = 0.
double dominance_constant(double p1, double p2);

/// 2 psi''(1): e_psi <= 2 psi''(1) e_2.
double psi_vs_e2_bound(const EntropyGenerator& gen);

}  // namespace fpdecay
