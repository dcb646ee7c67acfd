#pragma once

#include <compare>
#include <vector>

#include "fpdecay/linalg.hpp"
#include "fpdecay/mixture.hpp"
#include "fpdecay/quadrature.hpp"

namespace fpdecay {

struct MultiIndex {
  std::vector<int> alpha;

  int order() const;
  /// alpha! = prod alpha_i!
  double factorial() const;
  auto operator<=>(const MultiIndex&) const = default;
};

/// dim(V_m) = C(m + d - 1, d - 1).
std::size_t level_dimension(int dim, int level);

/// All alpha with |alpha| = level, graded lexicographic (descending in
/// alpha_1, then alpha_2, ...): (2,0), (1,1), (0,2) for d = 2, m = 2.
std::vector<MultiIndex> multi_indices(int dim, int level);

/// Position of alpha inside multi_indices(dim, |alpha|).
std::size_t multi_index_position(const MultiIndex& alpha);

/// Matrix of L restricted to V_m in the orthonormal basis
/// h_alpha = He_alpha f_inf / sqrt(alpha!), row convention
/// L h_alpha = sum_beta Lm(alpha, beta) h_beta. Coefficients then obey
/// a' = Lm^T a.
struct SubspaceRep {
  int level = 0;
  std::vector<MultiIndex> basis;
  Matrix lm;
};

/// Requires a normalized drift (K = I). Level 0 gives the 1x1 zero matrix.
SubspaceRep vm_matrix(const Matrix& c, int level);

/// {-sum_i alpha_i lambda_i : |alpha| = m} over the eigenvalues of C.
std::vector<Complex> vm_spectrum_reference(const Matrix& c, int level);

struct SubspaceDecay {
  double rate = 0.0;  // 2 k mu
  int n_k = 0;        // max defect of eigenvalues of [L]_k with Re = -k mu
};

SubspaceDecay subspace_decay_exponent(const Matrix& c, int level);

/// Coefficients on the orthonormal basis of V_0 (+) ... (+) V_{max_level}.
/// The level-0 coefficient is the mass. The represented density is
/// f = f_inf (mass + sum_{|alpha|>=1} a_alpha He_alpha / sqrt(alpha!)).
class HermiteState {
 public:
  HermiteState(int dim, int max_level, double mass = 1.0);

  int dim() const { return dim_; }
  int max_level() const { return max_level_; }
  double mass() const { return levels_[0](0); }

  double coefficient(const MultiIndex& alpha) const;
  void set_coefficient(const MultiIndex& alpha, double value);

  const Vector& level(int m) const { return levels_.at(m); }
  Vector& level(int m) { return levels_.at(m); }

  /// Lowest level >= 1 carrying a non-zero coefficient, or 0 if none.
  int lowest_active_level() const;

  /// 1/2 sum_{|alpha|>=1} a_alpha^2.
  double e2() const;

  /// u = f / f_inf at x.
  double ratio(const Vector& x) const;
  /// u and grad u at x.
  double ratio_and_gradient(const Vector& x, Vector& grad) const;

 private:
  int dim_;
  int max_level_;
  std::vector<Vector> levels_;
  std::vector<std::vector<MultiIndex>> indices_;
};

/// Per level, a^{(m)}(t) = exp(Lm^T t) a^{(m)}(0); the mass is unchanged.
HermiteState evolve_hermite(const HermiteState& state, const Matrix& c, double t);

struct Projection {
  HermiteState state;
  /// Sum of squared coefficients on the top level, used as a truncation proxy.
  double top_shell_mass = 0.0;
};

/// a_alpha = E_f[He_alpha(X)] / sqrt(alpha!) by tensor Gauss-Hermite
/// quadrature against f_inf. Throws std::invalid_argument when
/// quad.order < max_level + 1.
Projection project_gaussian(const GaussianMixture& mix, int max_level,
                            const QuadratureSpec& quad);

/// Membership in the resolvent region
///   Re z <= (1 - Tr B)/2  and  |Re z - z0| <= c |z - z0|^{1/(2 kappa + 1)},
/// z0 = 1 - Tr(B)/2.
bool gamma_kappa_contains(const Matrix& b, int kappa, double c, Complex z);

/// c (1 + t^{2n}) e^{-2 mu t}; for n = 0 the polynomial factor is dropped and
/// the envelope is c e^{-2 mu t}.
double decay_envelope(double mu, int n, double c, double t);

}  // namespace fpdecay
