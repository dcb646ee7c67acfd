#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "fpdecay/linalg.hpp"

namespace fpdecay {

/// Outcome of checking conditions (A)-(C) for a pair (D, C).
///
/// (A) D symmetric positive semidefinite with 1 <= rank D.
/// (B) every eigenvalue of C has positive real part.
/// (C) Ker D contains no non-trivial C^T-invariant subspace, decided by the
///     Kalman rank condition on [Q^{1/2}, B Q^{1/2}, ...] with Q = 2D, B = -C.
struct ConditionReport {
  int dim = 0;
  bool condition_a = false;
  int diffusion_rank = 0;
  bool condition_b = false;
  std::vector<Complex> spectrum;
  double mu = 0.0;
  int defect = 0;
  bool condition_c = false;
  std::optional<int> kappa;
  std::vector<int> kalman_ranks;
  bool overall = false;
};

class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& what, ConditionReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const ConditionReport& report() const { return report_; }

 private:
  ConditionReport report_;
};

ConditionReport validate(const Matrix& d, const Matrix& c);

/// A validated linear Fokker-Planck system d/dt f = div(D grad f + C x f).
class FPSystem {
 public:
  /// Validates and throws ValidationError when any condition fails.
  static FPSystem create(Matrix d, Matrix c);

  const Matrix& diffusion() const { return d_; }
  const Matrix& drift() const { return c_; }
  int dim() const { return static_cast<int>(d_.rows()); }
  int diffusion_rank() const { return report_.diffusion_rank; }
  const ConditionReport& certificate() const { return report_; }

 private:
  FPSystem(Matrix d, Matrix c, ConditionReport report)
      : d_(std::move(d)), c_(std::move(c)), report_(std::move(report)) {}

  Matrix d_;
  Matrix c_;
  ConditionReport report_;
};

/// Gaussian steady state c_K exp(-x^T K^{-1} x / 2).
struct Equilibrium {
  Matrix covariance;
  double normalization = 0.0;

  double density(const Vector& x) const;
};

Equilibrium equilibrium(const FPSystem& sys);

/// A system in coordinates where K = I, D is diagonal with its positive
/// entries first (descending) and D equals the symmetric part of C.
///
/// `transform` maps original coordinates to normalized ones: x' = A x.
class NormalizedSystem {
 public:
  const FPSystem& base() const { return base_; }
  const Matrix& diffusion() const { return base_.diffusion(); }
  const Matrix& drift() const { return base_.drift(); }
  int dim() const { return base_.dim(); }
  const Matrix& transform() const { return a_; }
  const Matrix& inverse_transform() const { return a_inv_; }
  /// (C + C^T) / 2, equal to D up to round-off.
  Matrix symmetric_drift() const;

 private:
  friend NormalizedSystem normalize(const FPSystem&);
  friend NormalizedSystem adjoint_system(const NormalizedSystem&);
  NormalizedSystem(FPSystem base, Matrix a, Matrix a_inv)
      : base_(std::move(base)), a_(std::move(a)), a_inv_(std::move(a_inv)) {}

  FPSystem base_;
  Matrix a_;
  Matrix a_inv_;
};

/// A = U K^{-1/2}, U orthogonal diagonalizing K^{-1/2} D K^{-1/2};
/// D' = A D A^T, C' = A C A^{-1}.
NormalizedSystem normalize(const FPSystem& sys);

/// Same diffusion, drift C^T. The L^2(f_inf^{-1}) adjoint of L_{D,C}.
NormalizedSystem adjoint_system(const NormalizedSystem& sys);

}  // namespace fpdecay
