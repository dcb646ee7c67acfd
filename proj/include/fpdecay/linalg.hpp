#pragma once

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fpdecay {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;

/// Raised when matrix shapes do not fit the operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a linear problem has no unique solution (singular operator,
/// unstable drift for a Lyapunov equation, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Relative singular-value threshold for rank and nullity decisions.
inline constexpr double kRankTolerance = 1e-8;
/// Base absolute tolerance for clustering eigenvalues.
inline constexpr double kClusterTolerance = 1e-7;

void require_square(const Matrix& m, const char* what);
void require_finite(const Matrix& m, const char* what);

/// Largest singular value.
double spectral_norm(const Matrix& m);

/// Number of singular values above rel_tol * largest singular value.
int numerical_rank(const Matrix& m, double rel_tol = kRankTolerance);

struct PsdCheck {
  bool is_symmetric_psd = false;
  int rank = 0;
};

/// Symmetry and semidefiniteness of a square matrix. Both the symmetry
/// defect and the most negative eigenvalue are compared against
/// tol * max|eigenvalue|.
PsdCheck psd_check(const Matrix& m, double tol = kRankTolerance);

/// Symmetric PSD square root; eigenvalues below tol * max are clamped to 0.
Matrix psd_sqrt(const Matrix& m, double tol = kRankTolerance);

/// e^{M t} by Pade scaling and squaring.
Matrix matrix_exp(const Matrix& m, double t);

/// Solves C K + K C^T = 2 D (Bartels-Stewart on the complex Schur form of C).
/// Throws NumericalError if C is not positively stable.
Matrix solve_lyapunov(const Matrix& c, const Matrix& d);

/// Solves C X + X C^T = rhs through the d^2 x d^2 Kronecker-sum system.
Matrix kron_sum_solve(const Matrix& c, const Matrix& rhs);

/// C (+) C = C (x) I + I (x) C, acting on column-major vec().
Matrix kron_sum(const Matrix& c);

struct EigenCluster {
  Complex value;        // cluster mean
  int algebraic = 0;
  int geometric = 0;
  int defect() const { return algebraic - geometric; }
};

struct EigenStructure {
  std::vector<EigenCluster> clusters;
  /// Tolerance the clustering settled on (>= the requested one).
  double cluster_tolerance = kClusterTolerance;
  /// Set when clusters could not be separated cleanly.
  bool ill_conditioned = false;
  std::string warning;

  int dimension() const;
  int max_defect() const;
  /// Eigenvalues repeated by algebraic multiplicity, using cluster means.
  std::vector<Complex> multiset() const;
};

/// Eigenvalues grouped into clusters with algebraic, geometric multiplicity
/// and defect.
///
/// Computed eigenvalues of a Jordan block of size k scatter by roughly
/// (u |M|)^{1/k}, so a fixed absolute tolerance cannot merge them. Clustering
/// is tried at tol, 10 tol, ... up to 1e-2; a merged group of k values is
/// accepted as one eigenvalue when (M - mean I)^k has a k-dimensional kernel.
/// The coarsest accepted partition wins. Cluster means are the eigenvalue
/// estimates. Geometric multiplicity is the nullity of (M - mean I) with
/// threshold kRankTolerance. Clusters closer than ten tolerances set
/// `ill_conditioned`.
EigenStructure eigen_structure(const Matrix& m, double tol = kClusterTolerance);

struct SpectralGap {
  double mu = 0.0;  // min Re(lambda)
  int n = 0;        // max defect among eigenvalues with Re(lambda) = mu
};

/// Throws std::domain_error when C is not positively stable.
SpectralGap mu_and_defect(const Matrix& c, double tol = kClusterTolerance);

struct KalmanResult {
  std::optional<int> kappa;
  std::vector<int> ranks;  // rank after appending B^j Qhalf, j = 0..d-1
};

/// Smallest kappa with rank[Qh, B Qh, ..., B^kappa Qh] = d.
KalmanResult kalman_kappa(const Matrix& q_half, const Matrix& b);

}  // namespace fpdecay
