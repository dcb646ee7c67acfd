#include "fpdecay/system.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace fpdecay {

ConditionReport validate(const Matrix& d, const Matrix& c) {
  require_square(d, "validate(D)");
  require_square(c, "validate(C)");
  if (d.rows() != c.rows()) throw DimensionError("validate: D and C differ in size");
  require_finite(d, "validate(D)");
  require_finite(c, "validate(C)");

  ConditionReport r;
  r.dim = static_cast<int>(d.rows());

  const PsdCheck psd = psd_check(d);
  r.diffusion_rank = psd.rank;
  r.condition_a = psd.is_symmetric_psd && psd.rank >= 1;

  const EigenStructure es = eigen_structure(c);
  r.spectrum = es.multiset();
  try {
    const SpectralGap gap = mu_and_defect(c);
    r.condition_b = true;
    r.mu = gap.mu;
    r.defect = gap.n;
  } catch (const std::domain_error&) {
    r.condition_b = false;
    r.mu = std::numeric_limits<double>::quiet_NaN();
  }

  if (psd.is_symmetric_psd) {
    const KalmanResult k = kalman_kappa(psd_sqrt(2.0 * d), -c);
    r.kappa = k.kappa;
    r.kalman_ranks = k.ranks;
    r.condition_c = k.kappa.has_value();
  }
  r.overall = r.condition_a && r.condition_b && r.condition_c;
  return r;
}

FPSystem FPSystem::create(Matrix d, Matrix c) {
  ConditionReport report = validate(d, c);
  if (!report.overall) {
    std::string what = "system violates";
    if (!report.condition_a) what += " condition A (D symmetric PSD, rank >= 1);";
    if (!report.condition_b) what += " condition B (C positively stable);";
    if (!report.condition_c) what += " condition C (hypoellipticity rank condition);";
    throw ValidationError(what, std::move(report));
  }
  return FPSystem(std::move(d), std::move(c), std::move(report));
}

double Equilibrium::density(const Vector& x) const {
  const Eigen::LLT<Matrix> llt(covariance);
  const double q = x.dot(llt.solve(x));
  return normalization * std::exp(-0.5 * q);
}

Equilibrium equilibrium(const FPSystem& sys) {
  Equilibrium eq;
  eq.covariance = solve_lyapunov(sys.drift(), sys.diffusion());
  const double det = eq.covariance.determinant();
  if (!(det > 0.0)) throw NumericalError("equilibrium: covariance is not positive definite");
  eq.normalization = std::pow(2.0 * std::numbers::pi, -0.5 * sys.dim()) / std::sqrt(det);
  return eq;
}

Matrix NormalizedSystem::symmetric_drift() const {
  return 0.5 * (drift() + drift().transpose());
}

namespace {

// Symmetric inverse square root and square root of an SPD matrix.
std::pair<Matrix, Matrix> spd_roots(const Matrix& k) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (k + k.transpose()));
  const Vector& ev = es.eigenvalues();
  if (!(ev.minCoeff() > 0.0)) throw NumericalError("normalize: covariance not positive definite");
  const Matrix& v = es.eigenvectors();
  Matrix root = v * ev.cwiseSqrt().asDiagonal() * v.transpose();
  Matrix inv_root = v * ev.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
  return {0.5 * (inv_root + inv_root.transpose()), 0.5 * (root + root.transpose())};
}

}  // namespace

NormalizedSystem normalize(const FPSystem& sys) {
  const int d = sys.dim();
  const Equilibrium eq = equilibrium(sys);
  const auto [k_inv_half, k_half] = spd_roots(eq.covariance);

  const Matrix dt = k_inv_half * sys.diffusion() * k_inv_half;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (dt + dt.transpose()));
  const Vector& ev = es.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);

  // Order: positive entries first in descending magnitude, zeros last. The
  // sign of each eigenvector is fixed so its largest component is positive.
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return ev(a) > ev(b); });
  Matrix u(d, d);  // rows are eigenvectors
  Vector diag(d);
  for (int i = 0; i < d; ++i) {
    Vector v = es.eigenvectors().col(order[i]);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    u.row(i) = v.transpose();
    diag(i) = ev(order[i]) > kRankTolerance * scale ? ev(order[i]) : 0.0;
  }

  const Matrix a = u * k_inv_half;
  const Matrix a_inv = k_half * u.transpose();
  const Matrix c_new = a * sys.drift() * a_inv;
  Matrix d_new = diag.asDiagonal();

  return NormalizedSystem(FPSystem::create(std::move(d_new), c_new), a, a_inv);
}

NormalizedSystem adjoint_system(const NormalizedSystem& sys) {
  return NormalizedSystem(FPSystem::create(sys.diffusion(), sys.drift().transpose()),
                          sys.transform(), sys.inverse_transform());
}

}  // namespace fpdecay
