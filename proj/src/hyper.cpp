#include "fpdecay/hyper.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace fpdecay {

double weighted_mass(const GaussianMixture& mix, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("weighted_mass: need eps > 0");
  const int d = mix.dim();
  const Matrix id = Matrix::Identity(d, d);
  double total = 0.0;
  for (const auto& c : mix.components()) {
    // int e^{eps|x|^2} N(m, S) = |S|^{-1/2} |A|^{-1/2} exp(b^T A^{-1} b / 2 - m^T S^{-1} m / 2),
    // A = S^{-1} - 2 eps I, b = S^{-1} m
    Eigen::LLT<Matrix> ls(c.cov);
    const Matrix prec = ls.solve(id);
    const Matrix a = prec - 2.0 * eps * id;
    Eigen::LLT<Matrix> la(0.5 * (a + a.transpose()));
    if (la.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const Matrix l = la.matrixL();
    if ((l.diagonal().array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
    const double logdet_s = 2.0 * Matrix(ls.matrixL()).diagonal().array().log().sum();
    const double logdet_a = 2.0 * l.diagonal().array().log().sum();
    const Vector b = prec * c.mean;
    const double e =
        -0.5 * (logdet_s + logdet_a) + 0.5 * b.dot(la.solve(b)) - 0.5 * c.mean.dot(b);
    total += c.weight * std::exp(e);
  }
  return total;
}

void HyperParams::check() const {
  if (!(mu > 0.0) || n < 0) throw std::invalid_argument("HyperParams: need mu > 0, n >= 0");
  if (!(alpha > 0.0 && alpha < mu)) throw std::invalid_argument("HyperParams: need 0 < alpha < mu");
  if (!(c >= 1.0 && c2 >= 1.0)) throw std::invalid_argument("HyperParams: need c, c2 >= 1");
}

double polynomial_factor(int n, double alpha) {
  if (n == 0) return 1.0;
  return 1.0 + std::pow(n / (alpha * std::numbers::e), 2 * n);
}

double waiting_time_t1(double eps, const HyperParams& pr) {
  pr.check();
  if (!(eps > 0.0)) throw std::invalid_argument("waiting_time_t1: need eps > 0");
  return std::log(pr.c * (1.0 + eps) * polynomial_factor(pr.n, pr.alpha) / eps) /
         (2.0 * (pr.mu - pr.alpha));
}

double waiting_time_t2(double q, double eps1, const HyperParams& pr) {
  pr.check();
  if (!(eps1 > 0.0 && eps1 < 1.0) || !(q * (1.0 - eps1) > 1.0)) {
    throw std::invalid_argument("waiting_time_t2: need 0 < eps1 < 1 and q (1 - eps1) > 1");
  }
  const double num = pr.c2 * pr.c2 * (1.0 - eps1) * polynomial_factor(pr.n, pr.alpha);
  const double den = (q * (1.0 - eps1) - 1.0) * eps1;
  return std::log(num / den) / (2.0 * (pr.mu - pr.alpha));
}

double waiting_time_t0(double q, double eps, const HyperParams& pr) {
  if (!(q > 1.0)) throw std::invalid_argument("waiting_time_t0: need q > 1");
  const double eps1 = std::min(eps, (q - 1.0) / (2.0 * q));
  return std::max(waiting_time_t1(eps1, pr), waiting_time_t2(q, eps1, pr));
}

namespace {

double half_alpha_factor(int n, double mu) {
  if (n == 0) return 1.0;
  return 1.0 + std::pow(2.0 * n / (mu * std::numbers::e), 2 * n);
}

}  // namespace

double waiting_time_t0bar(double q, const HyperParams& pr) {
  pr.check();
  if (!(q > 1.0)) throw std::invalid_argument("waiting_time_t0bar: need q > 1");
  const double m = std::max(pr.c * (3.0 * q - 1.0), 2.0 * pr.c2 * pr.c2 * (q + 1.0) / (q - 1.0));
  return std::log(m * half_alpha_factor(pr.n, pr.mu) / (q - 1.0)) / pr.mu;
}

double waiting_time_T0(double p, const HyperParams& pr) {
  pr.check();
  if (!(p > 1.0 && p < 2.0)) throw std::invalid_argument("waiting_time_T0: need 1 < p < 2");
  const double m = std::max(pr.c * (5.0 * p - 1.0),
                            2.0 * pr.c2 * pr.c2 * (3.0 * p * p + p) / (p + 1.0));
  return std::log(m * half_alpha_factor(pr.n, pr.mu) / (p - 1.0)) / pr.mu;
}

double hyper_rhs(double q, int d, double mass) {
  if (!(q > 1.0) || d < 0 || !std::isfinite(mass)) {
    throw std::invalid_argument("hyper_rhs: need q > 1, d >= 0, finite mass");
  }
  const double pi = std::numbers::pi;
  return std::pow(q / (pi * (q + 1.0)), q * d / 2.0) *
         std::pow(8.0 * pi * pi / (q - 1.0), d / 2.0) * std::pow(mass, q);
}

double entropic_hyper_prefactor(double p, int d) {
  if (!(p > 1.0 && p <= 2.0) || d < 0) {
    throw std::invalid_argument("entropic_hyper_prefactor: need 1 < p <= 2, d >= 0");
  }
  return std::pow(8.0 * std::numbers::sqrt2 / (3.0 * std::pow(2.0, 1.0 / p)), d);
}

double entropic_hyper_rhs(double p, int d, double ep0) {
  if (!(ep0 >= 0.0)) throw std::invalid_argument("entropic_hyper_rhs: need ep0 >= 0");
  return 0.5 * (entropic_hyper_prefactor(p, d) * std::pow(p * (p - 1.0) * ep0 + 1.0, 2.0 / p) -
                1.0);
}

double generalized_e2_bound(double p, int d, double c_psi, double e_psi0) {
  if (!(c_psi > 0.0)) throw std::invalid_argument("generalized_e2_bound: need c_psi > 0");
  return entropic_hyper_rhs(p, d, c_psi * e_psi0);
}

HyperParams fit_hyper_params(const NormalizedSystem& sys, double t_fit, int grid_points) {
  const SpectralGap gap = mu_and_defect(sys.drift());
  std::vector<double> grid(grid_points);
  for (int i = 0; i < grid_points; ++i) grid[i] = t_fit * i / (grid_points - 1);
  HyperParams pr;
  pr.mu = gap.mu;
  pr.n = gap.n;
  pr.alpha = gap.mu / 2.0;
  pr.c = std::max(1.0, fit_w_convergence(sys, grid).c_fit);
  pr.c2 = std::max(1.0, fit_drift_decay(sys.drift(), grid).c_fit);
  return pr;
}

HyperReport verify_hypercontractivity(const NormalizedSystem& sys, const GaussianMixture& mix,
                                      double p, const std::vector<double>& t_grid,
                                      const QuadratureSpec& quad,
                                      std::optional<HyperParams> params) {
  if (!(p > 1.0 && p < 2.0)) throw std::invalid_argument("verify_hypercontractivity: need 1 < p < 2");
  if (mix.dim() != sys.dim()) throw DimensionError("verify_hypercontractivity: dimension mismatch");
  HyperReport rep;
  rep.p = p;
  rep.dim = sys.dim();
  rep.params = params ? *params : fit_hyper_params(sys);
  rep.params.check();

  const double eps = (p - 1.0) / (4.0 * p);
  rep.weighted_mass = weighted_mass(mix, eps);
  if (!std::isfinite(rep.weighted_mass)) {
    std::ostringstream os;
    os << "verify_hypercontractivity: weighted mass at eps = " << eps << " is infinite";
    throw HyperPreconditionError(os.str());
  }
  rep.ep0 = ep_quadrature(mix, EntropyGenerator::power(p), quad);
  if (!std::isfinite(rep.ep0)) {
    throw HyperPreconditionError("verify_hypercontractivity: e_p(f_0) is infinite");
  }
  rep.e2_0 = e2_mixture(mix);
  rep.T0 = waiting_time_T0(p, rep.params);
  rep.bound = entropic_hyper_rhs(p, rep.dim, rep.ep0);

  bool all_hold = true;
  double last_finite = kInfiniteEntropy;
  for (double t : t_grid) {
    HyperRow row;
    row.t = t;
    row.e2 = e2_mixture(evolve_mixture(sys, mix, t));
    if (std::isfinite(row.e2)) {
      if (!rep.first_finite_e2) rep.first_finite_e2 = t;
      if (std::isfinite(last_finite) && row.e2 > last_finite + 1e-12) {
        rep.e2_monotone_once_finite = false;
      }
      last_finite = row.e2;
    } else if (rep.first_finite_e2) {
      rep.e2_monotone_once_finite = false;  // finiteness must be absorbing
    }
    if (t >= rep.T0) {
      row.checked = true;
      row.holds = row.e2 <= rep.bound;
      all_hold = all_hold && row.holds;
      ++rep.checked_rows;
    }
    rep.rows.push_back(row);
  }
  rep.overall = all_hold && rep.checked_rows > 0 && rep.e2_monotone_once_finite;
  return rep;
}

}  // namespace fpdecay
