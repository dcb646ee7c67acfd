#include "fpdecay/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fpdecay/propagation.hpp"

namespace fpdecay {

namespace {

// psi_p(1 + delta) for p in [1, 2]; p = 1 is the Boltzmann limit.
double psi_power_near_one(double p, double dl) {
  const double a3 = (p - 2.0) / 6.0;
  const double a4 = (p - 2.0) * (p - 3.0) / 24.0;
  const double a5 = (p - 2.0) * (p - 3.0) * (p - 4.0) / 120.0;
  return dl * dl * (0.5 + dl * (a3 + dl * (a4 + dl * a5)));
}

double psi_power(double p, double y) {
  const double dl = y - 1.0;
  if (p == 2.0) return 0.5 * dl * dl;
  if (std::abs(dl) < 1e-3) return psi_power_near_one(p, dl);
  return (std::expm1(p * std::log(y)) - p * dl) / (p * (p - 1.0));
}

double psi_boltzmann(double y) {
  const double dl = y - 1.0;
  if (std::abs(dl) < 1e-3) return psi_power_near_one(1.0, dl);
  if (y == 0.0) return 1.0;
  return y * std::log(y) - y + 1.0;
}

}  // namespace

EntropyGenerator EntropyGenerator::power(double p) {
  if (!(p > 1.0 && p <= 2.0)) throw std::invalid_argument("EntropyGenerator::power: need 1 < p <= 2");
  EntropyGenerator g;
  g.kind_ = Kind::Power;
  g.p_ = p;
  std::ostringstream os;
  os << "psi_" << p;
  g.name_ = os.str();
  g.signed_domain_ = (p == 2.0);
  return g;
}

EntropyGenerator EntropyGenerator::boltzmann() {
  EntropyGenerator g;
  g.kind_ = Kind::Boltzmann;
  g.p_ = 1.0;
  g.name_ = "psi_1";
  return g;
}

EntropyGenerator EntropyGenerator::custom(std::string name, Functions f, bool signed_domain) {
  if (!f.psi || !f.d1 || !f.d2 || !f.d3 || !f.d4) {
    throw std::invalid_argument("EntropyGenerator::custom: all five functions are required");
  }
  EntropyGenerator g;
  g.kind_ = Kind::Custom;
  g.p_ = 0.0;
  g.name_ = std::move(name);
  g.signed_domain_ = signed_domain;
  g.f_ = std::move(f);
  return g;
}

void EntropyGenerator::check_domain(double y) const {
  if (std::isnan(y) || (y < 0.0 && !signed_domain_)) {
    std::ostringstream os;
    os << name_ << ": argument " << y << " outside [0, inf)";
    throw std::domain_error(os.str());
  }
}

double EntropyGenerator::psi(double y) const {
  check_domain(y);
  switch (kind_) {
    case Kind::Power: return psi_power(p_, y);
    case Kind::Boltzmann: return psi_boltzmann(y);
    default: return f_.psi(y);
  }
}

double EntropyGenerator::d1(double y) const {
  check_domain(y);
  switch (kind_) {
    case Kind::Power:
      return p_ == 2.0 ? y - 1.0 : std::expm1((p_ - 1.0) * std::log(y)) / (p_ - 1.0);
    case Kind::Boltzmann: return std::log(y);
    default: return f_.d1(y);
  }
}

double EntropyGenerator::d2(double y) const {
  check_domain(y);
  switch (kind_) {
    case Kind::Power: return p_ == 2.0 ? 1.0 : std::pow(y, p_ - 2.0);
    case Kind::Boltzmann: return 1.0 / y;
    default: return f_.d2(y);
  }
}

double EntropyGenerator::d3(double y) const {
  check_domain(y);
  switch (kind_) {
    case Kind::Power: return p_ == 2.0 ? 0.0 : (p_ - 2.0) * std::pow(y, p_ - 3.0);
    case Kind::Boltzmann: return -1.0 / (y * y);
    default: return f_.d3(y);
  }
}

double EntropyGenerator::d4(double y) const {
  check_domain(y);
  switch (kind_) {
    case Kind::Power:
      return p_ == 2.0 ? 0.0 : (p_ - 2.0) * (p_ - 3.0) * std::pow(y, p_ - 4.0);
    case Kind::Boltzmann: return 2.0 / (y * y * y);
    default: return f_.d4(y);
  }
}

double EntropyGenerator::psi_weighted(double log_u, double log_w) const {
  if (std::abs(log_u) < 0.5 || kind_ == Kind::Custom || log_u == -HUGE_VAL) {
    return psi(std::exp(log_u)) * std::exp(log_w);
  }
  const double uw = std::exp(log_u + log_w);
  const double w = std::exp(log_w);
  if (kind_ == Kind::Boltzmann) return uw * log_u - uw + w;
  return (std::exp(p_ * log_u + log_w) - p_ * uw + (p_ - 1.0) * w) / (p_ * (p_ - 1.0));
}

double EntropyGenerator::psi2_u2_weighted(double log_u, double log_w) const {
  switch (kind_) {
    case Kind::Power: return std::exp(p_ * log_u + log_w);
    case Kind::Boltzmann: return std::exp(log_u + log_w);
    default: {
      const double u = std::exp(log_u);
      return f_.d2(u) * u * u * std::exp(log_w);
    }
  }
}

Admissibility check_admissible(const EntropyGenerator& gen, const std::vector<double>& grid) {
  Admissibility out;
  out.admissible = std::abs(gen.psi(1.0)) <= 1e-12 && std::abs(gen.d1(1.0)) <= 1e-12;
  out.worst_margin = std::numeric_limits<double>::infinity();
  for (double y : grid) {
    if (!(y > 0.0)) throw std::invalid_argument("check_admissible: grid must lie in (0, inf)");
    const double a = gen.d2(y);
    const double lhs = gen.d3(y) * gen.d3(y);
    const double rhs = 0.5 * a * gen.d4(y);
    const double scale = std::max({lhs, std::abs(rhs), std::numeric_limits<double>::min()});
    const double margin = (rhs - lhs) / scale;
    if (margin < out.worst_margin) {
      out.worst_margin = margin;
      out.worst_at = y;
    }
    if (!(a > 0.0) || margin < -1e-12) out.admissible = false;
  }
  return out;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0 && hi > lo) || n < 2) throw std::invalid_argument("log_grid: bad range");
  std::vector<double> g;
  g.reserve(n + 1);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) g.push_back(std::exp(a + (b - a) * i / (n - 1)));
  if (lo < 1.0 && hi > 1.0) g.push_back(1.0);
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

// ---------------------------------------------------------------------------

double e2_mixture(const GaussianMixture& mix) {
  const int d = mix.dim();
  const auto& comps = mix.components();
  const std::size_t k = comps.size();
  std::vector<Matrix> prec(k);
  std::vector<double> logdet(k);
  std::vector<Vector> pm(k);
  for (std::size_t i = 0; i < k; ++i) {
    Eigen::LLT<Matrix> llt(comps[i].cov);
    prec[i] = llt.solve(Matrix::Identity(d, d));
    logdet[i] = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
    pm[i] = prec[i] * comps[i].mean;
  }
  double cross = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      const Matrix a = prec[i] + prec[j] - Matrix::Identity(d, d);
      Eigen::LLT<Matrix> llt(0.5 * (a + a.transpose()));
      if (llt.info() != Eigen::Success) return kInfiniteEntropy;
      const Matrix l = llt.matrixL();
      if ((l.diagonal().array() <= 0.0).any()) return kInfiniteEntropy;
      const double logdet_a = 2.0 * l.diagonal().array().log().sum();
      const Vector b = pm[i] + pm[j];
      const double c = comps[i].mean.dot(pm[i]) + comps[j].mean.dot(pm[j]);
      const double log_g =
          -0.5 * (logdet[i] + logdet[j] + logdet_a) + 0.5 * (b.dot(llt.solve(b)) - c);
      const double term = comps[i].weight * comps[j].weight * std::exp(log_g);
      cross += (i == j) ? term : 2.0 * term;
    }
  }
  if (!std::isfinite(cross)) return kInfiniteEntropy;
  return std::max(0.0, 0.5 * (cross - 2.0 * mix.total_mass() + 1.0));
}

namespace {

// Reference spread for quadrature against a mixture: wide enough to cover both
// the components and the effective covariance of u^p f_inf.
// Returns a negative value when u^p f_inf is not integrable.
// Above this reference variance ep_quadrature integrates only the u^p part.
constexpr double kSplitSpread = 2.0;

double mixture_sigma(const GaussianMixture& mix, double p) {
  double s2 = 1.0;
  for (const auto& c : mix.components()) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(c.cov);
    const Vector lam = es.eigenvalues();
    s2 = std::max(s2, lam.maxCoeff());
    if (p > 1.0) {
      // p S^{-1} - (p - 1) I has eigenvalues p / lam - (p - 1)
      const Eigen::ArrayXd q = p / lam.array() - (p - 1.0);
      if ((q <= 0.0).any()) return -1.0;
      s2 = std::max(s2, 1.0 / q.minCoeff());
    }
  }
  return std::sqrt(s2);
}

void require_same_dim(int a, int b, const char* what) {
  if (a != b) throw DimensionError(std::string(what) + ": dimension mismatch");
}

}  // namespace

double ep_quadrature(const GaussianMixture& mix, const EntropyGenerator& gen,
                     const QuadratureSpec& quad) {
  const double sigma = mixture_sigma(mix, gen.p());
  if (sigma < 0.0) return kInfiniteEntropy;
  const MixtureRatio ratio(mix);
  Vector grad;
  const double gp = gen.p();
  if (sigma * sigma > kSplitSpread && gp >= 1.0) {
    // With a wide reference the f_inf-shaped terms of psi become too narrow
    // for the rule; they are affine in u and integrate exactly.
    const double mass = mix.total_mass();
    const double head = integrate_equilibrium(quad, mix.dim(), sigma, [&](const Vector& x, double log_w) {
      const double log_u = ratio.log_value_and_grad_log(x, grad);
      if (log_u == -HUGE_VAL) return 0.0;
      if (gp == 1.0) return std::exp(log_u + log_w) * log_u;
      return std::exp(gp * log_u + log_w);
    });
    if (gp == 1.0) return std::max(0.0, head + 1.0 - mass);
    return std::max(0.0, (head - gp * mass + gp - 1.0) / (gp * (gp - 1.0)));
  }
  return integrate_equilibrium(quad, mix.dim(), sigma, [&](const Vector& x, double log_w) {
    const double log_u = ratio.log_value_and_grad_log(x, grad);
    return gen.psi_weighted(log_u, log_w);
  });
}

double ep_quadrature(const HermiteState& state, const EntropyGenerator& gen,
                     const QuadratureSpec& quad) {
  return integrate_equilibrium(quad, state.dim(), 1.0, [&](const Vector& x, double log_w) {
    return gen.psi(state.ratio(x)) * std::exp(log_w);
  });
}

double fisher_info(const GaussianMixture& mix, const EntropyGenerator& gen, const Matrix& p,
                   const QuadratureSpec& quad) {
  require_same_dim(static_cast<int>(p.rows()), mix.dim(), "fisher_info");
  require_square(p, "fisher_info");
  const double sigma = mixture_sigma(mix, gen.p());
  if (sigma < 0.0) return kInfiniteEntropy;
  if (p.isZero(0.0)) return 0.0;
  const MixtureRatio ratio(mix);
  Vector grad;
  return integrate_equilibrium(quad, mix.dim(), sigma, [&](const Vector& x, double log_w) {
    const double log_u = ratio.log_value_and_grad_log(x, grad);
    const double q = grad.dot(p * grad);
    if (q == 0.0) return 0.0;
    return gen.psi2_u2_weighted(log_u, log_w) * q;
  });
}

double fisher_info(const HermiteState& state, const EntropyGenerator& gen, const Matrix& p,
                   const QuadratureSpec& quad) {
  require_same_dim(static_cast<int>(p.rows()), state.dim(), "fisher_info");
  require_square(p, "fisher_info");
  Vector grad;
  return integrate_equilibrium(quad, state.dim(), 1.0, [&](const Vector& x, double log_w) {
    const double u = state.ratio_and_gradient(x, grad);
    const double q = grad.dot(p * grad);
    if (q == 0.0) return 0.0;
    return gen.d2(u) * q * std::exp(log_w);
  });
}

namespace {

void check_steps(double t, double dt) {
  if (!(dt > 0.0) || t < dt) throw std::invalid_argument("dissipation_check: need t >= dt > 0");
}

}  // namespace

DissipationCheck dissipation_check(const NormalizedSystem& sys, const GaussianMixture& f0,
                                   const EntropyGenerator& gen, double t, double dt,
                                   const QuadratureSpec& quad) {
  check_steps(t, dt);
  const double ep = ep_quadrature(evolve_mixture(sys, f0, t + dt), gen, quad);
  const double em = ep_quadrature(evolve_mixture(sys, f0, t - dt), gen, quad);
  DissipationCheck out;
  out.lhs = (ep - em) / (2.0 * dt);
  out.rhs = -fisher_info(evolve_mixture(sys, f0, t), gen, sys.diffusion(), quad);
  out.gap = std::abs(out.lhs - out.rhs);
  return out;
}

DissipationCheck dissipation_check(const NormalizedSystem& sys, const HermiteState& f0,
                                   const EntropyGenerator& gen, double t, double dt,
                                   const QuadratureSpec& quad) {
  check_steps(t, dt);
  const Matrix& c = sys.drift();
  const double ep = ep_quadrature(evolve_hermite(f0, c, t + dt), gen, quad);
  const double em = ep_quadrature(evolve_hermite(f0, c, t - dt), gen, quad);
  DissipationCheck out;
  out.lhs = (ep - em) / (2.0 * dt);
  out.rhs = -fisher_info(evolve_hermite(f0, c, t), gen, sys.diffusion(), quad);
  out.gap = std::abs(out.lhs - out.rhs);
  return out;
}

// ---------------------------------------------------------------------------

double dominance_ratio(double p1, double p2, double y) {
  if (!(p1 > 1.0 && p1 < p2 && p2 <= 2.0)) {
    throw std::invalid_argument("dominance_ratio: need 1 < p1 < p2 <= 2");
  }
  if (y < 0.0) throw std::domain_error("dominance_ratio: y < 0");
  if (y == 1.0) return 1.0;
  return psi_power(p1, y) / psi_power(p2, y);
}

double dominance_constant(double p1, double p2) {
  double best = dominance_ratio(p1, p2, 0.0);
  for (double y : log_grid()) best = std::max(best, dominance_ratio(p1, p2, y));
  return best;
}

double psi_vs_e2_bound(const EntropyGenerator& gen) { return 2.0 * gen.d2(1.0); }

}  // namespace fpdecay
