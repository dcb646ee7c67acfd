#include "fpdecay/mixture.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace fpdecay {

GaussianMixture::GaussianMixture(std::vector<GaussianComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("GaussianMixture: no components");
  dim_ = static_cast<int>(components_.front().mean.size());
  if (dim_ == 0) throw DimensionError("GaussianMixture: zero-dimensional mean");
  for (std::size_t i = 0; i < components_.size(); ++i) {
    auto& c = components_[i];
    std::ostringstream where;
    where << "GaussianMixture component " << i;
    if (c.mean.size() != dim_ || c.cov.rows() != dim_ || c.cov.cols() != dim_) {
      throw DimensionError(where.str() + ": inconsistent dimensions");
    }
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
      throw std::invalid_argument(where.str() + ": weight must be positive");
    }
    c.cov = 0.5 * (c.cov + c.cov.transpose());
    Eigen::LLT<Matrix> llt(c.cov);
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument(where.str() + ": covariance not positive definite");
    }
  }
}

GaussianMixture GaussianMixture::standard(int d) {
  return single(Vector::Zero(d), Matrix::Identity(d, d));
}

GaussianMixture GaussianMixture::single(Vector mean, Matrix cov, double weight) {
  return GaussianMixture({GaussianComponent{weight, std::move(mean), std::move(cov)}});
}

double GaussianMixture::total_mass() const {
  double m = 0.0;
  for (const auto& c : components_) m += c.weight;
  return m;
}

GaussianMixture GaussianMixture::linear_map(const Matrix& a) const {
  if (a.cols() != dim_) throw DimensionError("GaussianMixture::linear_map: size mismatch");
  std::vector<GaussianComponent> out;
  out.reserve(components_.size());
  for (const auto& c : components_) {
    out.push_back({c.weight, a * c.mean, a * c.cov * a.transpose()});
  }
  return GaussianMixture(std::move(out));
}

MixtureRatio::MixtureRatio(const GaussianMixture& mix) : dim_(mix.dim()) {
  const double log2pi = std::log(2.0 * std::numbers::pi);
  for (const auto& c : mix.components()) {
    Eigen::LLT<Matrix> llt(c.cov);
    const Matrix l = llt.matrixL();
    const double logdet = 2.0 * l.diagonal().array().log().sum();
    Prepared p;
    p.log_weight = std::log(c.weight) - 0.5 * dim_ * log2pi - 0.5 * logdet;
    p.mean = c.mean;
    p.precision = llt.solve(Matrix::Identity(dim_, dim_));
    parts_.push_back(std::move(p));
  }
}

double MixtureRatio::log_density(const Vector& x) const {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> logs;
  logs.reserve(parts_.size());
  for (const auto& p : parts_) {
    const Vector r = x - p.mean;
    const double l = p.log_weight - 0.5 * r.dot(p.precision * r);
    logs.push_back(l);
    best = std::max(best, l);
  }
  if (!std::isfinite(best)) return best;
  double s = 0.0;
  for (double l : logs) s += std::exp(l - best);
  return best + std::log(s);
}

double MixtureRatio::value(const Vector& x) const {
  // f / f_inf with f_inf = (2 pi)^{-d/2} exp(-|x|^2/2)
  const double log_finf = -0.5 * dim_ * std::log(2.0 * std::numbers::pi) - 0.5 * x.squaredNorm();
  return std::exp(log_density(x) - log_finf);
}

double MixtureRatio::value_and_gradient(const Vector& x, Vector& grad) const {
  const double log_finf = -0.5 * dim_ * std::log(2.0 * std::numbers::pi) - 0.5 * x.squaredNorm();
  grad = Vector::Zero(dim_);
  double u = 0.0;
  for (const auto& p : parts_) {
    const Vector r = x - p.mean;
    const Vector pr = p.precision * r;
    const double ui = std::exp(p.log_weight - 0.5 * r.dot(pr) - log_finf);
    u += ui;
    // grad (N_i / f_inf) = (N_i / f_inf) (x - P_i (x - m_i))
    grad.noalias() += ui * (x - pr);
  }
  return u;
}

double MixtureRatio::log_value_and_grad_log(const Vector& x, Vector& grad_log) const {
  const double log_finf = -0.5 * dim_ * std::log(2.0 * std::numbers::pi) - 0.5 * x.squaredNorm();
  std::vector<double> logs;
  std::vector<Vector> dirs;
  logs.reserve(parts_.size());
  dirs.reserve(parts_.size());
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& p : parts_) {
    const Vector r = x - p.mean;
    const Vector pr = p.precision * r;
    logs.push_back(p.log_weight - 0.5 * r.dot(pr));
    dirs.push_back(x - pr);
    best = std::max(best, logs.back());
  }
  grad_log = Vector::Zero(dim_);
  double s = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const double e = std::exp(logs[i] - best);
    s += e;
    grad_log.noalias() += e * dirs[i];
  }
  grad_log /= s;
  return best + std::log(s) - log_finf;
}

}  // namespace fpdecay
