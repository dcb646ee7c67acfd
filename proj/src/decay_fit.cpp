#include "fpdecay/decay_fit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

namespace fpdecay {

namespace {

struct Ols {
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  int dof = 0;
};

Ols ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Ols out;
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  out.beta = qr.solve(y);
  out.dof = static_cast<int>(x.rows() - x.cols());
  const double s2 = out.dof > 0 ? (y - x * out.beta).squaredNorm() / out.dof : 0.0;
  const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
  out.se = (s2 * xtx_inv.diagonal().array()).sqrt();
  return out;
}

double t_quantile(int dof) {
  if (dof <= 0) return std::numeric_limits<double>::infinity();
  boost::math::students_t dist(dof);
  return boost::math::quantile(dist, 0.975);
}

struct RawFit {
  double poly = 0.0, poly_se = 0.0;
  double rate = 0.0, rate_se = 0.0;
  double free_poly = 0.0;
  int dof_fixed = 0, dof_free = 0;
};

RawFit raw_fit(const std::vector<double>& t, const std::vector<double>& lv, double mu) {
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd x2(n, 2), x3(n, 3);
  Eigen::VectorXd y2(n), y3(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lt = std::log(t[i]);
    x2(i, 0) = 1.0;
    x2(i, 1) = lt;
    y2(i) = lv[i] + 2.0 * mu * t[i];
    x3(i, 0) = 1.0;
    x3(i, 1) = -t[i];
    x3(i, 2) = lt;
    y3(i) = lv[i];
  }
  const Ols fixed = ols(x2, y2);
  const Ols free = ols(x3, y3);
  RawFit r;
  r.poly = fixed.beta(1);
  r.poly_se = fixed.se(1);
  r.dof_fixed = fixed.dof;
  r.rate = free.beta(1);
  r.rate_se = free.se(1);
  r.free_poly = free.beta(2);
  r.dof_free = free.dof;
  return r;
}

}  // namespace

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& value, double mu,
                   std::optional<std::pair<double, double>> window) {
  if (t.size() != value.size()) throw std::invalid_argument("fit_decay: length mismatch");
  if (!(mu > 0.0)) throw std::invalid_argument("fit_decay: need mu > 0");
  if (t.empty()) throw InsufficientDataError("fit_decay: empty series");

  double lo, hi;
  if (window) {
    lo = window->first;
    hi = window->second;
  } else {
    const auto [mn, mx] = std::minmax_element(t.begin(), t.end());
    lo = std::max(0.5 * (*mn + *mx), 5.0 / mu);
    hi = *mx;
  }
  std::vector<double> ts, lv;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < lo || t[i] > hi || t[i] <= 0.0) continue;
    if (!std::isfinite(value[i]) || value[i] < 1e-300) continue;
    ts.push_back(t[i]);
    lv.push_back(std::log(value[i]));
  }
  if (static_cast<int>(ts.size()) < kMinFitPoints) {
    std::ostringstream os;
    os << "fit_decay: " << ts.size() << " usable points in [" << lo << ", " << hi
       << "], need " << kMinFitPoints;
    throw InsufficientDataError(os.str());
  }

  const RawFit full = raw_fit(ts, lv, mu);
  DecayFit out;
  out.window_lo = lo;
  out.window_hi = hi;
  out.points = static_cast<int>(ts.size());
  out.free_poly_order = full.free_poly;
  out.poly_order.value = full.poly;
  out.poly_order.ols_ci = t_quantile(full.dof_fixed) * full.poly_se;
  out.rate.value = full.rate;
  out.rate.ols_ci = t_quantile(full.dof_free) * full.rate_se;

  // Window sensitivity from the two halves, when each half is large enough.
  const std::size_t half = ts.size() / 2;
  if (static_cast<int>(half) >= kMinFitPoints / 2 + 1) {
    const std::vector<double> t1(ts.begin(), ts.begin() + half), l1(lv.begin(), lv.begin() + half);
    const std::vector<double> t2(ts.begin() + half, ts.end()), l2(lv.begin() + half, lv.end());
    const RawFit a = raw_fit(t1, l1, mu);
    const RawFit b = raw_fit(t2, l2, mu);
    out.poly_order.window_spread =
        std::max(std::abs(a.poly - full.poly), std::abs(b.poly - full.poly));
    out.rate.window_spread = std::max(std::abs(a.rate - full.rate), std::abs(b.rate - full.rate));
  }
  out.poly_order.ci = out.poly_order.ols_ci + out.poly_order.window_spread;
  out.rate.ci = out.rate.ols_ci + out.rate.window_spread;
  return out;
}

}  // namespace fpdecay
