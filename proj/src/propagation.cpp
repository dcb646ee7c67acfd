#include "fpdecay/propagation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

namespace fpdecay {

Matrix gram_w(const FPSystem& sys, double t) {
  if (t < 0.0 || !std::isfinite(t)) throw std::invalid_argument("gram_w: need finite t >= 0");
  const int d = sys.dim();
  if (t == 0.0) return Matrix::Zero(d, d);
  const Matrix e = matrix_exp(-sys.drift(), t);
  const Matrix two_d = 2.0 * sys.diffusion();
  const Matrix w = kron_sum_solve(sys.drift(), two_d - e * two_d * e.transpose());
  return 0.5 * (w + w.transpose());
}

Matrix gram_w_deficit(const FPSystem& sys, double t) {
  if (t < 0.0 || !std::isfinite(t)) throw std::invalid_argument("gram_w_deficit: need finite t >= 0");
  const Matrix e = matrix_exp(-sys.drift(), t);
  const Matrix k = equilibrium(sys).covariance;
  const Matrix out = e * k * e.transpose();
  return 0.5 * (out + out.transpose());
}

GaussianMixture evolve_mixture(const FPSystem& sys, const GaussianMixture& mix, double t) {
  if (mix.dim() != sys.dim()) throw DimensionError("evolve_mixture: dimension mismatch");
  if (t < 0.0) throw std::invalid_argument("evolve_mixture: negative time");
  if (t == 0.0) return mix;
  const Matrix e = matrix_exp(-sys.drift(), t);
  const Matrix w = gram_w(sys, t);
  std::vector<GaussianComponent> out;
  for (const auto& c : mix.components()) {
    Matrix cov = w + e * c.cov * e.transpose();
    out.push_back({c.weight, e * c.mean, 0.5 * (cov + cov.transpose())});
  }
  return GaussianMixture(std::move(out));
}

double covariance_condition(const GaussianMixture& mix) {
  double worst = 1.0;
  for (const auto& c : mix.components()) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(c.cov, Eigen::EigenvaluesOnly);
    worst = std::max(worst, es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff());
  }
  return worst;
}

namespace {

double tail_log_slope(const std::vector<double>& grid, const std::vector<double>& ratios) {
  const double t_end = grid.back();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0.9 * t_end || grid[i] <= 0.0 || !(ratios[i] > 0.0)) continue;
    const double x = std::log(grid[i]);
    const double y = std::log(ratios[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 3) return 0.0;
  const double den = n * sxx - sx * sx;
  if (den <= 0.0) return 0.0;
  return (n * sxy - sx * sy) / den;
}

}  // namespace

EnvelopeFit fit_envelope(const std::vector<double>& grid, const std::vector<double>& quantity,
                         const std::vector<double>& shape, const char* what) {
  if (grid.empty()) throw std::invalid_argument(std::string(what) + ": empty grid");
  if (quantity.size() != grid.size() || shape.size() != grid.size()) {
    throw std::invalid_argument(std::string(what) + ": length mismatch");
  }
  if (!std::is_sorted(grid.begin(), grid.end()) || grid.front() < 0.0) {
    throw std::invalid_argument(std::string(what) + ": grid must be sorted and non-negative");
  }
  EnvelopeFit fit;
  fit.grid = grid;
  fit.ratios.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = quantity[i] / shape[i];
    if (!std::isfinite(r)) {
      std::ostringstream os;
      os << what << ": non-finite ratio at t = " << grid[i];
      throw EnvelopeViolation(os.str());
    }
    fit.ratios.push_back(r);
    if (r > fit.c_fit) {
      fit.c_fit = r;
      fit.max_ratio_location = grid[i];
    }
  }
  fit.tail_slope = tail_log_slope(grid, fit.ratios);
  if (fit.tail_slope > kTailSlopeLimit) {
    std::ostringstream os;
    os << what << ": ratio grows like t^" << fit.tail_slope
       << " over the last 10% of the grid; envelope rate or defect is wrong";
    throw EnvelopeViolation(os.str());
  }
  return fit;
}

EnvelopeFit fit_w_convergence(const NormalizedSystem& sys, const std::vector<double>& grid) {
  const SpectralGap gap = mu_and_defect(sys.drift());
  std::vector<double> q, shape;
  for (double t : grid) {
    q.push_back(spectral_norm(gram_w_deficit(sys, t)));
    const double poly = gap.n == 0 ? 1.0 : 1.0 + std::pow(t, 2 * gap.n);
    shape.push_back(poly * std::exp(-2.0 * gap.mu * t));
  }
  return fit_envelope(grid, q, shape, "fit_w_convergence");
}

EnvelopeFit fit_drift_decay(const Matrix& c, const std::vector<double>& grid) {
  const SpectralGap gap = mu_and_defect(c);
  std::vector<double> q, shape;
  for (double t : grid) {
    q.push_back(spectral_norm(matrix_exp(-c, t)));
    const double poly = gap.n == 0 ? 1.0 : 1.0 + std::pow(t, gap.n);
    shape.push_back(poly * std::exp(-gap.mu * t));
  }
  return fit_envelope(grid, q, shape, "fit_drift_decay");
}

void mixture_moments(const GaussianMixture& mix, Vector& mean, Matrix& cov) {
  const int d = mix.dim();
  const double mass = mix.total_mass();
  mean = Vector::Zero(d);
  Matrix second = Matrix::Zero(d, d);
  for (const auto& c : mix.components()) {
    mean += c.weight * c.mean;
    second += c.weight * (c.cov + c.mean * c.mean.transpose());
  }
  mean /= mass;
  cov = second / mass - mean * mean.transpose();
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::size_t kChunk = 4096;

}  // namespace

std::vector<SdeMoments> sde_oracle(const FPSystem& sys, const GaussianMixture& mix,
                                   const std::vector<double>& times, const SdeOptions& opt) {
  const int d = sys.dim();
  if (mix.dim() != d) throw DimensionError("sde_oracle: dimension mismatch");
  if (opt.n_paths < 10000) throw std::invalid_argument("sde_oracle: need at least 1e4 paths");
  if (!(opt.dt > 0.0) || opt.dt > 1e-2 / spectral_norm(sys.drift()) * (1.0 + 1e-12)) {
    throw std::invalid_argument("sde_oracle: need 0 < dt <= 1e-2 / |C|");
  }
  if (times.empty()) throw std::invalid_argument("sde_oracle: no output times");

  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() < 0.0) throw std::invalid_argument("sde_oracle: negative time");
  std::vector<long> steps;
  for (double t : sorted) steps.push_back(std::lround(t / opt.dt));

  // Noise enters only through the non-zero columns of sqrt(2D).
  const Matrix sq = psd_sqrt(2.0 * sys.diffusion());
  std::vector<int> noise_cols;
  for (int j = 0; j < d; ++j) {
    if (sq.col(j).norm() > 0.0) noise_cols.push_back(j);
  }
  const Matrix drift_step = Matrix::Identity(d, d) - opt.dt * sys.drift();
  const double sqrt_dt = std::sqrt(opt.dt);

  std::vector<double> cum;
  std::vector<Matrix> chol;
  double acc = 0.0;
  for (const auto& c : mix.components()) {
    acc += c.weight;
    cum.push_back(acc);
    chol.push_back(Eigen::LLT<Matrix>(c.cov).matrixL());
  }
  for (double& v : cum) v /= acc;

  const std::size_t n = opt.n_paths;
  const std::size_t n_times = sorted.size();
  // positions[k] is d x n, column p = path p at time k
  std::vector<Matrix> positions(n_times, Matrix(d, n));
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    Vector x(d), xn(d), z(d);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif;
    for (std::size_t ch = next++; ch < n_chunks; ch = next++) {
      std::mt19937_64 rng(splitmix64(opt.seed ^ splitmix64(ch)));
      const std::size_t lo = ch * kChunk;
      const std::size_t hi = std::min(n, lo + kChunk);
      for (std::size_t p = lo; p < hi; ++p) {
        const double r = unif(rng);
        const std::size_t k =
            std::min<std::size_t>(std::lower_bound(cum.begin(), cum.end(), r) - cum.begin(),
                                  cum.size() - 1);
        for (int i = 0; i < d; ++i) z(i) = normal(rng);
        x = mix.components()[k].mean + chol[k] * z;
        long step = 0;
        for (std::size_t ti = 0; ti < n_times; ++ti) {
          for (; step < steps[ti]; ++step) {
            xn.noalias() = drift_step * x;
            for (int j : noise_cols) xn.noalias() += (sqrt_dt * normal(rng)) * sq.col(j);
            x.swap(xn);
          }
          positions[ti].col(static_cast<Eigen::Index>(p)) = x;
        }
      }
    }
  };

  unsigned workers = opt.workers ? opt.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_chunks));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<SdeMoments> out;
  const double dn = static_cast<double>(n);
  for (std::size_t ti = 0; ti < n_times; ++ti) {
    const Matrix& xs = positions[ti];
    SdeMoments m;
    m.t = sorted[ti];
    m.n_paths = n;
    m.mean = xs.rowwise().mean();
    const Matrix centred = xs.colwise() - m.mean;
    m.cov = centred * centred.transpose() / (dn - 1.0);
    m.mean_stderr = (m.cov.diagonal().array() / dn).sqrt();
    m.cov_stderr = Matrix(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        const Eigen::ArrayXd prod = centred.row(i).array() * centred.row(j).array();
        const double var = (prod - prod.mean()).square().sum() / (dn - 1.0);
        m.cov_stderr(i, j) = std::sqrt(var / dn);
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace fpdecay
