#include "fpdecay/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fpdecay {

int MultiIndex::order() const { return std::accumulate(alpha.begin(), alpha.end(), 0); }

double MultiIndex::factorial() const {
  double f = 1.0;
  for (int a : alpha) f *= std::tgamma(a + 1.0);
  return f;
}

std::size_t level_dimension(int dim, int level) {
  // C(level + dim - 1, dim - 1), exact in integer arithmetic for our sizes
  std::size_t num = 1;
  for (int i = 1; i < dim; ++i) num = num * static_cast<std::size_t>(level + i) / i;
  return num;
}

namespace {

void fill_indices(int dim, int remaining, std::vector<int>& prefix,
                  std::vector<MultiIndex>& out) {
  if (static_cast<int>(prefix.size()) == dim - 1) {
    prefix.push_back(remaining);
    out.push_back(MultiIndex{prefix});
    prefix.pop_back();
    return;
  }
  for (int a = remaining; a >= 0; --a) {
    prefix.push_back(a);
    fill_indices(dim, remaining - a, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

std::vector<MultiIndex> multi_indices(int dim, int level) {
  if (dim < 1 || level < 0) throw std::invalid_argument("multi_indices: bad arguments");
  std::vector<MultiIndex> out;
  out.reserve(level_dimension(dim, level));
  std::vector<int> prefix;
  fill_indices(dim, level, prefix, out);
  return out;
}

std::size_t multi_index_position(const MultiIndex& alpha) {
  const auto all = multi_indices(static_cast<int>(alpha.alpha.size()), alpha.order());
  const auto it = std::find(all.begin(), all.end(), alpha);
  return static_cast<std::size_t>(it - all.begin());
}

SubspaceRep vm_matrix(const Matrix& c, int level) {
  require_square(c, "vm_matrix");
  if (level < 0) throw std::invalid_argument("vm_matrix: negative level");
  const int d = static_cast<int>(c.rows());
  SubspaceRep rep;
  rep.level = level;
  rep.basis = multi_indices(d, level);
  const auto n = static_cast<Eigen::Index>(rep.basis.size());
  rep.lm = Matrix::Zero(n, n);
  if (level == 0) return rep;

  // L d^alpha f_inf = -sum_{i,j} C_ji alpha_i d^{alpha - e_i + e_j} f_inf,
  // rescaled to the orthonormal basis by sqrt(beta! / alpha!).
  for (Eigen::Index row = 0; row < n; ++row) {
    const MultiIndex& a = rep.basis[row];
    for (int i = 0; i < d; ++i) {
      if (a.alpha[i] == 0) continue;
      for (int j = 0; j < d; ++j) {
        double coeff;
        MultiIndex b = a;
        if (i == j) {
          coeff = -c(i, i) * a.alpha[i];
        } else {
          b.alpha[i] -= 1;
          b.alpha[j] += 1;
          coeff = -c(j, i) * std::sqrt(static_cast<double>(a.alpha[i]) * (a.alpha[j] + 1));
        }
        const auto col = static_cast<Eigen::Index>(
            std::find(rep.basis.begin(), rep.basis.end(), b) - rep.basis.begin());
        rep.lm(row, col) += coeff;
      }
    }
  }
  return rep;
}

std::vector<Complex> vm_spectrum_reference(const Matrix& c, int level) {
  const std::vector<Complex> lambda = eigen_structure(c).multiset();
  std::vector<Complex> out;
  for (const auto& a : multi_indices(static_cast<int>(c.rows()), level)) {
    Complex s{0.0, 0.0};
    for (std::size_t i = 0; i < lambda.size(); ++i) s -= static_cast<double>(a.alpha[i]) * lambda[i];
    out.push_back(s);
  }
  return out;
}

SubspaceDecay subspace_decay_exponent(const Matrix& c, int level) {
  if (level < 1) throw std::invalid_argument("subspace_decay_exponent: level must be >= 1");
  const SpectralGap gap = mu_and_defect(c);
  const EigenStructure es = eigen_structure(vm_matrix(c, level).lm);
  SubspaceDecay out;
  out.rate = 2.0 * level * gap.mu;
  const double tol = std::max(es.cluster_tolerance, 1e-6);
  for (const auto& cl : es.clusters) {
    if (std::abs(cl.value.real() + level * gap.mu) <= tol) out.n_k = std::max(out.n_k, cl.defect());
  }
  return out;
}

// ---------------------------------------------------------------------------

HermiteState::HermiteState(int dim, int max_level, double mass)
    : dim_(dim), max_level_(max_level) {
  if (dim < 1 || max_level < 0) throw std::invalid_argument("HermiteState: bad shape");
  for (int m = 0; m <= max_level; ++m) {
    indices_.push_back(multi_indices(dim, m));
    levels_.push_back(Vector::Zero(static_cast<Eigen::Index>(indices_.back().size())));
  }
  levels_[0](0) = mass;
}

double HermiteState::coefficient(const MultiIndex& alpha) const {
  const int m = alpha.order();
  if (static_cast<int>(alpha.alpha.size()) != dim_) throw DimensionError("HermiteState: index size");
  if (m > max_level_) return 0.0;
  const auto& idx = indices_[m];
  const auto pos = std::find(idx.begin(), idx.end(), alpha) - idx.begin();
  return levels_[m](pos);
}

void HermiteState::set_coefficient(const MultiIndex& alpha, double value) {
  const int m = alpha.order();
  if (static_cast<int>(alpha.alpha.size()) != dim_) throw DimensionError("HermiteState: index size");
  if (m > max_level_) {
    std::ostringstream os;
    os << "HermiteState: level " << m << " exceeds truncation " << max_level_;
    throw std::out_of_range(os.str());
  }
  const auto& idx = indices_[m];
  const auto pos = std::find(idx.begin(), idx.end(), alpha) - idx.begin();
  levels_[m](pos) = value;
}

int HermiteState::lowest_active_level() const {
  for (int m = 1; m <= max_level_; ++m) {
    if ((levels_[m].array() != 0.0).any()) return m;
  }
  return 0;
}

double HermiteState::e2() const {
  double s = 0.0;
  for (int m = 1; m <= max_level_; ++m) s += levels_[m].squaredNorm();
  return 0.5 * s;
}

double HermiteState::ratio(const Vector& x) const {
  Vector grad;
  return ratio_and_gradient(x, grad);
}

double HermiteState::ratio_and_gradient(const Vector& x, Vector& grad) const {
  const int n = max_level_;
  // h[i][j] = He_j(x_i) / sqrt(j!)
  std::vector<std::vector<double>> h(dim_, std::vector<double>(n + 1));
  for (int i = 0; i < dim_; ++i) normalized_hermite(x(i), n, h[i].data());
  grad = Vector::Zero(dim_);
  double u = 0.0;
  for (int m = 0; m <= n; ++m) {
    const auto& idx = indices_[m];
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double a = levels_[m](static_cast<Eigen::Index>(k));
      if (a == 0.0) continue;
      const auto& alpha = idx[k].alpha;
      double prod = 1.0;
      for (int i = 0; i < dim_; ++i) prod *= h[i][alpha[i]];
      u += a * prod;
      // d/dx h_j = sqrt(j) h_{j-1}
      for (int i = 0; i < dim_; ++i) {
        if (alpha[i] == 0) continue;
        double g = std::sqrt(static_cast<double>(alpha[i])) * h[i][alpha[i] - 1];
        for (int l = 0; l < dim_; ++l) {
          if (l != i) g *= h[l][alpha[l]];
        }
        grad(i) += a * g;
      }
    }
  }
  return u;
}

HermiteState evolve_hermite(const HermiteState& state, const Matrix& c, double t) {
  if (c.rows() != state.dim()) throw DimensionError("evolve_hermite: drift size mismatch");
  if (t < 0.0) throw std::invalid_argument("evolve_hermite: negative time");
  HermiteState out = state;
  if (t == 0.0) return out;
  for (int m = 1; m <= state.max_level(); ++m) {
    if ((state.level(m).array() == 0.0).all()) continue;
    const Matrix lm = vm_matrix(c, m).lm;
    out.level(m) = matrix_exp(lm.transpose(), t) * state.level(m);
  }
  return out;
}

Projection project_gaussian(const GaussianMixture& mix, int max_level,
                            const QuadratureSpec& quad) {
  const int d = mix.dim();
  if (max_level < 0) throw std::invalid_argument("project_gaussian: negative level");
  if (quad.rule == QuadratureSpec::Rule::GaussHermite && quad.order < max_level + 1) {
    std::ostringstream os;
    os << "project_gaussian: quadrature order " << quad.order << " too low for level "
       << max_level << " (need >= " << max_level + 1 << ")";
    throw std::invalid_argument(os.str());
  }
  const MixtureRatio ratio(mix);
  HermiteState state(d, max_level, 0.0);
  std::vector<std::vector<MultiIndex>> idx;
  for (int m = 0; m <= max_level; ++m) idx.push_back(multi_indices(d, m));

  std::vector<std::vector<double>> h(d, std::vector<double>(max_level + 1));
  Vector x(d);
  auto accumulate = [&](double w) {
    const double u = ratio.value(x);
    for (int i = 0; i < d; ++i) normalized_hermite(x(i), max_level, h[i].data());
    for (int m = 0; m <= max_level; ++m) {
      Vector& lvl = state.level(m);
      for (std::size_t k = 0; k < idx[m].size(); ++k) {
        double prod = 1.0;
        for (int i = 0; i < d; ++i) prod *= h[i][idx[m][k].alpha[i]];
        lvl(static_cast<Eigen::Index>(k)) += w * u * prod;
      }
    }
  };

  if (quad.rule == QuadratureSpec::Rule::MonteCarlo) {
    std::mt19937_64 rng(quad.seed);
    std::normal_distribution<double> normal;
    const double w = 1.0 / static_cast<double>(quad.samples);
    for (std::size_t s = 0; s < quad.samples; ++s) {
      for (int i = 0; i < d; ++i) x(i) = normal(rng);
      accumulate(w);
    }
  } else {
    const GaussHermiteRule& rule = gauss_hermite(quad.order);
    std::vector<int> pos(d, 0);
    while (true) {
      double w = 1.0;
      for (int i = 0; i < d; ++i) {
        x(i) = rule.nodes[pos[i]];
        w *= rule.weights[pos[i]];
      }
      accumulate(w);
      int axis = 0;
      while (axis < d && ++pos[axis] == quad.order) pos[axis++] = 0;
      if (axis == d) break;
    }
  }
  Projection out{state, state.level(max_level).squaredNorm()};
  return out;
}

bool gamma_kappa_contains(const Matrix& b, int kappa, double c, Complex z) {
  require_square(b, "gamma_kappa_contains");
  if (kappa < 0 || !(c > 0.0)) throw std::invalid_argument("gamma_kappa_contains: bad kappa or c");
  const double tr = b.trace();
  if (!(z.real() <= 0.5 * (1.0 - tr))) return false;
  const Complex z0{1.0 - 0.5 * tr, 0.0};
  return std::abs(z.real() - z0.real()) <= c * std::pow(std::abs(z - z0), 1.0 / (2 * kappa + 1));
}

double decay_envelope(double mu, int n, double c, double t) {
  if (t < 0.0 || !(c > 0.0)) throw std::invalid_argument("decay_envelope: need t >= 0, c > 0");
  const double poly = n == 0 ? 1.0 : 1.0 + std::pow(t, 2 * n);
  return c * poly * std::exp(-2.0 * mu * t);
}

}  // namespace fpdecay
