#pragma once

#include <algorithm>
#include <complex>
#include <random>
#include <vector>

#include "fpdecay/linalg.hpp"
#include "fpdecay/mixture.hpp"

namespace fpdecay::testing {

inline Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

inline Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

// D = diag(0, 2), C = [[0, -1], [1, 2]]: mu = 1, n = 1, K = I.
inline Matrix kinetic_d() { return mat2(0, 0, 0, 2); }
inline Matrix kinetic_c() { return mat2(0, -1, 1, 2); }

// Eigenvalues 1 +- 3.5i, D = C_s = I.
inline Matrix nondefective_c() { return mat2(1, 3.5, -3.5, 1); }
inline Matrix nondefective_d() { return Matrix::Identity(2, 2); }

inline Matrix scalar_one() { return Matrix::Constant(1, 1, 1.0); }

// Greedy matching of two complex multisets within tol.
inline bool multisets_match(std::vector<std::complex<double>> a,
                            std::vector<std::complex<double>> b, double tol) {
  if (a.size() != b.size()) return false;
  for (const auto& z : a) {
    auto best = b.end();
    double dist = tol;
    for (auto it = b.begin(); it != b.end(); ++it) {
      if (std::abs(*it - z) <= dist) {
        dist = std::abs(*it - z);
        best = it;
      }
    }
    if (best == b.end()) return false;
    b.erase(best);
  }
  return true;
}

// Symmetric matrix with eigenvalues drawn from [lo, hi].
inline Matrix random_spd(std::mt19937_64& rng, int d, double lo, double hi) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = n(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ();
  Vector lam(d);
  for (int i = 0; i < d; ++i) lam(i) = u(rng);
  return q * lam.asDiagonal() * q.transpose();
}

// 1-3 components, means within mean_scale, covariance eigenvalues in [lo, hi].
inline GaussianMixture random_mixture(std::mt19937_64& rng, int d, double mean_scale, double lo,
                                      double hi) {
  std::uniform_int_distribution<int> k(1, 3);
  std::uniform_real_distribution<double> w(0.2, 1.0);
  std::normal_distribution<double> n;
  const int comps = k(rng);
  std::vector<GaussianComponent> out;
  double total = 0.0;
  for (int i = 0; i < comps; ++i) {
    GaussianComponent c;
    c.weight = w(rng);
    total += c.weight;
    c.mean = Vector(d);
    for (int j = 0; j < d; ++j) c.mean(j) = mean_scale * n(rng);
    c.cov = random_spd(rng, d, lo, hi);
    out.push_back(c);
  }
  for (auto& c : out) c.weight /= total;
  return GaussianMixture(out);
}

}  // namespace fpdecay::testing
