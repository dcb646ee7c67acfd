#include "fpdecay/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

namespace fpdecay {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    std::ostringstream os;
    os << what << ": expected a non-empty square matrix, got " << m.rows()
       << "x" << m.cols();
    throw DimensionError(os.str());
  }
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite entries");
  }
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

int numerical_rank(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  if (smax == 0.0) return 0;
  return static_cast<int>((s.array() > rel_tol * smax).count());
}

PsdCheck psd_check(const Matrix& m, double tol) {
  require_square(m, "psd_check");
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  PsdCheck out;
  if (scale == 0.0) {
    out.is_symmetric_psd = (m.array() == 0.0).all();
    out.rank = 0;
    return out;
  }
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  out.rank = static_cast<int>((ev.array() > tol * scale).count());
  out.is_symmetric_psd = asym <= tol * scale && ev.minCoeff() >= -tol * scale;
  return out;
}

Matrix psd_sqrt(const Matrix& m, double tol) {
  require_square(m, "psd_sqrt");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  Vector ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    ev(i) = ev(i) > tol * scale ? std::sqrt(ev(i)) : 0.0;
  }
  const Matrix& v = es.eigenvectors();
  Matrix root = v * ev.asDiagonal() * v.transpose();
  return 0.5 * (root + root.transpose());
}

Matrix matrix_exp(const Matrix& m, double t) {
  require_square(m, "matrix_exp");
  require_finite(m, "matrix_exp");
  if (!std::isfinite(t)) throw std::invalid_argument("matrix_exp: non-finite t");
  if (t == 0.0) return Matrix::Identity(m.rows(), m.cols());
  const Matrix scaled = m * t;
  return scaled.exp();
}

Matrix solve_lyapunov(const Matrix& c, const Matrix& d) {
  require_square(c, "solve_lyapunov(C)");
  require_square(d, "solve_lyapunov(D)");
  if (c.rows() != d.rows()) throw DimensionError("solve_lyapunov: C and D differ in size");
  const Eigen::Index n = c.rows();

  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(c.cast<Complex>());
  const Eigen::MatrixXcd& t = schur.matrixT();
  const Eigen::MatrixXcd& u = schur.matrixU();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(t(i, i).real() > 0.0)) {
      throw NumericalError(
          "solve_lyapunov: drift is not positively stable, no unique positive "
          "definite solution");
    }
  }

  // T Y + Y T^H = F with Y = U^H K U, F = U^H (2D) U. Column j of Y T^H only
  // involves columns k >= j of Y, so sweep from the last column.
  const Eigen::MatrixXcd f = u.adjoint() * (2.0 * d).cast<Complex>() * u;
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    Eigen::VectorXcd rhs = f.col(j);
    for (Eigen::Index k = j + 1; k < n; ++k) rhs -= std::conj(t(j, k)) * y.col(k);
    Eigen::MatrixXcd shifted = t;
    shifted.diagonal().array() += std::conj(t(j, j));
    y.col(j) = shifted.triangularView<Eigen::Upper>().solve(rhs);
  }
  Matrix k = (u * y * u.adjoint()).real();
  return 0.5 * (k + k.transpose());
}

Matrix kron_sum(const Matrix& c) {
  require_square(c, "kron_sum");
  const Eigen::Index n = c.rows();
  Matrix out = Matrix::Zero(n * n, n * n);
  // (I (x) C): block diagonal copies of C; (C (x) I): c_ij * I blocks.
  for (Eigen::Index i = 0; i < n; ++i) {
    out.block(i * n, i * n, n, n) += c;
    for (Eigen::Index j = 0; j < n; ++j) {
      out.block(i * n, j * n, n, n).diagonal().array() += c(i, j);
    }
  }
  return out;
}

Matrix kron_sum_solve(const Matrix& c, const Matrix& rhs) {
  require_square(c, "kron_sum_solve(C)");
  if (rhs.rows() != c.rows() || rhs.cols() != c.cols()) {
    throw DimensionError("kron_sum_solve: right-hand side has the wrong shape");
  }
  const Eigen::Index n = c.rows();
  Eigen::FullPivLU<Matrix> lu(kron_sum(c));
  if (!lu.isInvertible()) throw NumericalError("kron_sum_solve: singular Kronecker sum");
  const Vector x = lu.solve(Eigen::Map<const Vector>(rhs.data(), n * n));
  return Eigen::Map<const Matrix>(x.data(), n, n);
}

// ---------------------------------------------------------------------------

int EigenStructure::dimension() const {
  return std::accumulate(clusters.begin(), clusters.end(), 0,
                         [](int acc, const EigenCluster& c) { return acc + c.algebraic; });
}

int EigenStructure::max_defect() const {
  int out = 0;
  for (const auto& c : clusters) out = std::max(out, c.defect());
  return out;
}

std::vector<Complex> EigenStructure::multiset() const {
  std::vector<Complex> out;
  for (const auto& c : clusters) out.insert(out.end(), c.algebraic, c.value);
  return out;
}

namespace {

struct Clustering {
  std::vector<std::vector<int>> groups;
  double max_diameter = 0.0;
  double min_separation = std::numeric_limits<double>::infinity();
};

Clustering cluster_at(const std::vector<Complex>& ev, double tol) {
  const int n = static_cast<int>(ev.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(ev[i] - ev[j]) <= tol) parent[find(i)] = find(j);

  Clustering out;
  std::vector<int> slot(n, -1);
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(out.groups.size());
      out.groups.emplace_back();
    }
    out.groups[slot[r]].push_back(i);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dist = std::abs(ev[i] - ev[j]);
      if (find(i) == find(j)) {
        out.max_diameter = std::max(out.max_diameter, dist);
      } else {
        out.min_separation = std::min(out.min_separation, dist);
      }
    }
  }
  return out;
}

int nullity(const Eigen::MatrixXcd& m, double abs_threshold = -1.0) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  if (abs_threshold >= 0.0) return static_cast<int>((s.array() <= abs_threshold).count());
  if (smax == 0.0) return static_cast<int>(m.cols());
  return static_cast<int>((s.array() <= kRankTolerance * smax).count());
}

Complex group_mean(const std::vector<Complex>& ev, const std::vector<int>& group) {
  Complex mean{0.0, 0.0};
  for (int i : group) mean += ev[i];
  return mean / static_cast<double>(group.size());
}

// A group of k computed eigenvalues is one eigenvalue of multiplicity k when
// (M - mean I)^k has a k-dimensional kernel, measured against |M - mean I|^k.
bool group_is_single_eigenvalue(const Eigen::MatrixXcd& mc, const std::vector<Complex>& ev,
                                const std::vector<int>& group) {
  const int k = static_cast<int>(group.size());
  if (k < 2) return true;
  Eigen::MatrixXcd shifted = mc;
  shifted.diagonal().array() -= group_mean(ev, group);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted);
  const double scale = svd.singularValues()(0);
  if (scale == 0.0) return true;
  Eigen::MatrixXcd power = shifted;
  for (int j = 1; j < k; ++j) power = power * shifted;
  return nullity(power, kRankTolerance * std::pow(scale, k)) >= k;
}

}  // namespace

EigenStructure eigen_structure(const Matrix& m, double tol) {
  require_square(m, "eigen_structure");
  require_finite(m, "eigen_structure");
  Eigen::EigenSolver<Matrix> es(m, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigen_structure: eigensolver failed");
  std::vector<Complex> ev(es.eigenvalues().data(), es.eigenvalues().data() + m.rows());
  const Eigen::MatrixXcd mc = m.cast<Complex>();

  // Walk the ladder tol, 10 tol, ..., 1e-2 and keep the coarsest partition
  // whose groups are all genuine multiple eigenvalues. The reported tolerance
  // is the smallest rung producing that partition.
  EigenStructure out;
  constexpr double kWidestTolerance = 1e-2;
  Clustering chosen = cluster_at(ev, tol);
  double level = tol;
  bool found = false;
  for (double lv = tol; lv <= kWidestTolerance * (1.0 + 1e-12); lv *= 10.0) {
    Clustering c = cluster_at(ev, lv);
    const bool valid = std::all_of(c.groups.begin(), c.groups.end(), [&](const auto& g) {
      return group_is_single_eigenvalue(mc, ev, g);
    });
    if (!valid) continue;
    if (!found || c.groups != chosen.groups) level = lv;
    chosen = std::move(c);
    found = true;
  }
  out.cluster_tolerance = level;
  if (!found || chosen.min_separation < 10.0 * level) {
    out.ill_conditioned = true;
    std::ostringstream os;
    os << "eigenvalue clusters not cleanly separable: diameter " << chosen.max_diameter
       << ", separation " << chosen.min_separation << " at tolerance " << level;
    out.warning = os.str();
  }

  for (const auto& group : chosen.groups) {
    Complex mean = group_mean(ev, group);
    if (std::abs(mean.imag()) <= level) mean.imag(0.0);
    EigenCluster cl;
    cl.value = mean;
    cl.algebraic = static_cast<int>(group.size());
    Eigen::MatrixXcd shifted = mc;
    shifted.diagonal().array() -= mean;
    cl.geometric = std::clamp(nullity(shifted), 1, cl.algebraic);
    out.clusters.push_back(cl);
  }
  std::sort(out.clusters.begin(), out.clusters.end(), [](const auto& a, const auto& b) {
    if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
    return a.value.imag() < b.value.imag();
  });
  return out;
}

SpectralGap mu_and_defect(const Matrix& c, double tol) {
  const EigenStructure es = eigen_structure(c, tol);
  SpectralGap gap;
  gap.mu = std::numeric_limits<double>::infinity();
  for (const auto& cl : es.clusters) gap.mu = std::min(gap.mu, cl.value.real());
  if (!(gap.mu > es.cluster_tolerance)) {
    throw std::domain_error("drift matrix is not positively stable (condition B violated)");
  }
  for (const auto& cl : es.clusters) {
    if (std::abs(cl.value.real() - gap.mu) <= es.cluster_tolerance) {
      gap.n = std::max(gap.n, cl.defect());
    }
  }
  return gap;
}

KalmanResult kalman_kappa(const Matrix& q_half, const Matrix& b) {
  require_square(q_half, "kalman_kappa(Qhalf)");
  require_square(b, "kalman_kappa(B)");
  if (q_half.rows() != b.rows()) throw DimensionError("kalman_kappa: size mismatch");
  const Eigen::Index d = b.rows();

  // Grow an orthonormal basis of the Krylov space block by block; each block
  // only contributes the directions it adds, so ranks cannot decrease.
  KalmanResult out;
  Matrix basis(d, 0);
  Matrix block = q_half;
  const double scale = spectral_norm(q_half);
  for (Eigen::Index j = 0; j < d; ++j) {
    Matrix residual = block;
    if (basis.cols() > 0) residual -= basis * (basis.transpose() * block);
    if (scale > 0.0) {
      Eigen::JacobiSVD<Matrix> svd(residual, Eigen::ComputeThinU);
      const double block_scale = std::max(spectral_norm(block), scale);
      const auto& s = svd.singularValues();
      const Eigen::Index added = (s.array() > kRankTolerance * block_scale).count();
      const Eigen::Index room = d - basis.cols();
      const Eigen::Index take = std::min(added, room);
      if (take > 0) {
        Matrix grown(d, basis.cols() + take);
        grown << basis, svd.matrixU().leftCols(take);
        // Re-orthonormalize to keep the projector clean.
        Eigen::HouseholderQR<Matrix> qr(grown);
        basis = qr.householderQ() * Matrix::Identity(d, grown.cols());
      }
    }
    out.ranks.push_back(static_cast<int>(basis.cols()));
    if (!out.kappa && basis.cols() == d) out.kappa = static_cast<int>(j);
    block = b * block;
  }
  return out;
}

}  // namespace fpdecay
