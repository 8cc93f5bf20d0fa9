#include "meg/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

namespace meg {

namespace {

Vector gaussian_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = gauss(rng);
  return v;
}

// Classical Gram-Schmidt against the first `cols` columns of q, applied twice.
void orthogonalize_against(const Matrix& q, Index cols, Vector& w) {
  if (cols == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    const Vector coeffs = q.leftCols(cols).transpose() * w;
    w.noalias() -= q.leftCols(cols) * coeffs;
  }
}

}  // namespace

DenseSymmetric::DenseSymmetric(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw ParameterError("DenseSymmetric: matrix is " +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", expected square");
  }
  a_ = 0.5 * (a + a.transpose());
}

DenseSymmetric DenseSymmetric::diagonal(const Vector& d) {
  return DenseSymmetric(Matrix(d.asDiagonal()));
}

DenseSymmetric DenseSymmetric::identity(Index n) {
  return DenseSymmetric(Matrix::Identity(n, n));
}

Matrix SpectralDecomposition::map(
    const std::function<double(double)>& f) const {
  Vector fv(eigenvalues.size());
  for (Index i = 0; i < eigenvalues.size(); ++i) fv(i) = f(eigenvalues(i));
  return eigenvectors * fv.asDiagonal() * eigenvectors.transpose();
}

Matrix SpectralDecomposition::reconstruct() const {
  return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
}

SpectralDecomposition full_eigh(const DenseSymmetric& a) {
  const Index n = a.dim();
  if (n < 1) throw ParameterError("full_eigh: empty matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix());
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "full_eigh: QR iteration did not converge for n=" << n;
    const Matrix& v = solver.eigenvectors();
    if (v.allFinite()) {
      const double residual =
          (a.matrix() * v - v * solver.eigenvalues().asDiagonal())
              .cwiseAbs()
              .maxCoeff();
      msg << " (residual " << residual << ")";
    }
    throw NumericalError(msg.str());
  }
  SpectralDecomposition out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

SymmetricOperator::SymmetricOperator(Index dim, BlockApply apply)
    : dim_(dim), apply_(std::move(apply)) {
  if (dim_ < 1) throw ParameterError("SymmetricOperator: dim must be >= 1");
  if (!apply_) throw ParameterError("SymmetricOperator: empty apply");
}

SymmetricOperator SymmetricOperator::from_dense(const DenseSymmetric& a) {
  Matrix m = a.matrix();
  return SymmetricOperator(a.dim(),
                           [m = std::move(m)](const Matrix& u) -> Matrix {
                             return m * u;
                           });
}

Matrix SymmetricOperator::apply(const Matrix& block) const {
  if (block.rows() != dim_) {
    throw ParameterError("SymmetricOperator: block has " +
                         std::to_string(block.rows()) + " rows, expected " +
                         std::to_string(dim_));
  }
  return apply_(block);
}

Vector SymmetricOperator::apply_vector(const Vector& v) const {
  return apply(Matrix(v)).col(0);
}

Matrix SymmetricOperator::materialize() const {
  return apply(Matrix::Identity(dim_, dim_));
}

double symmetry_defect(const SymmetricOperator& op, int pairs,
                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double norm_est = 0.0;
  std::vector<double> raw;
  raw.reserve(pairs);
  for (int k = 0; k < pairs; ++k) {
    const Vector u = gaussian_vector(op.dim(), rng);
    const Vector v = gaussian_vector(op.dim(), rng);
    const Vector au = op.apply_vector(u);
    const Vector av = op.apply_vector(v);
    norm_est = std::max({norm_est, au.norm() / u.norm(), av.norm() / v.norm()});
    raw.push_back(std::abs(u.dot(av) - v.dot(au)) / (u.norm() * v.norm()));
  }
  if (norm_est == 0.0) return 0.0;
  return *std::max_element(raw.begin(), raw.end()) / norm_est;
}

namespace {

// One thick-restart run with a fixed Krylov dimension k.
TopREigen lanczos_fixed(const SymmetricOperator& op, Index r, Index k,
                        const LanczosConfig& cfg) {
  const Index n = op.dim();
  std::mt19937_64 rng(cfg.seed);
  Matrix q(n, k);
  Matrix aq(n, k);
  Index filled = 0;
  Vector next = gaussian_vector(n, rng);

  for (int cycle = 0;; ++cycle) {
    while (filled < k) {
      Vector w = next;
      const double w0 = w.norm();
      orthogonalize_against(q, filled, w);
      if (!(w.norm() > 1e-10 * w0)) {
        // Invariant subspace reached; continue from a fresh direction.
        bool found = false;
        for (int attempt = 0; attempt < 3 && !found; ++attempt) {
          w = gaussian_vector(n, rng);
          const double g0 = w.norm();
          orthogonalize_against(q, filled, w);
          found = w.norm() > 1e-8 * g0;
        }
        if (!found) break;
      }
      q.col(filled) = w / w.norm();
      aq.col(filled) = op.apply_vector(q.col(filled));
      next = aq.col(filled);
      ++filled;
    }

    Matrix h = q.leftCols(filled).transpose() * aq.leftCols(filled);
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> ritz(h);
    if (ritz.info() != Eigen::Success) {
      throw NumericalError("lanczos_top_r: Rayleigh-Ritz eigensolve failed");
    }
    const Vector theta = ritz.eigenvalues().reverse();
    const Matrix s = ritz.eigenvectors().rowwise().reverse();

    TopREigen result;
    result.r = r;
    result.restarts = cycle;
    result.subspace = k;
    result.norm_estimate = theta.cwiseAbs().maxCoeff();
    result.eigenvalues = theta.head(r);
    result.eigenvectors = q.leftCols(filled) * s.leftCols(r);
    const Matrix ay = aq.leftCols(filled) * s.leftCols(r);
    result.residual_norms.resize(r);
    for (Index i = 0; i < r; ++i) {
      result.residual_norms(i) =
          (ay.col(i) - theta(i) * result.eigenvectors.col(i)).norm();
    }
    const double limit = cfg.tol * result.norm_estimate;
    if ((result.residual_norms.array() <= limit).all()) return result;

    if (cycle >= cfg.max_restarts) {
      std::ostringstream msg;
      msg << "lanczos_top_r: no convergence after " << cycle
          << " restarts (n=" << n << ", r=" << r << ", subspace=" << k
          << ", worst residual " << result.residual_norms.maxCoeff()
          << ", limit " << limit << ")";
      throw LanczosError(msg.str(), std::move(result));
    }

    // Thick restart: keep the leading Ritz vectors and continue the Krylov
    // sequence from the residual direction of the last basis vector.
    Vector f = aq.col(filled - 1);
    orthogonalize_against(q, filled, f);
    const Index keep =
        std::min<Index>(filled - 1, std::max<Index>(r + 1, (filled + r) / 2));
    const Matrix qk = q.leftCols(filled) * s.leftCols(keep);
    const Matrix aqk = aq.leftCols(filled) * s.leftCols(keep);
    q.leftCols(keep) = qk;
    aq.leftCols(keep) = aqk;
    filled = keep;
    next = f;
  }
}

}  // namespace

TopREigen lanczos_top_r(const SymmetricOperator& op, Index r,
                        const LanczosConfig& cfg) {
  const Index n = op.dim();
  if (r < 1 || r >= n) {
    throw ParameterError("lanczos_top_r: need 1 <= r < n, got r=" +
                         std::to_string(r) + ", n=" + std::to_string(n));
  }
  Index k = cfg.subspace > 0 ? cfg.subspace : std::max<Index>(2 * r + 10, 30);
  k = std::clamp<Index>(k, r + 1, n);
  int restarts = 0;
  for (;;) {
    try {
      TopREigen out = lanczos_fixed(op, r, k, cfg);
      out.restarts += restarts;
      return out;
    } catch (const LanczosError& e) {
      if (!cfg.grow_subspace || k >= n) throw;
      restarts += e.best().restarts;
      k = std::min<Index>(2 * k, n);
    }
  }
}

TopREigen lanczos_top_r(const SymmetricOperator& op, Index r, double tol,
                        int max_iter, std::uint64_t seed) {
  LanczosConfig cfg;
  cfg.tol = tol;
  cfg.max_restarts = max_iter;
  cfg.seed = seed;
  return lanczos_top_r(op, r, cfg);
}

Vector project_simplex(const Vector& z, double tau) {
  const Index r = z.size();
  if (r < 1) throw ParameterError("project_simplex: empty vector");
  if (!(tau > 0.0)) throw ParameterError("project_simplex: tau must be > 0");
  std::vector<double> u(z.data(), z.data() + r);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Index j = 0; j < r; ++j) {
    cumsum += u[j];
    const double candidate = (cumsum - tau) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  return (z.array() - theta).max(0.0).matrix();
}

Matrix orthonormalize(const Matrix& b) {
  Matrix q(b.rows(), b.cols());
  for (Index j = 0; j < b.cols(); ++j) {
    Vector v = b.col(j);
    const double v0 = v.norm();
    orthogonalize_against(q, j, v);
    const double vn = v.norm();
    if (v0 == 0.0 || !(vn > 1e-10 * v0)) {
      throw NumericalError("orthonormalize: column " + std::to_string(j) +
                           " is linearly dependent on the preceding columns");
    }
    q.col(j) = v / vn;
  }
  return q;
}

}  // namespace meg
