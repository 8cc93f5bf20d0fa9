#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>

#include "meg/errors.hpp"

namespace meg {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Real symmetric n x n matrix. Symmetry is exact: the constructor stores
/// (A + A^T) / 2.
class DenseSymmetric {
 public:
  DenseSymmetric() = default;
  explicit DenseSymmetric(const Matrix& a);

  static DenseSymmetric diagonal(const Vector& d);
  static DenseSymmetric identity(Index n);

  Index dim() const { return a_.rows(); }
  const Matrix& matrix() const { return a_; }
  double operator()(Index i, Index j) const { return a_(i, j); }

 private:
  Matrix a_;
};

/// Eigenpairs with eigenvalues sorted non-increasing and eigenvectors stored
/// column-wise in the same order.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;

  Index dim() const { return eigenvalues.size(); }

  /// V f(Lambda) V^T for a scalar function f.
  Matrix map(const std::function<double(double)>& f) const;
  Matrix reconstruct() const;
};

/// Full symmetric eigendecomposition (Householder tridiagonalization followed
/// by implicit-shift QR on the tridiagonal). Throws NumericalError when the
/// iteration fails to converge.
SpectralDecomposition full_eigh(const DenseSymmetric& a);

/// Symmetric linear map known only through its action on n x k blocks.
class SymmetricOperator {
 public:
  using BlockApply = std::function<Matrix(const Matrix&)>;

  SymmetricOperator(Index dim, BlockApply apply);

  static SymmetricOperator from_dense(const DenseSymmetric& a);

  Index dim() const { return dim_; }
  Matrix apply(const Matrix& block) const;
  Vector apply_vector(const Vector& v) const;

  /// Applies the operator to the identity. Test and small-n use only.
  Matrix materialize() const;

 private:
  Index dim_;
  BlockApply apply_;
};

/// Largest value of |<u, A v> - <v, A u>| / (|u| |v| |A|_est) over random
/// Gaussian pairs. |A|_est is the largest observed |A w| / |w|.
double symmetry_defect(const SymmetricOperator& op, int pairs,
                       std::uint64_t seed);

struct TopREigen {
  Index r = 0;
  Vector eigenvalues;     // algebraically largest first
  Matrix eigenvectors;    // n x r, orthonormal
  Vector residual_norms;  // |A v_i - lambda_i v_i|
  double norm_estimate = 0.0;
  int restarts = 0;
  Index subspace = 0;
};

struct LanczosConfig {
  double tol = 1e-10;    // relative to the operator-norm estimate
  int max_restarts = 5;
  Index subspace = 0;    // 0 selects min(n, max(2r + 10, 30))
  std::uint64_t seed = 0;
  /// On failure, retry with a doubled subspace until it reaches n. When
  /// false, a failed run throws LanczosError straight away.
  bool grow_subspace = true;
};

class LanczosError : public NumericalError {
 public:
  LanczosError(const std::string& what, TopREigen best)
      : NumericalError(what), best_(std::move(best)) {}
  const TopREigen& best() const { return best_; }

 private:
  TopREigen best_;
};

/// The r algebraically largest eigenpairs of a symmetric operator, computed by
/// thick-restarted Lanczos with full reorthogonalization.
///
/// Converged pairs satisfy |A v - lambda v| <= tol * |A|_est. Throws
/// ParameterError unless 1 <= r < n and LanczosError (carrying the best pairs
/// found) when the restarts are exhausted at the largest allowed subspace.
TopREigen lanczos_top_r(const SymmetricOperator& op, Index r,
                        const LanczosConfig& cfg = {});
TopREigen lanczos_top_r(const SymmetricOperator& op, Index r, double tol,
                        int max_iter, std::uint64_t seed);

/// Euclidean projection of z onto {w >= 0, sum(w) = tau}.
Vector project_simplex(const Vector& z, double tau);

/// Orthonormal basis for the column space of b, column order preserved
/// (Gram-Schmidt with reorthogonalization). Throws NumericalError naming the
/// first linearly dependent column.
Matrix orthonormalize(const Matrix& b);

}  // namespace meg
