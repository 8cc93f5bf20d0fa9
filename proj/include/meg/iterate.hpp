#pragma once

#include "meg/linalg.hpp"

namespace meg {

/// Point of the spectrahedron stored in factored form
///
///   X = (1 - eps) V diag(lam) V^T + eps / (n - r) (I - V V^T)
///
/// with V an n x r orthonormal block, lam a non-increasing positive vector
/// summing to one and eps in (0, 3/4]. Storage is r (n + 1) + 1 scalars.
class LowRankIterate {
 public:
  LowRankIterate(Matrix v, Vector lam, double eps);

  Index n() const { return v_.rows(); }
  Index r() const { return v_.cols(); }
  const Matrix& basis() const { return v_; }
  const Vector& weights() const { return lam_; }
  double eps() const { return eps_; }

  /// Eigenvalue on the orthogonal complement of range(V).
  double complement_eigenvalue() const {
    return eps_ / static_cast<double>(n() - r());
  }
  /// Eigenvalues on range(V): (1 - eps) lam.
  Vector range_eigenvalues() const { return (1.0 - eps_) * lam_; }

  /// All n eigenvalues, non-increasing.
  Vector spectrum() const;
  /// k-th largest eigenvalue, k = 1..n.
  double eigenvalue(Index k) const;

  Matrix densify() const;
  Matrix log_dense() const;

  /// X U and log(X) U in O(n r k) for an n x k block U.
  Matrix apply(const Matrix& u) const;
  Matrix apply_log(const Matrix& u) const;

 private:
  Matrix v_;
  Vector lam_;
  double eps_;
};

/// Explicit positive definite trace-one matrix with its eigendecomposition.
class DenseIterate {
 public:
  explicit DenseIterate(const DenseSymmetric& x);
  explicit DenseIterate(SpectralDecomposition eig);

  static DenseIterate from_lowrank(const LowRankIterate& x);

  Index n() const { return x_.dim(); }
  const DenseSymmetric& matrix() const { return x_; }
  const SpectralDecomposition& eig() const { return eig_; }
  Matrix log() const;

 private:
  void validate() const;

  DenseSymmetric x_;
  SpectralDecomposition eig_;
};

}  // namespace meg
