#pragma once

#include "meg/iterate.hpp"
#include "meg/linalg.hpp"

namespace meg {

/// Eigenvalues at or below this value are treated as the clamp when a
/// logarithm is needed, and as exact zeros under the 0 log 0 = 0 convention.
inline constexpr double kEigenClamp = 1e-300;

/// Tr(X log X - X log Y) on trace-one arguments. `finite` is false when X
/// puts mass on an eigendirection where Y has a non-positive eigenvalue.
struct BregmanValue {
  double value = 0.0;
  bool finite = true;
  bool clamp_influenced = false;
};

/// Tr(X log X - X) computed on the spectrum. Throws NotPsdError for an
/// eigenvalue below -1e-8 |X|_2.
double von_neumann_entropy(const DenseSymmetric& x);

BregmanValue bregman(const DenseSymmetric& x, const DenseSymmetric& y);
BregmanValue bregman(const SpectralDecomposition& x,
                     const SpectralDecomposition& y);
BregmanValue bregman(const DenseIterate& x, const DenseIterate& y);

/// Bregman distance to a factored iterate using the closed-form log of Y.
/// O(n^2 r) for a dense X and O(n r^2) for a factored X.
BregmanValue bregman_structured(const DenseSymmetric& x,
                                const LowRankIterate& y);
BregmanValue bregman_structured(const DenseIterate& x, const LowRankIterate& y);
BregmanValue bregman_structured(const LowRankIterate& x,
                                const LowRankIterate& y);

/// Same as above for Y given by raw factors (v, lam, eps). eps = 0 is
/// accepted: the result is infinite unless range(X) lies in range(v).
BregmanValue bregman_structured(const DenseSymmetric& x, const Matrix& v,
                                const Vector& lam, double eps);

/// Sum of singular values of X - Y.
double nuclear_distance(const DenseSymmetric& x, const DenseSymmetric& y);
/// Largest singular value.
double spectral_norm(const DenseSymmetric& a);

}  // namespace meg
