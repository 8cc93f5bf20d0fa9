#pragma once

#include <functional>
#include <optional>

#include "meg/iterate.hpp"
#include "meg/linalg.hpp"

namespace meg {

/// Block application U -> G U of a (possibly stochastic) symmetric gradient.
using GradApply = std::function<Matrix(const Matrix&)>;

/// Gradient used by one step. `dense` is only needed for dense-shadow
/// computations and may be left empty.
struct GradientOracle {
  GradApply apply;
  std::function<DenseSymmetric()> dense;
};

// Exact MEG ------------------------------------------------------------------

struct ExactStep {
  DenseIterate next;
  /// Eigenvalues of log Z - eta G, non-increasing.
  Vector exponent_spectrum;
};

/// Z+ = exp(log Z - eta G) / Tr exp(log Z - eta G), via one full
/// eigendecomposition of the exponent. The exponent spectrum is shifted by its
/// maximum before exponentiating.
ExactStep exact_meg_step(const DenseIterate& z, const DenseSymmetric& grad,
                         double eta);

// Low-rank MEG ---------------------------------------------------------------

/// The map u -> (log X - eta G) u evaluated from the factors of X:
///   V log((1-eps) Lam) V^T u + log(eps/(n-r)) (u - V V^T u) - eta G u.
SymmetricOperator logmap_operator(const LowRankIterate& x, GradApply grad,
                                  double eta);

struct LowRankStep {
  LowRankIterate next;
  /// Top r+1 eigenvalues of log X - eta G, non-increasing.
  Vector top_exponents;
  /// lambda_{r+1}(Y) and b_{r+1} = sum_{i <= r+1} lambda_i(Y) for
  /// Y = exp(log X - eta G) scaled by exp(-top_exponents(0)).
  double lambda_r_plus_1 = 0.0;
  double b_r_plus_1 = 0.0;
  int lanczos_restarts = 0;
  Index lanczos_subspace = 0;
};

/// One step of the low-rank update
///   X+ = (1 - eps) Y_r / a + eps / (n - r) (I - V_r V_r^T),
/// with the top r+1 eigenpairs of log X - eta G from Lanczos. A Lanczos
/// failure is retried with a doubled subspace before propagating.
LowRankStep lowrank_meg_step(const LowRankIterate& x, const GradApply& grad,
                             double eta, double eps_next,
                             const LanczosConfig& lanczos = {});

/// Dense reference for the same update: full eigendecomposition of
/// log X - eta G and the top-r truncation. O(n^3); dense-shadow use only.
Matrix dense_lowrank_update(const DenseSymmetric& x, const DenseSymmetric& grad,
                            double eta, double eps, Index r);

// Certificates ---------------------------------------------------------------

struct CertificateValue {
  double lhs = 0.0;        // may be -inf when lambda_{r+1}(Y) = 0
  double threshold = 0.0;  // 2 eps
  bool holds = false;
};

/// log((n-r) lambda_{r+1} / (eps b_{r+1})) <= 2 eps.
CertificateValue certificate_cheap(double lambda_r_plus_1, double b_r_plus_1,
                                   double eps, Index n, Index r);

/// log((n-r) lambda_{r+1}(Y) / (eps Tr Y)) <= 2 eps from the full spectrum of
/// Y (any order, any common positive scale).
CertificateValue certificate_full(const Vector& y_spectrum, double eps,
                                  Index n, Index r);

struct CertificateRecord {
  int iteration = 0;
  CertificateValue cheap;
  std::optional<CertificateValue> full;

  /// Throws ModeError when the full certificate was not computed (no dense
  /// shadow).
  const CertificateValue& require_full() const;
};

// Initialization --------------------------------------------------------------

/// Factored form of (1 - eps0) X0 + (eps0 / n) I for X0 = V0 diag(lam0) V0^T.
/// The result has eps = eps0 (n - r) / n and renormalized weights.
LowRankIterate warm_start_wrap(const Matrix& v0, const Vector& lam0,
                               double eps0);

}  // namespace meg
