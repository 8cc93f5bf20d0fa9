#pragma once

#include <optional>

#include "meg/linalg.hpp"

namespace meg {

/// Problem constants used by the radius and warm-start diagnostics. None of
/// them is observable in a production run; callers supply estimates.
struct DiagnosticsParams {
  double delta = 0.0;      // strict complementarity gap
  Index r_star = 1;        // rank of the reference optimum
  double lam_rstar = 1.0;  // its smallest non-zero eigenvalue
  double g = 1.0;          // bound on the gradient spectral norm
  double beta = 1.0;       // smoothness
  double xi = 0.0;         // per-step gradient error bound
  double sigma = 0.0;      // stochastic variance bound
  Index minibatch = 1;

  void validate() const;
};

struct RadiusBound {
  double value = 0.0;
  /// True when the bound is not positive, i.e. it guarantees nothing.
  bool vacuous = false;
};

/// Radius of the Bregman ball around X* inside which the low-rank step
/// coincides with the exact one:
///   (1/sqrt2) [2 beta + (1 + 2 sqrt(2 r*) / lam_r*) G]^-1
///     (delta - log(eps_prev / eps) / eta + 2 eps / eta - 2 xi).
RadiusBound radius_bound(const DiagnosticsParams& p, double eta,
                         double eps_prev, double eps);

/// [2 beta + (1 + 2 sqrt(2 r*) / lam_r*) G]^-1 delta, the common factor of
/// the initialization-radius presets below.
double radius_factor(const DiagnosticsParams& p);
/// R0 presets of the deterministic (rank r*), deterministic (rank >= r*) and
/// stochastic convergence results.
double r0_deterministic(const DiagnosticsParams& p);
double r0_deterministic_general(const DiagnosticsParams& p);
double r0_stochastic(const DiagnosticsParams& p);

struct WarmStartCheck {
  double lhs_highrank = 0.0;
  bool pass_highrank = false;
  std::optional<double> lhs_equalrank;
  bool pass_equalrank = false;
  Index rank_x0 = 0;
  Index rank_xstar = 0;
};

/// Both warm-start conditions for a candidate X0 against a known optimum X*.
/// Ranks are counted with eigenvalues above 1e-10 lam_1. Throws
/// PreconditionError when rank(X0) < rank(X*).
WarmStartCheck warm_start_check(const DenseSymmetric& x0,
                                const DenseSymmetric& xstar, double eps,
                                double radius);

/// lambda_{n-r} - lambda_n for a spectrum sorted non-increasing.
double spectral_gap_from_bottom(const Vector& spectrum, Index r);

}  // namespace meg
