#include "meg/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace meg {

namespace {

constexpr double kRankTolerance = 1e-10;

Index numerical_rank(const Vector& eigs) {
  const double top = std::max(eigs(0), 0.0);
  Index k = 0;
  for (Index i = 0; i < eigs.size(); ++i) {
    if (eigs(i) > kRankTolerance * top) ++k;
  }
  return k;
}

}  // namespace

void DiagnosticsParams::validate() const {
  if (delta < 0.0 || g < 0.0 || beta < 0.0 || xi < 0.0 || sigma < 0.0) {
    throw ParameterError("diagnostics: parameters must be non-negative");
  }
  if (r_star < 1) throw ParameterError("diagnostics: r_star must be >= 1");
  if (!(lam_rstar > 0.0)) {
    throw ParameterError("diagnostics: lam_rstar must be > 0");
  }
}

double radius_factor(const DiagnosticsParams& p) {
  p.validate();
  const double weight =
      1.0 + 2.0 * std::sqrt(2.0 * static_cast<double>(p.r_star)) / p.lam_rstar;
  const double denom = 2.0 * p.beta + weight * p.g;
  if (!(denom > 0.0)) {
    throw ParameterError("diagnostics: beta and G cannot both be zero");
  }
  return p.delta / denom;
}

RadiusBound radius_bound(const DiagnosticsParams& p, double eta,
                         double eps_prev, double eps) {
  if (!(eta > 0.0) || !(eps > 0.0) || !(eps_prev > 0.0)) {
    throw ParameterError("radius_bound: eta and eps must be positive");
  }
  DiagnosticsParams unit = p;
  unit.delta = 1.0;
  const double inv = radius_factor(unit);
  const double slack =
      p.delta - std::log(eps_prev / eps) / eta + 2.0 * eps / eta - 2.0 * p.xi;
  RadiusBound out;
  out.value = inv * slack / std::sqrt(2.0);
  out.vacuous = !(out.value > 0.0);
  return out;
}

double r0_deterministic(const DiagnosticsParams& p) {
  return 0.25 * radius_factor(p);
}

double r0_deterministic_general(const DiagnosticsParams& p) {
  const double r0 = r0_deterministic(p);
  return p.beta > 0.0 ? std::min(r0, p.g / p.beta) : r0;
}

double r0_stochastic(const DiagnosticsParams& p) {
  return 0.125 * radius_factor(p);
}

WarmStartCheck warm_start_check(const DenseSymmetric& x0,
                                const DenseSymmetric& xstar, double eps,
                                double radius) {
  const Index n = x0.dim();
  if (xstar.dim() != n) {
    throw ParameterError("warm_start_check: dimension mismatch");
  }
  if (!(eps > 0.0)) throw ParameterError("warm_start_check: eps must be > 0");
  const SpectralDecomposition ex = full_eigh(x0);
  const SpectralDecomposition es = full_eigh(xstar);
  WarmStartCheck out;
  out.rank_x0 = numerical_rank(ex.eigenvalues);
  out.rank_xstar = numerical_rank(es.eigenvalues);
  if (out.rank_x0 < out.rank_xstar) {
    throw PreconditionError("warm_start_check: rank(X0) < rank(X*)");
  }
  const Index r0 = out.rank_x0;
  const Index rs = out.rank_xstar;
  const Matrix vx = ex.eigenvectors.leftCols(r0);
  const Matrix vs = es.eigenvectors.leftCols(rs);

  // Tr(X* log X*) - Tr(X* V_X log(Lam_X) V_X^T)
  double entropy_term = 0.0;
  for (Index i = 0; i < rs; ++i) {
    const double l = es.eigenvalues(i);
    entropy_term += l * std::log(l);
  }
  const Vector captured = (vx.transpose() * xstar.matrix() * vx).diagonal();
  for (Index j = 0; j < r0; ++j) {
    entropy_term -= captured(j) * std::log(ex.eigenvalues(j));
  }

  const double lam1 = es.eigenvalues(0);
  const double log_ratio = std::log(static_cast<double>(n) / eps);
  const double overlap = (vs.transpose() * vx).squaredNorm();
  out.lhs_highrank = entropy_term +
                     lam1 * log_ratio * (static_cast<double>(rs) - overlap) +
                     4.0 * eps;
  out.pass_highrank = out.lhs_highrank <= radius * radius;

  if (r0 == rs) {
    const double lam_r = es.eigenvalues(rs - 1);
    const double dist2 = (xstar.matrix() - x0.matrix()).squaredNorm();
    const double lhs = entropy_term +
                       2.0 * lam1 / (lam_r * lam_r) * log_ratio * dist2 +
                       4.0 * eps;
    out.lhs_equalrank = lhs;
    out.pass_equalrank = lhs <= radius * radius;
  }
  return out;
}

double spectral_gap_from_bottom(const Vector& spectrum, Index r) {
  const Index n = spectrum.size();
  if (r < 0 || r >= n) {
    throw ParameterError("spectral_gap_from_bottom: need 0 <= r < n");
  }
  return spectrum(n - 1 - r) - spectrum(n - 1);
}

}  // namespace meg
