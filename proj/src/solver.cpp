#include "meg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace meg {

namespace {

void require_eps(double eps, const char* who) {
  if (!(eps > 0.0 && eps <= 0.75)) {
    std::ostringstream msg;
    msg << who << ": eps must lie in (0, 3/4], got " << eps;
    throw ParameterError(msg.str());
  }
}

// exp(mu - mu_max), floored at the smallest normal double so the result stays
// strictly positive.
Vector shifted_exp(const Vector& mu) {
  const double shift = mu.maxCoeff();
  Vector y(mu.size());
  for (Index i = 0; i < mu.size(); ++i) {
    y(i) = std::max(std::exp(mu(i) - shift),
                    std::numeric_limits<double>::min());
  }
  return y;
}

TopREigen top_pairs(const SymmetricOperator& op, Index k,
                    const LanczosConfig& cfg) {
  const Index n = op.dim();
  if (k >= n) {
    // r = n - 1: the whole spectrum is needed, so materialize.
    const SpectralDecomposition eig =
        full_eigh(DenseSymmetric(op.materialize()));
    TopREigen out;
    out.r = k;
    out.eigenvalues = eig.eigenvalues.head(k);
    out.eigenvectors = eig.eigenvectors.leftCols(k);
    out.residual_norms = Vector::Zero(k);
    out.subspace = n;
    return out;
  }
  return lanczos_top_r(op, k, cfg);
}

}  // namespace

ExactStep exact_meg_step(const DenseIterate& z, const DenseSymmetric& grad,
                         double eta) {
  if (grad.dim() != z.n()) {
    throw ParameterError("exact_meg_step: gradient dimension mismatch");
  }
  if (!(eta > 0.0)) throw ParameterError("exact_meg_step: eta must be > 0");
  const DenseSymmetric exponent(z.log() - eta * grad.matrix());
  SpectralDecomposition eig = full_eigh(exponent);
  Vector mu = eig.eigenvalues;
  Vector y = shifted_exp(mu);
  y /= y.sum();
  eig.eigenvalues = y;
  return ExactStep{DenseIterate(std::move(eig)), std::move(mu)};
}

SymmetricOperator logmap_operator(const LowRankIterate& x, GradApply grad,
                                  double eta) {
  if (!grad) throw ParameterError("logmap_operator: empty gradient");
  const double log_c = std::log(x.complement_eigenvalue());
  const Vector log_top = x.range_eigenvalues().array().log();
  return SymmetricOperator(
      x.n(), [v = x.basis(), log_top, log_c, grad = std::move(grad),
              eta](const Matrix& u) -> Matrix {
        const Matrix vu = v.transpose() * u;
        Matrix out = v * (log_top.asDiagonal() * vu);
        out += log_c * (u - v * vu);
        out -= eta * grad(u);
        return out;
      });
}

LowRankStep lowrank_meg_step(const LowRankIterate& x, const GradApply& grad,
                             double eta, double eps_next,
                             const LanczosConfig& lanczos) {
  require_eps(eps_next, "lowrank_meg_step");
  if (!(eta > 0.0)) throw ParameterError("lowrank_meg_step: eta must be > 0");
  const Index r = x.r();
  const SymmetricOperator op = logmap_operator(x, grad, eta);
  const TopREigen top = top_pairs(op, r + 1, lanczos);

  const Vector y = shifted_exp(top.eigenvalues);
  const double a = y.head(r).sum();
  Vector lam = y.head(r) / a;
  lam /= lam.sum();

  LowRankStep out{LowRankIterate(top.eigenvectors.leftCols(r), std::move(lam),
                                 eps_next),
                  top.eigenvalues, y(r), y.sum(), top.restarts, top.subspace};
  return out;
}

Matrix dense_lowrank_update(const DenseSymmetric& x, const DenseSymmetric& grad,
                            double eta, double eps, Index r) {
  const Index n = x.dim();
  if (r < 1 || r >= n) throw ParameterError("dense_lowrank_update: bad rank");
  const Matrix log_x =
      full_eigh(x).map([](double l) { return std::log(l); });
  const SpectralDecomposition eig =
      full_eigh(DenseSymmetric(log_x - eta * grad.matrix()));
  const Vector y = shifted_exp(eig.eigenvalues.head(r));
  const Matrix vr = eig.eigenvectors.leftCols(r);
  const double c = eps / static_cast<double>(n - r);
  Matrix out = vr * ((1.0 - eps) * y / y.sum()).asDiagonal() * vr.transpose();
  out += c * (Matrix::Identity(n, n) - vr * vr.transpose());
  return 0.5 * (out + out.transpose());
}

CertificateValue certificate_cheap(double lambda_r_plus_1, double b_r_plus_1,
                                   double eps, Index n, Index r) {
  if (!(b_r_plus_1 > 0.0)) {
    throw ParameterError("certificate: b must be positive");
  }
  if (lambda_r_plus_1 < 0.0) {
    throw ParameterError("certificate: lambda_{r+1} must be non-negative");
  }
  CertificateValue out;
  out.threshold = 2.0 * eps;
  if (lambda_r_plus_1 == 0.0) {
    out.lhs = -std::numeric_limits<double>::infinity();
    out.holds = true;
    return out;
  }
  out.lhs = std::log(static_cast<double>(n - r) * lambda_r_plus_1 /
                     (eps * b_r_plus_1));
  out.holds = out.lhs <= out.threshold;
  return out;
}

CertificateValue certificate_full(const Vector& y_spectrum, double eps,
                                  Index n, Index r) {
  if (y_spectrum.size() != n || r < 1 || r >= n) {
    throw ParameterError("certificate_full: need the full spectrum and r < n");
  }
  std::vector<double> s(y_spectrum.data(), y_spectrum.data() + n);
  std::sort(s.begin(), s.end(), std::greater<>());
  const double b = std::accumulate(s.begin(), s.end(), 0.0);
  return certificate_cheap(std::max(s[r], 0.0), b, eps, n, r);
}

const CertificateValue& CertificateRecord::require_full() const {
  if (!full) {
    throw ModeError(
        "full certificate requires the dense shadow (full spectrum of Y)");
  }
  return *full;
}

LowRankIterate warm_start_wrap(const Matrix& v0, const Vector& lam0,
                               double eps0) {
  require_eps(eps0, "warm_start_wrap");
  const Index n = v0.rows();
  const Index r = v0.cols();
  if (lam0.size() != r) {
    throw ParameterError("warm_start_wrap: weight count does not match rank");
  }
  if ((lam0.array() <= 0.0).any() || std::abs(lam0.sum() - 1.0) > 1e-10) {
    throw PreconditionError(
        "warm_start_wrap: weights must be positive and sum to 1");
  }
  std::vector<Index> order(r);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return lam0(i) > lam0(j); });
  Matrix v(n, r);
  Vector lam(r);
  const double eps = eps0 * static_cast<double>(n - r) / static_cast<double>(n);
  for (Index k = 0; k < r; ++k) {
    v.col(k) = v0.col(order[k]);
    lam(k) = ((1.0 - eps0) * lam0(order[k]) + eps0 / static_cast<double>(n)) /
             (1.0 - eps);
  }
  lam /= lam.sum();
  return LowRankIterate(std::move(v), std::move(lam), eps);
}

}  // namespace meg
