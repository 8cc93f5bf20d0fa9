#include "meg/quadmeas.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace meg {

namespace {

Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  // Column-major fill so the stream order is fixed by the storage order.
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  }
  return out;
}

Matrix unit_rows(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
    out.row(i) /= out.row(i).norm();
  }
  return out;
}

Vector residuals_from(const Vector& pred, const Vector& y) { return pred - y; }

double half_square(const Vector& r) { return 0.5 * r.squaredNorm(); }

}  // namespace

double QuadMeasInstance::trace_m() const {
  return static_cast<double>(n) * v.squaredNorm();
}

Matrix QuadMeasInstance::ground_truth() const {
  return static_cast<double>(n) * v * v.transpose();
}

Vector QuadMeasInstance::ab() const {
  return (a.array() * b.array()).rowwise().sum();
}

QuadMeasInstance generate_instance(Index n, Index r_true, double kappa,
                                   double tau_fraction, std::uint64_t seed) {
  if (n < 2 || r_true < 1 || r_true >= n) {
    throw ParameterError("generate_instance: need n >= 2 and 1 <= r_true < n");
  }
  if (kappa < 0.0 || !(tau_fraction > 0.0)) {
    throw ParameterError(
        "generate_instance: need kappa >= 0 and tau_fraction > 0");
  }
  std::mt19937_64 rng(seed);
  QuadMeasInstance inst;
  inst.n = n;
  inst.r_true = r_true;
  inst.m = 20 * n * r_true;
  inst.kappa = kappa;
  inst.seed = seed;
  inst.v = gaussian_matrix(n, r_true, rng);
  inst.v /= inst.v.norm();
  inst.a = unit_rows(inst.m, n, rng);
  inst.b = unit_rows(inst.m, n, rng);
  const Matrix av = inst.a * inst.v;
  const Matrix bv = inst.b * inst.v;
  inst.y0 = static_cast<double>(n) * (av.array() * bv.array()).rowwise().sum();
  Vector noise = gaussian_matrix(inst.m, 1, rng).col(0);
  noise /= noise.norm();
  inst.y = inst.y0 + kappa * inst.y0.norm() * noise;
  inst.tau = tau_fraction * inst.trace_m();
  return inst;
}

Vector qm_predictions(const QuadMeasInstance& inst, const LowRankIterate& x) {
  if (x.n() != inst.n) throw ParameterError("qm_predictions: dimension");
  const Matrix p = inst.a * x.basis();
  const Matrix q = inst.b * x.basis();
  const Matrix pq = (p.array() * q.array()).matrix();
  const Vector top = pq * x.range_eigenvalues();
  const Vector captured = pq.rowwise().sum();
  const double c = x.complement_eigenvalue();
  return inst.tau * (top + c * (inst.ab() - captured));
}

Vector qm_predictions_dense(const QuadMeasInstance& inst, const Matrix& x) {
  if (x.rows() != inst.n || x.cols() != inst.n) {
    throw ParameterError("qm_predictions_dense: dimension");
  }
  return ((inst.a * x).array() * inst.b.array()).rowwise().sum();
}

double qm_value(const QuadMeasInstance& inst, const LowRankIterate& x) {
  return half_square(residuals_from(qm_predictions(inst, x), inst.y));
}

double qm_value_dense(const QuadMeasInstance& inst, const Matrix& x) {
  return half_square(residuals_from(qm_predictions_dense(inst, x), inst.y));
}

Matrix qm_weighted_apply(const Matrix& a, const Matrix& b, const Vector& w,
                         const Matrix& u) {
  const Matrix bu = w.asDiagonal() * (b * u);
  const Matrix au = w.asDiagonal() * (a * u);
  return 0.5 * (a.transpose() * bu + b.transpose() * au);
}

Matrix qm_grad_apply(const QuadMeasInstance& inst, const Vector& residuals,
                     const Matrix& u) {
  return qm_weighted_apply(inst.a, inst.b, residuals, u);
}

DenseSymmetric qm_grad_dense(const QuadMeasInstance& inst,
                             const Vector& residuals) {
  const Matrix half = inst.a.transpose() * residuals.asDiagonal() * inst.b;
  return DenseSymmetric(half);
}

StochasticOracle::StochasticOracle(std::shared_ptr<const QuadMeasInstance> inst,
                                   Index batch, std::uint64_t seed)
    : inst_(std::move(inst)), batch_(batch), rng_(seed) {
  if (!inst_) throw ParameterError("StochasticOracle: null instance");
  if (batch_ < 1) throw ParameterError("StochasticOracle: L must be >= 1");
}

std::vector<Index> StochasticOracle::sample_batch() {
  std::uniform_int_distribution<Index> pick(0, inst_->m - 1);
  std::vector<Index> out(static_cast<std::size_t>(batch_));
  for (auto& i : out) i = pick(rng_);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Index> StochasticOracle::full_batch() const {
  std::vector<Index> out(static_cast<std::size_t>(inst_->m));
  std::iota(out.begin(), out.end(), Index{0});
  return out;
}

GradApply StochasticOracle::gradient(const Vector& residuals,
                                     const std::vector<Index>& batch,
                                     double scale) const {
  if (batch.empty()) throw ParameterError("StochasticOracle: empty batch");
  const Index k = static_cast<Index>(batch.size());
  const double weight =
      static_cast<double>(inst_->m) / static_cast<double>(k);
  Matrix a(k, inst_->n);
  Matrix b(k, inst_->n);
  Vector w(k);
  for (Index j = 0; j < k; ++j) {
    const Index i = batch[static_cast<std::size_t>(j)];
    a.row(j) = inst_->a.row(i);
    b.row(j) = inst_->b.row(i);
    w(j) = residuals(i) * weight;
  }
  return [a = std::move(a), b = std::move(b), w = std::move(w),
          scale](const Matrix& u) -> Matrix {
    return scale * qm_weighted_apply(a, b, w, u);
  };
}

Vector spectral_weights(const Vector& top_eigs_neg_grad, double tau) {
  Vector w = project_simplex(-top_eigs_neg_grad, tau) / tau;
  w = w.cwiseMax(1e-12);
  return w / w.sum();
}

SpectralInit spectral_init(const QuadMeasInstance& inst, Index r,
                           std::uint64_t seed) {
  if (r < 1 || r >= inst.n) throw ParameterError("spectral_init: need 1 <= r < n");
  std::mt19937_64 rng(seed);
  Matrix u = gaussian_matrix(inst.n, r, rng);
  u /= u.norm();
  const Vector pred =
      inst.tau * ((inst.a * u).array() * (inst.b * u).array()).rowwise().sum();
  const Vector res = pred - inst.y;
  const SymmetricOperator neg_grad(
      inst.n, [&inst, res](const Matrix& x) -> Matrix {
        return -qm_grad_apply(inst, res, x);
      });
  LanczosConfig cfg;
  cfg.seed = seed;
  const TopREigen top = lanczos_top_r(neg_grad, r, cfg);
  const Vector w = spectral_weights(top.eigenvalues, inst.tau);

  std::vector<Index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return w(i) > w(j); });
  SpectralInit out{Matrix(inst.n, r), Vector(r)};
  for (Index k = 0; k < r; ++k) {
    out.v.col(k) = top.eigenvectors.col(order[static_cast<std::size_t>(k)]);
    out.lam(k) = w(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

Vector bottom_spectrum(const SymmetricOperator& grad, Index count,
                       const LanczosConfig& cfg) {
  const SymmetricOperator neg(grad.dim(), [&grad](const Matrix& u) -> Matrix {
    return -grad.apply(u);
  });
  const TopREigen top = lanczos_top_r(neg, count, cfg);
  return -top.eigenvalues;
}

double dual_gap(const SymmetricOperator& grad, double inner, double tau,
                const LanczosConfig& cfg) {
  const double lam_min = bottom_spectrum(grad, 1, cfg)(0);
  return inner - tau * lam_min;
}

double dual_gap(const QuadMeasInstance& inst, const LowRankIterate& x,
                const LanczosConfig& cfg) {
  const Vector pred = qm_predictions(inst, x);
  const Vector res = pred - inst.y;
  const SymmetricOperator grad(inst.n, [&inst, &res](const Matrix& u) {
    return qm_grad_apply(inst, res, u);
  });
  return dual_gap(grad, res.dot(pred), inst.tau, cfg);
}

double dual_gap_dense(const QuadMeasInstance& inst, const Matrix& x_scaled) {
  const Vector pred = qm_predictions_dense(inst, x_scaled);
  const Vector res = pred - inst.y;
  const SpectralDecomposition eig = full_eigh(qm_grad_dense(inst, res));
  return res.dot(pred) - x_scaled.trace() * eig.eigenvalues(inst.n - 1);
}

double recovery_error_factors(const QuadMeasInstance& inst, const Matrix& v,
                              const Vector& d, double c) {
  const double s = inst.trace_m();
  const double n = static_cast<double>(inst.n);
  const Matrix w = std::sqrt(n) * inst.v;
  const double s_norm2 =
      s * s * (d.squaredNorm() + 2.0 * c * d.sum() + c * c * n);
  const Matrix wv = w.transpose() * v;  // r_true x r
  const double cross =
      s * ((wv.array().square().colwise().sum().matrix() * d)(0) +
           c * w.squaredNorm());
  const double m_norm2 = (w.transpose() * w).squaredNorm();
  return std::max(s_norm2 - 2.0 * cross + m_norm2, 0.0) / m_norm2;
}

double recovery_error(const QuadMeasInstance& inst, const LowRankIterate& x) {
  const double c = x.complement_eigenvalue();
  const Vector d = x.range_eigenvalues().array() - c;
  return recovery_error_factors(inst, x.basis(), d, c);
}

double recovery_error_dense(const QuadMeasInstance& inst,
                            const Matrix& x_scaled, double tau) {
  const Matrix m = inst.ground_truth();
  return ((inst.trace_m() / tau) * x_scaled - m).squaredNorm() /
         m.squaredNorm();
}

QuadMeasObjective::QuadMeasObjective(
    std::shared_ptr<const QuadMeasInstance> inst, double beta)
    : inst_(std::move(inst)), beta_(beta) {
  if (!inst_) throw ParameterError("QuadMeasObjective: null instance");
  if (!(beta_ > 0.0)) throw ParameterError("QuadMeasObjective: beta must be > 0");
}

Vector QuadMeasObjective::residuals(const LowRankIterate& x) const {
  return qm_predictions(*inst_, x) - inst_->y;
}

Vector QuadMeasObjective::residuals(const DenseSymmetric& x) const {
  return qm_predictions_dense(*inst_, inst_->tau * x.matrix()) - inst_->y;
}

GradApply QuadMeasObjective::apply_from_residuals(Vector residuals) const {
  return [inst = inst_, res = std::move(residuals)](const Matrix& u) -> Matrix {
    return inst->tau * qm_weighted_apply(inst->a, inst->b, res, u);
  };
}

double QuadMeasObjective::value(const LowRankIterate& x) const {
  return half_square(residuals(x));
}

double QuadMeasObjective::value(const DenseSymmetric& x) const {
  return half_square(residuals(x));
}

GradApply QuadMeasObjective::grad_apply(const LowRankIterate& x) const {
  return apply_from_residuals(residuals(x));
}

GradApply QuadMeasObjective::grad_apply(const DenseSymmetric& x) const {
  return apply_from_residuals(residuals(x));
}

DenseSymmetric QuadMeasObjective::grad_dense(const LowRankIterate& x) const {
  return DenseSymmetric(inst_->tau *
                        qm_grad_dense(*inst_, residuals(x)).matrix());
}

DenseSymmetric QuadMeasObjective::grad_dense(const DenseSymmetric& x) const {
  return DenseSymmetric(inst_->tau *
                        qm_grad_dense(*inst_, residuals(x)).matrix());
}

}  // namespace meg
