#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "meg/iterate.hpp"
#include "meg/linalg.hpp"
#include "meg/solver.hpp"

namespace meg {

/// Low-rank recovery from quadratic measurements y_i = a_i^T M b_i (+ noise)
/// with M = (sqrt(n) V)(sqrt(n) V)^T and |V|_F = 1.
struct QuadMeasInstance {
  Index n = 0;
  Index r_true = 0;
  Index m = 0;
  double kappa = 0.0;
  double tau = 0.0;
  std::uint64_t seed = 0;
  Matrix v;   // n x r_true
  Matrix a;   // m x n, unit rows
  Matrix b;   // m x n, unit rows
  Vector y0;  // clean measurements
  Vector y;   // noisy measurements

  double trace_m() const;
  Matrix ground_truth() const;
  /// a_i . b_i, recomputed on demand.
  Vector ab() const;
};

/// m = 20 n r_true measurement pairs uniform on the sphere, Gaussian V scaled
/// to unit Frobenius norm, noise kappa |y0| along a uniform unit direction and
/// tau = tau_fraction Tr(M).
QuadMeasInstance generate_instance(Index n, Index r_true, double kappa,
                                   double tau_fraction, std::uint64_t seed);

/// a_i^T (tau X) b_i for a trace-one factored X in O(m n r).
Vector qm_predictions(const QuadMeasInstance& inst, const LowRankIterate& x);
/// a_i^T X b_i for an explicit matrix X (no scaling).
Vector qm_predictions_dense(const QuadMeasInstance& inst, const Matrix& x);

/// f(X) = 1/2 sum (a_i^T X b_i - y_i)^2 at the trace-tau point tau X.
double qm_value(const QuadMeasInstance& inst, const LowRankIterate& x);
/// f at an explicit matrix, no scaling.
double qm_value_dense(const QuadMeasInstance& inst, const Matrix& x);

/// sum_i w_i sym(a_i b_i^T) U over the rows of a and b. The full and the
/// mini-batch gradients share this routine.
Matrix qm_weighted_apply(const Matrix& a, const Matrix& b, const Vector& w,
                         const Matrix& u);
/// grad f U = 1/2 (A^T diag(r) B U + B^T diag(r) A U).
Matrix qm_grad_apply(const QuadMeasInstance& inst, const Vector& residuals,
                     const Matrix& u);
DenseSymmetric qm_grad_dense(const QuadMeasInstance& inst,
                             const Vector& residuals);

/// Mini-batches of L indices drawn uniformly with replacement. The gradient
/// estimate is (m / L) sum_{i in batch} r_i sym(a_i b_i^T).
class StochasticOracle {
 public:
  StochasticOracle(std::shared_ptr<const QuadMeasInstance> inst, Index batch,
                   std::uint64_t seed);

  Index batch_size() const { return batch_; }
  /// Sorted multiset of L indices.
  std::vector<Index> sample_batch();
  /// Every index exactly once (the L = m degenerate sampler).
  std::vector<Index> full_batch() const;

  /// scale times the estimate at fixed residuals, as a block apply.
  GradApply gradient(const Vector& residuals, const std::vector<Index>& batch,
                     double scale = 1.0) const;

 private:
  std::shared_ptr<const QuadMeasInstance> inst_;
  Index batch_;
  std::mt19937_64 rng_;
};

struct SpectralInit {
  Matrix v;    // n x r
  Vector lam;  // positive, sums to one
};

/// Simplex weights from the top-r eigenvalues of -grad f(tau U U^T): the
/// negated eigenvalues are projected onto the tau-simplex, divided by tau,
/// and zero entries are lifted to 1e-12 before renormalizing.
Vector spectral_weights(const Vector& top_eigs_neg_grad, double tau);

/// X0 = V_r diag(w) V_r^T from a random unit-norm Gaussian U (n x r).
SpectralInit spectral_init(const QuadMeasInstance& inst, Index r,
                           std::uint64_t seed);

/// Tr(X grad) - tau lambda_min(grad), with lambda_min from Lanczos on -grad.
/// `inner` is Tr(X grad) for the trace-tau point X.
double dual_gap(const SymmetricOperator& grad, double inner, double tau,
                const LanczosConfig& cfg = {});
double dual_gap(const QuadMeasInstance& inst, const LowRankIterate& x,
                const LanczosConfig& cfg = {});
double dual_gap_dense(const QuadMeasInstance& inst, const Matrix& x_scaled);

/// |Tr(M) X - M|_F^2 / |M|_F^2 for trace-one X = V diag(d) V^T + c I,
/// computed from the factors.
double recovery_error_factors(const QuadMeasInstance& inst, const Matrix& v,
                              const Vector& d, double c);
double recovery_error(const QuadMeasInstance& inst, const LowRankIterate& x);
/// |(Tr(M)/tau) X - M|_F^2 / |M|_F^2 for an explicit trace-tau X.
double recovery_error_dense(const QuadMeasInstance& inst,
                            const Matrix& x_scaled, double tau);

/// The smallest r+1 eigenvalues of grad f, ascending, from Lanczos on -grad f.
Vector bottom_spectrum(const SymmetricOperator& grad, Index count,
                       const LanczosConfig& cfg = {});

/// Objective on the unit spectrahedron. Implementations map trace-one points
/// to whatever scale the underlying problem lives on.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual Index dim() const = 0;
  virtual double value(const LowRankIterate& x) const = 0;
  virtual double value(const DenseSymmetric& x) const = 0;
  virtual GradApply grad_apply(const LowRankIterate& x) const = 0;
  virtual GradApply grad_apply(const DenseSymmetric& x) const = 0;
  virtual DenseSymmetric grad_dense(const LowRankIterate& x) const = 0;
  virtual DenseSymmetric grad_dense(const DenseSymmetric& x) const = 0;
  /// Step-size scale for 1/beta steps on the unit spectrahedron.
  virtual double smoothness_hint() const = 0;
};

/// g(X) = f(tau X), grad g(X) = tau grad f(tau X). `beta` is the smoothness
/// constant of f; the hint for g is tau * beta.
class QuadMeasObjective : public Objective {
 public:
  QuadMeasObjective(std::shared_ptr<const QuadMeasInstance> inst, double beta);

  const QuadMeasInstance& instance() const { return *inst_; }
  std::shared_ptr<const QuadMeasInstance> shared_instance() const {
    return inst_;
  }
  Vector residuals(const LowRankIterate& x) const;
  Vector residuals(const DenseSymmetric& x) const;
  /// GradApply for tau grad f at fixed residuals.
  GradApply apply_from_residuals(Vector residuals) const;

  Index dim() const override { return inst_->n; }
  double value(const LowRankIterate& x) const override;
  double value(const DenseSymmetric& x) const override;
  GradApply grad_apply(const LowRankIterate& x) const override;
  GradApply grad_apply(const DenseSymmetric& x) const override;
  DenseSymmetric grad_dense(const LowRankIterate& x) const override;
  DenseSymmetric grad_dense(const DenseSymmetric& x) const override;
  double smoothness_hint() const override { return inst_->tau * beta_; }

 private:
  std::shared_ptr<const QuadMeasInstance> inst_;
  double beta_;
};

/// Bit-exact binary container with magic line "SPECMEG-QMI v1".
void save_instance(const QuadMeasInstance& inst, const std::string& path);
QuadMeasInstance load_instance(const std::string& path);

}  // namespace meg
