#include "meg/entropy.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace meg {

namespace {

// Mass below this fraction of Tr(X) on a null direction of Y is rounding.
constexpr double kMassTolerance = 1e-12;

double xlogx_sum(const Vector& eigenvalues) {
  double s = 0.0;
  for (Index i = 0; i < eigenvalues.size(); ++i) {
    const double l = eigenvalues(i);
    if (l > kEigenClamp) s += l * std::log(l);
  }
  return s;
}

// Accumulates -sum_j mass_j log(mu_j) into `out`, tracking clamp and
// infinity semantics.
void add_cross_term(double mu, double mass, double trace_x, BregmanValue& out) {
  const bool has_mass = mass > kMassTolerance * std::max(trace_x, 1.0);
  if (mu <= 0.0) {
    if (has_mass) out.finite = false;
    return;
  }
  if (mu <= kEigenClamp) {
    if (has_mass) out.clamp_influenced = true;
    out.value -= mass * std::log(kEigenClamp);
    return;
  }
  out.value -= mass * std::log(mu);
}

BregmanValue finalize(BregmanValue v) {
  if (!v.finite) v.value = std::numeric_limits<double>::infinity();
  return v;
}

double structured_xlogx(const LowRankIterate& x) {
  double s = xlogx_sum(x.range_eigenvalues());
  const double c = x.complement_eigenvalue();
  s += static_cast<double>(x.n() - x.r()) * c * std::log(c);
  return s;
}

}  // namespace

double von_neumann_entropy(const DenseSymmetric& x) {
  const SpectralDecomposition eig = full_eigh(x);
  const double norm = std::max(std::abs(eig.eigenvalues(0)),
                               std::abs(eig.eigenvalues(eig.dim() - 1)));
  const double smallest = eig.eigenvalues(eig.dim() - 1);
  if (smallest < -1e-8 * norm) {
    std::ostringstream msg;
    msg << "von_neumann_entropy: matrix is not PSD (lambda_min = " << smallest
        << ")";
    throw NotPsdError(msg.str());
  }
  double trace = 0.0;
  for (Index i = 0; i < eig.dim(); ++i) {
    trace += std::max(eig.eigenvalues(i), 0.0);
  }
  return xlogx_sum(eig.eigenvalues) - trace;
}

BregmanValue bregman(const SpectralDecomposition& x,
                     const SpectralDecomposition& y) {
  if (x.dim() != y.dim()) throw ParameterError("bregman: dimension mismatch");
  BregmanValue out;
  out.value = xlogx_sum(x.eigenvalues);
  const Matrix c = y.eigenvectors.transpose() * x.eigenvectors;
  const Vector lx = x.eigenvalues.cwiseMax(0.0);
  const Vector mass = c.array().square().matrix() * lx;
  const double trace_x = lx.sum();
  for (Index j = 0; j < y.dim(); ++j) {
    add_cross_term(y.eigenvalues(j), mass(j), trace_x, out);
  }
  return finalize(out);
}

BregmanValue bregman(const DenseSymmetric& x, const DenseSymmetric& y) {
  return bregman(full_eigh(x), full_eigh(y));
}

BregmanValue bregman(const DenseIterate& x, const DenseIterate& y) {
  return bregman(x.eig(), y.eig());
}

namespace {

BregmanValue structured_cross(double xlogx, const Vector& range_mass,
                              double trace_x, const Vector& range_eigs,
                              double complement_eig) {
  BregmanValue out;
  out.value = xlogx;
  for (Index i = 0; i < range_eigs.size(); ++i) {
    add_cross_term(range_eigs(i), range_mass(i), trace_x, out);
  }
  add_cross_term(complement_eig, trace_x - range_mass.sum(), trace_x, out);
  return finalize(out);
}

}  // namespace

BregmanValue bregman_structured(const DenseSymmetric& x, const Matrix& v,
                                const Vector& lam, double eps) {
  const Index n = x.dim();
  const Index r = v.cols();
  if (v.rows() != n || lam.size() != r || r >= n) {
    throw ParameterError("bregman_structured: inconsistent factor shapes");
  }
  const Vector range_mass =
      (v.transpose() * x.matrix() * v).diagonal();
  const SpectralDecomposition ex = full_eigh(x);
  return structured_cross(xlogx_sum(ex.eigenvalues), range_mass,
                          x.matrix().trace(), (1.0 - eps) * lam,
                          eps / static_cast<double>(n - r));
}

BregmanValue bregman_structured(const DenseSymmetric& x,
                                const LowRankIterate& y) {
  return bregman_structured(x, y.basis(), y.weights(), y.eps());
}

BregmanValue bregman_structured(const DenseIterate& x,
                                const LowRankIterate& y) {
  if (x.n() != y.n()) {
    throw ParameterError("bregman_structured: dimension mismatch");
  }
  const Matrix& v = y.basis();
  const Vector range_mass =
      (v.transpose() * x.matrix().matrix() * v).diagonal();
  return structured_cross(xlogx_sum(x.eig().eigenvalues), range_mass, 1.0,
                          y.range_eigenvalues(), y.complement_eigenvalue());
}

BregmanValue bregman_structured(const LowRankIterate& x,
                                const LowRankIterate& y) {
  if (x.n() != y.n()) {
    throw ParameterError("bregman_structured: dimension mismatch");
  }
  // v_i^T X v_i = (1-eps_x) sum_k lam_k (v_i.u_k)^2 + c_x (1 - sum_k (v_i.u_k)^2)
  const Matrix overlap = (y.basis().transpose() * x.basis()).array().square();
  const Vector captured = overlap.rowwise().sum();
  const Vector range_mass =
      overlap * x.range_eigenvalues() +
      x.complement_eigenvalue() * (Vector::Ones(y.r()) - captured);
  return structured_cross(structured_xlogx(x), range_mass, 1.0,
                          y.range_eigenvalues(), y.complement_eigenvalue());
}

double nuclear_distance(const DenseSymmetric& x, const DenseSymmetric& y) {
  return full_eigh(DenseSymmetric(x.matrix() - y.matrix()))
      .eigenvalues.cwiseAbs()
      .sum();
}

double spectral_norm(const DenseSymmetric& a) {
  return full_eigh(a).eigenvalues.cwiseAbs().maxCoeff();
}

}  // namespace meg
