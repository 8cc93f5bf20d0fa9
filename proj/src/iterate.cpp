#include "meg/iterate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace meg {

LowRankIterate::LowRankIterate(Matrix v, Vector lam, double eps)
    : v_(std::move(v)), lam_(std::move(lam)), eps_(eps) {
  const Index n = v_.rows();
  const Index r = v_.cols();
  if (r < 1 || r >= n) {
    throw ParameterError("LowRankIterate: need 1 <= r < n, got r=" +
                         std::to_string(r) + ", n=" + std::to_string(n));
  }
  if (lam_.size() != r) {
    throw ParameterError("LowRankIterate: weight count does not match rank");
  }
  if (!(eps_ > 0.0 && eps_ <= 0.75)) {
    throw ParameterError("LowRankIterate: eps must lie in (0, 3/4], got " +
                         std::to_string(eps_));
  }
  const double ortho =
      (v_.transpose() * v_ - Matrix::Identity(r, r)).cwiseAbs().maxCoeff();
  if (ortho > 1e-10) {
    std::ostringstream msg;
    msg << "LowRankIterate: basis not orthonormal (|V^T V - I|_max = " << ortho
        << ")";
    throw ParameterError(msg.str());
  }
  if (std::abs(lam_.sum() - 1.0) > 1e-10) {
    std::ostringstream msg;
    msg << "LowRankIterate: weights sum to " << lam_.sum() << ", expected 1";
    throw ParameterError(msg.str());
  }
  if (!(lam_(r - 1) > 0.0)) {
    throw ParameterError("LowRankIterate: weights must be strictly positive");
  }
  for (Index i = 1; i < r; ++i) {
    if (lam_(i) > lam_(i - 1)) {
      throw ParameterError("LowRankIterate: weights must be non-increasing");
    }
  }
}

Vector LowRankIterate::spectrum() const {
  Vector s(n());
  s.head(r()) = range_eigenvalues();
  s.tail(n() - r()).setConstant(complement_eigenvalue());
  std::sort(s.data(), s.data() + s.size(), std::greater<>());
  return s;
}

double LowRankIterate::eigenvalue(Index k) const {
  if (k < 1 || k > n()) throw ParameterError("eigenvalue: index out of range");
  const double c = complement_eigenvalue();
  const Vector top = range_eigenvalues();
  // Merge without materializing the n-vector.
  Index above = 0;
  while (above < r() && top(above) >= c) ++above;
  if (k <= above) return top(k - 1);
  const Index complement = n() - r();
  if (k <= above + complement) return c;
  return top(k - complement - 1);
}

Matrix LowRankIterate::densify() const {
  const double c = complement_eigenvalue();
  Matrix x = v_ * (range_eigenvalues().array() - c).matrix().asDiagonal() *
             v_.transpose();
  x.diagonal().array() += c;
  return 0.5 * (x + x.transpose());
}

Matrix LowRankIterate::log_dense() const {
  const double lc = std::log(complement_eigenvalue());
  const Vector lt = range_eigenvalues().array().log();
  Matrix x = v_ * (lt.array() - lc).matrix().asDiagonal() * v_.transpose();
  x.diagonal().array() += lc;
  return 0.5 * (x + x.transpose());
}

Matrix LowRankIterate::apply(const Matrix& u) const {
  const double c = complement_eigenvalue();
  const Matrix vu = v_.transpose() * u;
  return v_ * ((range_eigenvalues().array() - c).matrix().asDiagonal() * vu) +
         c * u;
}

Matrix LowRankIterate::apply_log(const Matrix& u) const {
  const double lc = std::log(complement_eigenvalue());
  const Vector lt = range_eigenvalues().array().log();
  const Matrix vu = v_.transpose() * u;
  return v_ * (lt.asDiagonal() * vu) + lc * (u - v_ * vu);
}

DenseIterate::DenseIterate(const DenseSymmetric& x)
    : x_(x), eig_(full_eigh(x)) {
  validate();
}

DenseIterate::DenseIterate(SpectralDecomposition eig)
    : x_(eig.reconstruct()), eig_(std::move(eig)) {
  validate();
}

DenseIterate DenseIterate::from_lowrank(const LowRankIterate& x) {
  return DenseIterate(DenseSymmetric(x.densify()));
}

Matrix DenseIterate::log() const {
  return eig_.map([](double v) { return std::log(v); });
}

void DenseIterate::validate() const {
  const double trace = x_.matrix().trace();
  if (std::abs(trace - 1.0) > 1e-10) {
    std::ostringstream msg;
    msg << "DenseIterate: trace is " << trace << ", expected 1";
    throw ParameterError(msg.str());
  }
  const double smallest = eig_.eigenvalues(eig_.dim() - 1);
  if (!(smallest > 0.0)) {
    std::ostringstream msg;
    msg << "DenseIterate: matrix is not positive definite (lambda_min = "
        << smallest << ")";
    throw NotPsdError(msg.str());
  }
}

}  // namespace meg
