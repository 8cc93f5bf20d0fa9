#include <doctest.h>

#include <random>

#include "meg/linalg.hpp"
#include "oracles.hpp"

using namespace meg;

namespace {

bool non_increasing(const Vector& v) {
  for (Index i = 1; i < v.size(); ++i)
    if (v(i) > v(i - 1)) return false;
  return true;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("full_eigh on a diagonal matrix sorts and permutes") {
  Vector d(3);
  d << 3, 1, 2;
  const SpectralDecomposition e = full_eigh(DenseSymmetric::diagonal(d));
  CHECK(e.eigenvalues(0) == doctest::Approx(3));
  CHECK(e.eigenvalues(1) == doctest::Approx(2));
  CHECK(e.eigenvalues(2) == doctest::Approx(1));
  CHECK(std::abs(e.eigenvectors(0, 0)) == doctest::Approx(1));
  CHECK(std::abs(e.eigenvectors(2, 1)) == doctest::Approx(1));
  CHECK(std::abs(e.eigenvectors(1, 2)) == doctest::Approx(1));
}

TEST_CASE("full_eigh on the identity") {
  const SpectralDecomposition e = full_eigh(DenseSymmetric::identity(7));
  CHECK(max_abs(e.eigenvalues.array() - 1.0) < 1e-14);
  CHECK(max_abs(e.eigenvectors.transpose() * e.eigenvectors -
                Matrix::Identity(7, 7)) < 1e-12);
}

TEST_CASE("full_eigh reconstructs random symmetric matrices") {
  std::mt19937_64 rng(11);
  for (Index n : {1, 2, 5, 50, 120}) {
    const Matrix a = oracle::random_symmetric(n, rng);
    const SpectralDecomposition e = full_eigh(DenseSymmetric(a));
    CHECK(non_increasing(e.eigenvalues));
    CHECK(max_abs(e.eigenvectors.transpose() * e.eigenvectors -
                  Matrix::Identity(n, n)) <= 1e-10);
    CHECK(max_abs(e.reconstruct() - a) <= 1e-8 * std::max(1.0, max_abs(a)));
    const oracle::Eig ref = oracle::jacobi(a);
    CHECK(max_abs(e.eigenvalues - ref.values) < 1e-10 * std::max(1.0, max_abs(a)));
  }
}

TEST_CASE("DenseSymmetric symmetrizes its input") {
  Matrix a(2, 2);
  a << 1, 2, 4, 3;
  const DenseSymmetric s(a);
  CHECK(s(0, 1) == s(1, 0));
  CHECK(s(0, 1) == 3.0);
}

TEST_CASE("lanczos on diag(5,4,3,2,1) returns the two largest pairs") {
  Vector d(5);
  d << 5, 4, 3, 2, 1;
  const auto op = SymmetricOperator::from_dense(DenseSymmetric::diagonal(d));
  const TopREigen top = lanczos_top_r(op, 2, 1e-10, 5, 3);
  REQUIRE(top.eigenvalues.size() == 2);
  CHECK(top.eigenvalues(0) == doctest::Approx(5).epsilon(1e-12));
  CHECK(top.eigenvalues(1) == doctest::Approx(4).epsilon(1e-12));
  CHECK(std::abs(top.eigenvectors(0, 0)) == doctest::Approx(1).epsilon(1e-10));
  CHECK(std::abs(top.eigenvectors(1, 1)) == doctest::Approx(1).epsilon(1e-10));
}

TEST_CASE("lanczos picks algebraically largest eigenvalues") {
  const Index n = 40;
  Vector d(n);
  for (Index i = 0; i < n; ++i) d(i) = -static_cast<double>(i + 1);
  const auto op = SymmetricOperator::from_dense(DenseSymmetric::diagonal(d));
  const TopREigen top = lanczos_top_r(op, 1, 1e-10, 5, 1);
  CHECK(top.eigenvalues(0) == doctest::Approx(-1).epsilon(1e-12));
  CHECK(std::abs(top.eigenvectors(0, 0)) == doctest::Approx(1).epsilon(1e-10));
}

TEST_CASE("lanczos matches the dense spectrum on random operators") {
  std::mt19937_64 rng(5);
  struct Case { Index n, r; };
  for (Case c : {Case{100, 5}, Case{30, 1}, Case{60, 20}, Case{200, 3},
                 Case{12, 11}, Case{150, 40}}) {
    CAPTURE(c.n);
    CAPTURE(c.r);
    const Matrix a = oracle::random_symmetric(c.n, rng);
    const auto op = SymmetricOperator::from_dense(DenseSymmetric(a));
    LanczosConfig cfg;
    cfg.seed = 9;
    const TopREigen top = lanczos_top_r(op, c.r, cfg);
    const oracle::Eig ref = oracle::jacobi(a);
    CHECK(max_abs(top.eigenvalues - ref.values.head(c.r)) <= 1e-8);
    CHECK(non_increasing(top.eigenvalues));
    CHECK(max_abs(top.eigenvectors.transpose() * top.eigenvectors -
                  Matrix::Identity(c.r, c.r)) <= 1e-10);
    CHECK(top.residual_norms.maxCoeff() <= 1e-10 * top.norm_estimate * 1.0001);
    CHECK(oracle::subspace_distance(top.eigenvectors,
                                    ref.vectors.leftCols(c.r)) <= 1e-6);
  }
}

TEST_CASE("lanczos is deterministic given the seed") {
  std::mt19937_64 rng(8);
  const Matrix a = oracle::random_symmetric(80, rng);
  const auto op = SymmetricOperator::from_dense(DenseSymmetric(a));
  const TopREigen x = lanczos_top_r(op, 4, 1e-10, 5, 42);
  const TopREigen y = lanczos_top_r(op, 4, 1e-10, 5, 42);
  CHECK(x.eigenvalues == y.eigenvalues);
  CHECK(x.eigenvectors == y.eigenvectors);
}

TEST_CASE("lanczos rejects r >= n and reports failure with the best pairs") {
  const auto op = SymmetricOperator::from_dense(DenseSymmetric::identity(4));
  CHECK_THROWS_AS(lanczos_top_r(op, 4, 1e-10, 5, 0), ParameterError);
  CHECK_THROWS_AS(lanczos_top_r(op, 0, 1e-10, 5, 0), ParameterError);

  std::mt19937_64 rng(2);
  const Matrix a = oracle::random_symmetric(300, rng);
  const auto big = SymmetricOperator::from_dense(DenseSymmetric(a));
  LanczosConfig cfg;
  cfg.tol = 1e-17;
  cfg.max_restarts = 0;
  cfg.subspace = 12;
  cfg.grow_subspace = false;
  try {
    lanczos_top_r(big, 3, cfg);
    FAIL("expected LanczosError");
  } catch (const LanczosError& e) {
    CHECK(e.best().eigenvalues.size() == 3);
    CHECK(e.best().residual_norms.size() == 3);
  }
}

TEST_CASE("lanczos grows the subspace on clustered spectra") {
  std::mt19937_64 rng(21);
  const Matrix a = oracle::random_symmetric(200, rng);
  const auto op = SymmetricOperator::from_dense(DenseSymmetric(a));
  LanczosConfig fixed;
  fixed.grow_subspace = false;
  CHECK_THROWS_AS(lanczos_top_r(op, 10, fixed), LanczosError);
  const TopREigen top = lanczos_top_r(op, 10);
  CHECK(top.subspace > 30);
  const oracle::Eig e = oracle::jacobi(a);
  CHECK((top.eigenvalues - e.values.head(10)).cwiseAbs().maxCoeff() <=
        1e-8 * e.values.cwiseAbs().maxCoeff());
}

TEST_CASE("symmetry defect is tiny for dense-wrapped operators") {
  std::mt19937_64 rng(3);
  const auto op =
      SymmetricOperator::from_dense(DenseSymmetric(oracle::random_symmetric(30, rng)));
  CHECK(symmetry_defect(op, 20, 1) <= 1e-8);
  const SymmetricOperator skew(2, [](const Matrix& u) -> Matrix {
    Matrix a(2, 2);
    a << 0, 1, -1, 0;
    return a * u;
  });
  CHECK(symmetry_defect(skew, 20, 1) > 1e-3);
}

TEST_CASE("project_simplex examples") {
  Vector z(2);
  z << 0.2, 0.3;
  Vector w = project_simplex(z, 1.0);
  CHECK(w(0) == doctest::Approx(0.45));
  CHECK(w(1) == doctest::Approx(0.55));
  z << 2, -1;
  w = project_simplex(z, 1.0);
  CHECK(w(0) == doctest::Approx(1.0));
  CHECK(w(1) == 0.0);
  z << 0.25, 0.75;
  CHECK(max_abs(project_simplex(z, 1.0) - z) < 1e-15);
}

TEST_CASE("project_simplex agrees with the KKT oracle and beats feasible points") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd(0.0, 2.0);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const Index r = 1 + trial % 5;
    const double tau = 0.1 + 3.0 * ud(rng);
    Vector z(r);
    for (Index i = 0; i < r; ++i) z(i) = nd(rng);
    const Vector w = project_simplex(z, tau);
    CHECK(w.minCoeff() >= 0.0);
    CHECK(std::abs(w.sum() - tau) <= 1e-12 * std::max(1.0, tau));
    CHECK(max_abs(w - oracle::simplex_kkt(z, tau)) <= 1e-10);
    const double best = (w - z).norm();
    for (int k = 0; k < 50; ++k) {
      Vector p(r);
      for (Index i = 0; i < r; ++i) p(i) = -std::log(ud(rng) + 1e-300);
      p *= tau / p.sum();
      CHECK(best <= (p - z).norm() + 1e-12);
    }
  }
}

TEST_CASE("orthonormalize examples") {
  const Matrix id = Matrix::Identity(6, 6).leftCols(3);
  CHECK(max_abs(orthonormalize(id) - id) < 1e-15);

  Matrix b = Matrix::Zero(3, 2);
  b(0, 0) = 1;
  b(0, 1) = 1;
  b(1, 1) = 1;
  const Matrix q = orthonormalize(b);
  CHECK(std::abs(q(0, 0)) == doctest::Approx(1));
  CHECK(std::abs(q(1, 1)) == doctest::Approx(1));
  CHECK(std::abs(q(0, 1)) < 1e-15);

  std::mt19937_64 rng(4);
  const Matrix g = oracle::gaussian(30, 4, rng);
  const Matrix qq = orthonormalize(g);
  CHECK(max_abs(qq.transpose() * qq - Matrix::Identity(4, 4)) <= 1e-12);
  // Same span: compare projectors against one built from a QR oracle.
  Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix ref = qr.householderQ() * Matrix::Identity(30, 4);
  CHECK(max_abs(qq * qq.transpose() - ref * ref.transpose()) <= 1e-10);
}

TEST_CASE("orthonormalize names the dependent column") {
  Matrix b = Matrix::Zero(4, 3);
  b(0, 0) = 1;
  b(1, 1) = 1;
  b.col(2) = b.col(0) + 2 * b.col(1);
  try {
    orthonormalize(b);
    FAIL("expected an error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}
