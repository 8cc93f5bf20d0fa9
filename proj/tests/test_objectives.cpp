#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "meg/quadmeas.hpp"
#include "oracles.hpp"

using namespace meg;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

std::shared_ptr<const QuadMeasInstance> shared(QuadMeasInstance inst) {
  return std::make_shared<const QuadMeasInstance>(std::move(inst));
}

LowRankIterate random_lowrank(Index n, Index r, double eps,
                              std::mt19937_64& rng) {
  return LowRankIterate(oracle::random_orthonormal(n, r, rng),
                        oracle::random_weights(r, rng), eps);
}

// Dense gradient of f(X) = 1/2 sum (a_i^T X b_i - y_i)^2 written out term by
// term.
Matrix loop_gradient(const QuadMeasInstance& inst, const Matrix& x) {
  Matrix g = Matrix::Zero(inst.n, inst.n);
  for (Index i = 0; i < inst.m; ++i) {
    const Vector a = inst.a.row(i).transpose();
    const Vector b = inst.b.row(i).transpose();
    const double r = a.dot(x * b) - inst.y(i);
    g += 0.5 * r * (a * b.transpose() + b * a.transpose());
  }
  return g;
}

double loop_value(const QuadMeasInstance& inst, const Matrix& x) {
  double s = 0.0;
  for (Index i = 0; i < inst.m; ++i) {
    const double r =
        inst.a.row(i).dot(x * inst.b.row(i).transpose()) - inst.y(i);
    s += 0.5 * r * r;
  }
  return s;
}

QuadMeasInstance truncated(QuadMeasInstance inst, Index m) {
  inst.m = m;
  inst.a = inst.a.topRows(m).eval();
  inst.b = inst.b.topRows(m).eval();
  inst.y0 = inst.y0.head(m).eval();
  inst.y = inst.y.head(m).eval();
  return inst;
}

}  // namespace

TEST_CASE("generated instances satisfy the protocol") {
  const QuadMeasInstance inst = generate_instance(100, 1, 0.5, 0.5, 3);
  CHECK(inst.m == 2000);
  CHECK(max_abs(inst.a.rowwise().norm().array() - 1.0) <= 1e-12);
  CHECK(max_abs(inst.b.rowwise().norm().array() - 1.0) <= 1e-12);
  CHECK(inst.trace_m() == doctest::Approx(100.0).epsilon(1e-10));
  CHECK(inst.ground_truth().trace() == doctest::Approx(100.0).epsilon(1e-10));
  CHECK(inst.tau == doctest::Approx(50.0).epsilon(1e-10));
  const double noise = (inst.y - inst.y0).norm();
  CHECK(std::abs(noise - 0.5 * inst.y0.norm()) <= 1e-10 * inst.y0.norm());
  CHECK(inst.y0.squaredNorm() / (inst.y - inst.y0).squaredNorm() ==
        doctest::Approx(4.0).epsilon(1e-10));
  const Vector y0 = ((inst.a * inst.ground_truth()).array() * inst.b.array())
                        .rowwise()
                        .sum();
  CHECK(max_abs(y0 - inst.y0) <= 1e-10);

  const QuadMeasInstance clean = generate_instance(20, 2, 0.0, 0.65, 4);
  CHECK(clean.m == 800);
  CHECK(clean.y == clean.y0);
  CHECK(clean.tau == doctest::Approx(13.0));

  CHECK_THROWS_AS(generate_instance(1, 1, 0.5, 0.5, 1), ParameterError);
  CHECK_THROWS_AS(generate_instance(10, 10, 0.5, 0.5, 1), ParameterError);
}

TEST_CASE("value: exact fit, structured evaluation, zero-fit probe") {
  const QuadMeasInstance clean = generate_instance(30, 2, 0.0, 1.0, 5);
  CHECK(qm_value_dense(clean, clean.ground_truth()) <= 1e-20);

  std::mt19937_64 rng(6);
  const QuadMeasInstance inst = generate_instance(50, 2, 0.5, 0.5, 7);
  for (int k = 0; k < 3; ++k) {
    const LowRankIterate x = random_lowrank(50, 3, 0.2, rng);
    const Matrix scaled = inst.tau * x.densify();
    CHECK(qm_value(inst, x) ==
          doctest::Approx(loop_value(inst, scaled)).epsilon(1e-9));
    CHECK(max_abs(qm_predictions(inst, x) - qm_predictions_dense(inst, scaled)) <=
          1e-9);
  }

  // a_i = e1, b_i = e2 and a diagonal X: every prediction is zero.
  QuadMeasInstance probe;
  probe.n = 3;
  probe.r_true = 1;
  probe.m = 4;
  probe.tau = 1.0;
  probe.v = Matrix::Identity(3, 1);
  probe.a = Matrix::Zero(4, 3);
  probe.b = Matrix::Zero(4, 3);
  probe.a.col(0).setOnes();
  probe.b.col(1).setOnes();
  probe.y0 = Vector::Zero(4);
  probe.y = Vector::LinSpaced(4, 1.0, 4.0);
  Vector d(3);
  d << 0.5, 0.3, 0.2;
  CHECK(qm_value_dense(probe, Matrix(d.asDiagonal())) ==
        doctest::Approx(0.5 * probe.y.squaredNorm()));
}

TEST_CASE("gradient application examples") {
  const QuadMeasInstance inst = generate_instance(40, 1, 0.5, 0.5, 8);
  CHECK(max_abs(qm_grad_apply(inst, Vector::Zero(inst.m), Matrix::Ones(40, 2))) ==
        0.0);

  Matrix a = Matrix::Zero(1, 3);
  Matrix b = Matrix::Zero(1, 3);
  a(0, 0) = 1;
  b(0, 1) = 1;
  Vector r(1);
  r << 2.0;
  const Matrix e1 = Matrix::Identity(3, 1);
  const Matrix out = qm_weighted_apply(a, b, r, e1);
  CHECK(out(0, 0) == 0.0);
  CHECK(out(1, 0) == 1.0);
  CHECK(out(2, 0) == 0.0);

  std::mt19937_64 rng(9);
  const Matrix x = inst.tau * oracle::random_density(40, rng);
  const Vector res = qm_predictions_dense(inst, x) - inst.y;
  const Matrix ref = loop_gradient(inst, x);
  const Matrix u = oracle::gaussian(40, 3, rng);
  CHECK(max_abs(qm_grad_apply(inst, res, u) - ref * u) <= 1e-9);
  CHECK(max_abs(qm_grad_dense(inst, res).matrix() - ref) <= 1e-9);
  const SymmetricOperator op(40, [&](const Matrix& v) {
    return qm_grad_apply(inst, res, v);
  });
  CHECK(symmetry_defect(op, 20, 1) <= 1e-8);
}

TEST_CASE("gradient matches central finite differences") {
  std::mt19937_64 rng(10);
  const QuadMeasInstance inst = generate_instance(25, 1, 0.5, 0.5, 11);
  for (int k = 0; k < 10; ++k) {
    const Matrix x = inst.tau * oracle::random_density(25, rng);
    const Matrix h = oracle::random_symmetric(25, rng);
    const double step = 1e-5;
    const double fd = (qm_value_dense(inst, x + step * h) -
                       qm_value_dense(inst, x - step * h)) /
                      (2 * step);
    const Vector res = qm_predictions_dense(inst, x) - inst.y;
    const double an = (qm_grad_dense(inst, res).matrix().cwiseProduct(h)).sum();
    CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
  }
}

TEST_CASE("scaled objective on the unit spectrahedron") {
  std::mt19937_64 rng(12);
  auto inst = shared(generate_instance(30, 2, 0.5, 0.5, 13));
  const QuadMeasObjective obj(inst, 2.0);
  CHECK(obj.smoothness_hint() == doctest::Approx(inst->tau * 2.0));
  const LowRankIterate x = random_lowrank(30, 2, 0.3, rng);
  const DenseSymmetric xd(x.densify());
  CHECK(obj.value(x) == doctest::Approx(obj.value(xd)).epsilon(1e-10));
  const Matrix gd = obj.grad_dense(x).matrix();
  CHECK(max_abs(gd - inst->tau * loop_gradient(*inst, inst->tau * xd.matrix())) <=
        1e-8);
  // Dense gradient agrees with the block apply on basis vectors.
  const Matrix id = Matrix::Identity(30, 30);
  CHECK(max_abs(obj.grad_apply(x)(id) - gd) <= 1e-10 * std::max(1.0, max_abs(gd)));
  CHECK(max_abs(obj.grad_apply(xd)(id) - obj.grad_dense(xd).matrix()) <=
        1e-10 * std::max(1.0, max_abs(gd)));
  // g(X) = f(tau X): directional derivative check.
  const Matrix h = oracle::random_symmetric(30, rng);
  const double step = 1e-6;
  const double fd = (obj.value(DenseSymmetric(xd.matrix() + step * h)) -
                     obj.value(DenseSymmetric(xd.matrix() - step * h))) /
                    (2 * step);
  CHECK(fd == doctest::Approx(gd.cwiseProduct(h).sum()).epsilon(1e-5));
}

TEST_CASE("stochastic oracle: full batch, single index, errors") {
  auto inst = shared(generate_instance(20, 1, 0.5, 0.5, 14));
  StochasticOracle oracle_(inst, inst->m, 1);
  std::mt19937_64 rng(15);
  const Vector res = Vector::NullaryExpr(inst->m, [&] {
    return std::normal_distribution<double>(0, 1)(rng);
  });
  const Matrix u = oracle::gaussian(20, 2, rng);
  const Matrix full = qm_grad_apply(*inst, res, u);
  CHECK(oracle_.gradient(res, oracle_.full_batch())(u) == full);

  const std::vector<Index> one{7};
  const Vector a = inst->a.row(7).transpose();
  const Vector b = inst->b.row(7).transpose();
  const Matrix expect = static_cast<double>(inst->m) * res(7) * 0.5 *
                        (a * b.transpose() + b * a.transpose()) * u;
  CHECK(max_abs(oracle_.gradient(res, one)(u) - expect) <= 1e-10 * max_abs(expect));

  CHECK_THROWS_AS(StochasticOracle(inst, 0, 1), ParameterError);
  StochasticOracle small(inst, 5, 3);
  const auto batch = small.sample_batch();
  CHECK(batch.size() == 5);
  CHECK(std::is_sorted(batch.begin(), batch.end()));
}

TEST_CASE("stochastic gradient is unbiased (Monte Carlo)") {
  auto inst = shared(truncated(generate_instance(20, 1, 0.5, 0.5, 16), 160));
  std::mt19937_64 rng(17);
  const Matrix x = inst->tau * oracle::random_density(20, rng);
  const Vector res = qm_predictions_dense(*inst, x) - inst->y;
  const Vector u = oracle::gaussian(20, 1, rng).col(0);
  const Vector full = qm_grad_apply(*inst, res, u);

  StochasticOracle sampler(inst, 8, 18);
  const int draws = 10000;
  Vector mean = Vector::Zero(20);
  Vector sq = Vector::Zero(20);
  for (int k = 0; k < draws; ++k) {
    const Vector g = sampler.gradient(res, sampler.sample_batch())(u);
    mean += g;
    sq += g.cwiseProduct(g);
  }
  mean /= draws;
  const Vector var = sq / draws - mean.cwiseProduct(mean);
  const Vector se = (var / draws).cwiseSqrt();
  for (Index i = 0; i < 20; ++i) {
    CHECK(std::abs(mean(i) - full(i)) <= 3.0 * se(i) + 1e-12);
  }
  CHECK((mean - full).norm() <= 3.0 * se.norm());
}

TEST_CASE("halving the batch roughly doubles the variance") {
  auto inst = shared(generate_instance(20, 1, 0.5, 0.5, 19));
  std::mt19937_64 rng(20);
  const Matrix x = inst->tau * oracle::random_density(20, rng);
  const Vector res = qm_predictions_dense(*inst, x) - inst->y;
  const Vector u = oracle::gaussian(20, 1, rng).col(0);
  const Vector full = qm_grad_apply(*inst, res, u);
  auto variance = [&](Index l, std::uint64_t seed) {
    StochasticOracle s(inst, l, seed);
    double v = 0.0;
    for (int k = 0; k < 1000; ++k) {
      v += (s.gradient(res, s.sample_batch())(u) - full).squaredNorm();
    }
    return v / 1000.0;
  };
  const double ratio = variance(16, 21) / variance(32, 22);
  CHECK(ratio >= 1.5);
  CHECK(ratio <= 2.5);
}

TEST_CASE("spectral weights") {
  Vector eig(2);
  eig << -2, -5;
  const Vector w = spectral_weights(eig, 1.0);
  CHECK(w(0) == doctest::Approx(1e-12).epsilon(1e-6));
  CHECK(w(1) == doctest::Approx(1.0 - 1e-12).epsilon(1e-15));
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-15));
  Vector one(1);
  one << 42.0;
  CHECK(spectral_weights(one, 3.0)(0) == 1.0);
}

TEST_CASE("spectral initialization pipeline") {
  const QuadMeasInstance inst = generate_instance(30, 2, 0.5, 0.5, 23);
  for (Index r : {1, 2, 4}) {
    const SpectralInit init = spectral_init(inst, r, 24);
    CHECK(init.v.cols() == r);
    CHECK(max_abs(init.v.transpose() * init.v - Matrix::Identity(r, r)) < 1e-10);
    CHECK(init.lam.minCoeff() > 0.0);
    CHECK(init.lam.sum() == doctest::Approx(1.0).epsilon(1e-14));
    const Matrix x0 = init.v * init.lam.asDiagonal() * init.v.transpose();
    const oracle::Eig e = oracle::jacobi(x0);
    CHECK(e.values.minCoeff() >= -1e-12);
    CHECK(x0.trace() == doctest::Approx(1.0).epsilon(1e-12));
    if (r < 30) CHECK(std::abs(e.values(r)) < 1e-12);
  }
  // Same seed, same result.
  CHECK(spectral_init(inst, 2, 5).v == spectral_init(inst, 2, 5).v);
}

TEST_CASE("dual gap") {
  // grad = diag(1, 2), X = diag(0, tau): gap = 2 tau - tau.
  const double tau = 3.0;
  Vector d(2);
  d << 1.0, 2.0;
  const auto grad = SymmetricOperator::from_dense(DenseSymmetric::diagonal(d));
  CHECK(dual_gap(grad, 2.0 * tau, tau) == doctest::Approx(tau).epsilon(1e-10));
  // X = tau v_n v_n^T: zero gap.
  CHECK(std::abs(dual_gap(grad, 1.0 * tau, tau)) < 1e-10);

  std::mt19937_64 rng(25);
  const QuadMeasInstance inst = generate_instance(40, 1, 0.5, 0.5, 26);
  const LowRankIterate x = random_lowrank(40, 2, 0.1, rng);
  const double structured = dual_gap(inst, x);
  const double dense = dual_gap_dense(inst, inst.tau * x.densify());
  CHECK(structured == doctest::Approx(dense).epsilon(1e-8));
  CHECK(structured >= -1e-8);
}

TEST_CASE("recovery error") {
  const QuadMeasInstance inst = generate_instance(20, 1, 0.5, 0.5, 27);
  // X = M / Tr M: perfect recovery, in factor and dense form.
  CHECK(recovery_error_factors(inst, inst.v / inst.v.norm(), Vector::Ones(1), 0.0) <
        1e-14);
  const Matrix m = inst.ground_truth();
  CHECK(recovery_error_dense(inst, inst.tau * m / inst.trace_m(), inst.tau) < 1e-24);

  // Maximally mixed X against the rank-one M.
  const Matrix mixed = Matrix::Identity(20, 20) / 20.0;
  const double ref = (inst.trace_m() * mixed - m).squaredNorm() / m.squaredNorm();
  CHECK(recovery_error_dense(inst, inst.tau * mixed, inst.tau) ==
        doctest::Approx(ref).epsilon(1e-12));
  CHECK(recovery_error_factors(inst, Matrix::Identity(20, 1), Vector::Zero(1),
                               1.0 / 20.0) == doctest::Approx(ref).epsilon(1e-12));

  std::mt19937_64 rng(28);
  const LowRankIterate x = random_lowrank(20, 3, 0.4, rng);
  const double structured = recovery_error(inst, x);
  CHECK(structured ==
        doctest::Approx(recovery_error_dense(inst, inst.tau * x.densify(), inst.tau))
            .epsilon(1e-10));
  // Invariant to (X, tau) -> (c X, c tau).
  CHECK(recovery_error_dense(inst, 3.0 * inst.tau * x.densify(), 3.0 * inst.tau) ==
        doctest::Approx(structured).epsilon(1e-10));
}

TEST_CASE("instance files round-trip bit for bit") {
  const QuadMeasInstance inst = generate_instance(15, 2, 0.5, 0.65, 29);
  const std::string path = "test_instance_roundtrip.qmi";
  save_instance(inst, path);
  const QuadMeasInstance back = load_instance(path);
  CHECK(back.n == inst.n);
  CHECK(back.r_true == inst.r_true);
  CHECK(back.m == inst.m);
  CHECK(back.seed == inst.seed);
  CHECK(back.kappa == inst.kappa);
  CHECK(back.tau == inst.tau);
  CHECK(back.v == inst.v);
  CHECK(back.a == inst.a);
  CHECK(back.b == inst.b);
  CHECK(back.y0 == inst.y0);
  CHECK(back.y == inst.y);

  {
    std::ofstream bad("test_instance_bad.qmi");
    bad << "not an instance\n";
  }
  CHECK_THROWS_AS(load_instance("test_instance_bad.qmi"), IoError);
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    std::ofstream cut("test_instance_cut.qmi", std::ios::binary);
    cut.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(load_instance("test_instance_cut.qmi"), IoError);
  CHECK_THROWS_AS(load_instance("does/not/exist.qmi"), IoError);
  std::remove(path.c_str());
  std::remove("test_instance_bad.qmi");
  std::remove("test_instance_cut.qmi");
}
