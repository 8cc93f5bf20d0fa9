#include "meg/harness.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "meg/diagnostics.hpp"
#include "meg/entropy.hpp"

namespace meg {

namespace {

enum Stream : std::uint64_t {
  kInitStream = 1,
  kLanczosStream = 2,
  kBatchStream = 3,
  kBoundStream = 4,
  kUniformStream = 5,
  kDualStream = 6,
};

using Clock = std::chrono::steady_clock;

std::int64_t nanos_since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() -
                                                              start)
      .count();
}

double default_beta(const RunConfig& cfg) {
  return cfg.beta ? *cfg.beta
                  : 0.4 * std::sqrt(static_cast<double>(cfg.r * cfg.n));
}

LanczosConfig lanczos_for(const RunConfig& cfg, std::uint64_t stream,
                          std::uint64_t index) {
  LanczosConfig out = cfg.lanczos;
  out.seed = derive_seed(cfg.seed, stream, index);
  return out;
}

// Everything the dense shadow derives from one full eigendecomposition of
// log X_t - eta grad.
struct ShadowStep {
  CertificateValue full;
  double deviation = 0.0;
  double sqrt_bregman = 0.0;
  double log_gap = 0.0;
};

ShadowStep shadow_step(const LowRankIterate& x, const DenseSymmetric& grad,
                       double eta, const LowRankIterate& next) {
  const Index n = x.n();
  const Index r = x.r();
  const double eps = next.eps();
  const SpectralDecomposition eig =
      full_eigh(DenseSymmetric(x.log_dense() - eta * grad.matrix()));
  const Vector& mu = eig.eigenvalues;
  Vector y = (mu.array() - mu(0)).exp();

  ShadowStep out;
  out.full = certificate_full(y, eps, n, r);

  const Matrix vr = eig.eigenvectors.leftCols(r);
  const Vector top = y.head(r) / y.head(r).sum();
  const double c = eps / static_cast<double>(n - r);
  Matrix update = vr * ((1.0 - eps) * top).asDiagonal() * vr.transpose();
  update += c * (Matrix::Identity(n, n) - vr * vr.transpose());
  out.deviation = (next.densify() - update).cwiseAbs().maxCoeff();

  // Exact step Z from the same point.
  const double log_b = std::log(y.sum());
  Vector z = y / y.sum();
  z = z.cwiseMax(std::numeric_limits<double>::min());
  z /= z.sum();
  const DenseIterate zi(SpectralDecomposition{z, eig.eigenvectors});
  out.sqrt_bregman =
      std::sqrt(std::max(bregman_structured(zi, next).value, 0.0));
  const Vector log_z = mu.array() - mu(0) - log_b;
  const Matrix log_zm =
      eig.eigenvectors * log_z.asDiagonal() * eig.eigenvectors.transpose();
  out.log_gap =
      full_eigh(DenseSymmetric(log_zm - next.log_dense())).eigenvalues(0);
  return out;
}

double spectral_norm_op(const SymmetricOperator& op, const LanczosConfig& cfg) {
  const double top = lanczos_top_r(op, 1, cfg).eigenvalues(0);
  const SymmetricOperator neg(op.dim(),
                              [&op](const Matrix& u) -> Matrix {
                                return -op.apply(u);
                              });
  const double bottom = -lanczos_top_r(neg, 1, cfg).eigenvalues(0);
  return std::max(std::abs(top), std::abs(bottom));
}

[[noreturn]] void rethrow_at(int t, const NumericalError& e) {
  std::ostringstream msg;
  msg << "iteration " << t << ": " << e.what();
  throw NumericalError(msg.str());
}

// Low-rank and lockstep loop shared by both gradient modes.
RunRecord run_lowrank(const RunConfig& cfg) {
  const auto inst = resolve_instance(cfg);
  const QuadMeasObjective obj(inst, default_beta(cfg));
  const Index n = inst->n;
  const Index r = cfg.r;
  const bool shadow = cfg.dense_shadow || cfg.mode == Mode::kLockstep;
  const bool stochastic = cfg.grad == GradMode::kStochastic;

  RunRecord rec;
  const SpectralInit init =
      spectral_init(*inst, r, derive_seed(cfg.seed, kInitStream));
  rec.summary.init_error =
      recovery_error_factors(*inst, init.v, init.lam, 0.0);

  const double eps0 = eps_schedule_eval(cfg.eps, 0);
  LowRankIterate x = warm_start_wrap(init.v, init.lam, eps0);
  std::optional<DenseIterate> w;
  if (cfg.mode == Mode::kLockstep) w.emplace(DenseIterate::from_lowrank(x));

  std::optional<StochasticOracle> oracle;
  StepConfig step;
  if (cfg.eta) {
    step = FixedStep{*cfg.eta};
  } else if (stochastic) {
    // G: largest spectral norm of the scaled estimate over a few batches at X1.
    StochasticOracle probe(inst, cfg.batch, derive_seed(cfg.seed, kBoundStream));
    const Vector res = obj.residuals(x);
    double g = 0.0;
    const int samples = cfg.full_batch ? 1 : 20;
    for (int k = 0; k < samples; ++k) {
      const auto batch =
          cfg.full_batch ? probe.full_batch() : probe.sample_batch();
      const SymmetricOperator op(n, probe.gradient(res, batch, inst->tau));
      g = std::max(g, spectral_norm_op(op, lanczos_for(cfg, kBoundStream, k)));
    }
    rec.summary.gradient_bound = g;
    step = StochasticFixedStep{*cfg.r0, g, std::max(cfg.T, 1)};
  } else {
    step = OneOverBeta{obj.smoothness_hint()};
  }
  if (stochastic) {
    oracle.emplace(inst, cfg.full_batch ? inst->m : cfg.batch,
                   derive_seed(cfg.seed, kBatchStream));
  }
  rec.summary.eta = step_eval(step, 1);

  auto lambda_rsp1 = [&](const LowRankIterate& it) {
    return cfg.r_true + 1 <= n ? it.eigenvalue(cfg.r_true + 1) : 0.0;
  };

  RunRow row0;
  row0.t = 0;
  row0.f_value = obj.value(x);
  row0.eps = eps0;
  row0.lambda_rsp1 = lambda_rsp1(x);
  if (w) row0.bregman_to_exact = bregman_structured(*w, x).value;
  rec.rows.push_back(row0);

  double sum_f = 0.0;
  Vector sum_pred = Vector::Zero(inst->m);
  double sum_sqrt = 0.0;
  double sum_gap = 0.0;
  double max_dev = 0.0;

  for (int t = 1; t <= cfg.T; ++t) {
    const auto start = Clock::now();
    RunRow row;
    row.t = t;
    row.eps = eps_schedule_eval(cfg.eps, t);
    const double eta = step_eval(step, t);
    row.eta = eta;

    const Vector res = obj.residuals(x);
    if (stochastic) {
      sum_f += 0.5 * res.squaredNorm();
      sum_pred += res + inst->y;
    }
    GradApply grad;
    if (stochastic) {
      const auto batch =
          cfg.full_batch ? oracle->full_batch() : oracle->sample_batch();
      grad = oracle->gradient(res, batch, inst->tau);
    } else {
      grad = obj.apply_from_residuals(res);
    }

    LowRankStep ls = [&] {
      try {
        return lowrank_meg_step(x, grad, eta, row.eps,
                                lanczos_for(cfg, kLanczosStream, t));
      } catch (const NumericalError& e) {
        rethrow_at(t, e);
      }
    }();
    rec.summary.lanczos_restarts += ls.lanczos_restarts;
    const CertificateValue cheap =
        certificate_cheap(ls.lambda_r_plus_1, ls.b_r_plus_1, row.eps, n, r);
    row.cert_cheap_lhs = cheap.lhs;
    row.cert_cheap_holds = cheap.holds;

    if (shadow) {
      const DenseSymmetric gd(
          stochastic ? SymmetricOperator(n, grad).materialize()
                     : obj.grad_dense(x).matrix());
      const ShadowStep sh = shadow_step(x, gd, eta, ls.next);
      row.cert_full_lhs = sh.full.lhs;
      row.cert_full_holds = sh.full.holds;
      row.shadow_deviation = sh.deviation;
      max_dev = std::max(max_dev, sh.deviation);
      sum_sqrt += sh.sqrt_bregman;
      sum_gap += sh.log_gap;
    }
    if (w) {
      const DenseSymmetric gw = obj.grad_dense(w->matrix());
      w.emplace(exact_meg_step(*w, gw, eta).next);
      row.bregman_to_exact = bregman_structured(*w, ls.next).value;
    }

    x = std::move(ls.next);
    row.f_value = obj.value(x);
    row.lambda_rsp1 = lambda_rsp1(x);
    row.elapsed_ns = nanos_since(start);
    rec.rows.push_back(row);
  }

  RunSummary& s = rec.summary;
  s.final_f = rec.rows.back().f_value;
  s.recovery_error = recovery_error(*inst, x);
  const Vector res = obj.residuals(x);
  const SymmetricOperator grad_f(n, [&](const Matrix& u) {
    return qm_grad_apply(*inst, res, u);
  });
  s.dual_gap = dual_gap(grad_f, res.dot(res + inst->y), inst->tau,
                        lanczos_for(cfg, kDualStream, 0));
  if (r + 1 < n) {
    const Vector bottom =
        bottom_spectrum(grad_f, r + 1, lanczos_for(cfg, kDualStream, 1));
    s.grad_gap = bottom(r) - bottom(0);
  } else {
    const SpectralDecomposition eig = full_eigh(qm_grad_dense(*inst, res));
    s.grad_gap = spectral_gap_from_bottom(eig.eigenvalues, r);
  }
  for (const RunRow& row : rec.rows) {
    if (!s.first_cert_cheap && row.cert_cheap_holds.value_or(false)) {
      s.first_cert_cheap = row.t;
    }
    if (!s.first_cert_full && row.cert_full_holds.value_or(false)) {
      s.first_cert_full = row.t;
    }
  }
  if (shadow && cfg.T > 0) {
    s.max_shadow_deviation = max_dev;
    s.sum_sqrt_bregman_step = sum_sqrt;
    s.sum_log_gap_bound = sum_gap;
  }
  if (w) s.final_bregman_to_exact = rec.rows.back().bregman_to_exact;
  if (stochastic && cfg.T > 0) {
    const double tt = static_cast<double>(cfg.T);
    s.avg_f = sum_f / tt;
    s.f_of_average = 0.5 * (sum_pred / tt - inst->y).squaredNorm();
    std::mt19937_64 rng(derive_seed(cfg.seed, kUniformStream));
    std::uniform_int_distribution<int> pick(1, cfg.T);
    const int idx = pick(rng);
    s.uniform_index = idx;
    s.f_uniform = rec.rows[static_cast<std::size_t>(idx - 1)].f_value;
  }
  return rec;
}

RunRecord run_exact(const RunConfig& cfg) {
  const auto inst = resolve_instance(cfg);
  const QuadMeasObjective obj(inst, default_beta(cfg));
  const Index n = inst->n;

  RunRecord rec;
  const SpectralInit init =
      spectral_init(*inst, cfg.r, derive_seed(cfg.seed, kInitStream));
  rec.summary.init_error =
      recovery_error_factors(*inst, init.v, init.lam, 0.0);
  const double eps0 = eps_schedule_eval(cfg.eps, 0);
  DenseIterate w =
      DenseIterate::from_lowrank(warm_start_wrap(init.v, init.lam, eps0));
  const StepConfig step = cfg.eta ? StepConfig{FixedStep{*cfg.eta}}
                                  : StepConfig{OneOverBeta{obj.smoothness_hint()}};
  rec.summary.eta = step_eval(step, 1);

  auto lambda_rsp1 = [&](const DenseIterate& it) {
    return cfg.r_true < n ? it.eig().eigenvalues(cfg.r_true) : 0.0;
  };
  RunRow row0;
  row0.f_value = obj.value(w.matrix());
  row0.eps = eps0;
  row0.lambda_rsp1 = lambda_rsp1(w);
  rec.rows.push_back(row0);

  for (int t = 1; t <= cfg.T; ++t) {
    const auto start = Clock::now();
    RunRow row;
    row.t = t;
    row.eps = eps_schedule_eval(cfg.eps, t);
    row.eta = step_eval(step, t);
    try {
      w = exact_meg_step(w, obj.grad_dense(w.matrix()), *row.eta).next;
    } catch (const NumericalError& e) {
      rethrow_at(t, e);
    }
    row.f_value = obj.value(w.matrix());
    row.lambda_rsp1 = lambda_rsp1(w);
    row.elapsed_ns = nanos_since(start);
    rec.rows.push_back(row);
  }

  RunSummary& s = rec.summary;
  s.final_f = rec.rows.back().f_value;
  const Matrix scaled = inst->tau * w.matrix().matrix();
  s.recovery_error = recovery_error_dense(*inst, scaled, inst->tau);
  s.dual_gap = dual_gap_dense(*inst, scaled);
  const Vector res = qm_predictions_dense(*inst, scaled) - inst->y;
  s.grad_gap = spectral_gap_from_bottom(
      full_eigh(qm_grad_dense(*inst, res)).eigenvalues, cfg.r);
  return rec;
}

}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::kExact: return "exact";
    case Mode::kLowRank: return "lowrank";
    case Mode::kLockstep: return "lockstep";
  }
  return "?";
}

std::string to_string(GradMode g) {
  return g == GradMode::kDeterministic ? "deterministic" : "stochastic";
}

Mode parse_mode(const std::string& s) {
  if (s == "exact") return Mode::kExact;
  if (s == "lowrank") return Mode::kLowRank;
  if (s == "lockstep") return Mode::kLockstep;
  throw ConfigError("unknown mode '" + s + "' (exact|lowrank|lockstep)");
}

GradMode parse_grad_mode(const std::string& s) {
  if (s == "deterministic") return GradMode::kDeterministic;
  if (s == "stochastic") return GradMode::kStochastic;
  throw ConfigError("unknown gradient mode '" + s +
                    "' (deterministic|stochastic)");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                          std::uint64_t index) {
  // splitmix64 over a mix of the three words.
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1) +
                    0xBF58476D1CE4E5B9ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void RunConfig::validate() const {
  const Index dim = instance ? instance->n : n;
  const Index rt = instance ? instance->r_true : r_true;
  if (dim < 2) throw ConfigError("n must be >= 2");
  if (r < 1 || r >= dim) throw ConfigError("r must satisfy 1 <= r < n");
  if (rt < 1 || rt >= dim) throw ConfigError("rank-true must satisfy 1 <= r < n");
  if (T < 0) throw ConfigError("T must be >= 0");
  if (!instance && (kappa < 0.0 || !(tau_fraction > 0.0))) {
    throw ConfigError("need kappa >= 0 and tau-frac > 0");
  }
  if (beta && !(*beta > 0.0)) throw ConfigError("beta must be > 0");
  if (eta && !(*eta > 0.0)) throw ConfigError("eta must be > 0");
  try {
    meg::validate(eps);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  if (mode == Mode::kLockstep && !dense_shadow) {
    throw ConfigError("lockstep mode requires the dense shadow");
  }
  if ((dense_shadow || mode != Mode::kLowRank) && dim > dense_cap) {
    std::ostringstream msg;
    msg << "dense computations are capped at n <= " << dense_cap << " (n = "
        << dim << ")";
    throw ConfigError(msg.str());
  }
  if (grad == GradMode::kStochastic) {
    if (mode != Mode::kLowRank) {
      throw ConfigError("stochastic gradients run in lowrank mode only");
    }
    if (batch < 1) throw ConfigError("L must be >= 1");
    if (!eta && !(r0 && *r0 > 0.0)) {
      throw ConfigError("stochastic mode needs R0 > 0 or a fixed eta");
    }
  }
}

std::shared_ptr<const QuadMeasInstance> resolve_instance(const RunConfig& cfg) {
  if (cfg.instance) return cfg.instance;
  return std::make_shared<const QuadMeasInstance>(generate_instance(
      cfg.n, cfg.r_true, cfg.kappa, cfg.tau_fraction, cfg.seed));
}

RunRecord run_deterministic(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.grad = GradMode::kDeterministic;
  c.validate();
  return c.mode == Mode::kExact ? run_exact(c) : run_lowrank(c);
}

RunRecord run_stochastic(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.grad = GradMode::kStochastic;
  c.validate();
  return run_lowrank(c);
}

RunRecord run(const RunConfig& cfg) {
  return cfg.grad == GradMode::kStochastic ? run_stochastic(cfg)
                                           : run_deterministic(cfg);
}

}  // namespace meg
