// meg_run: drive the low-rank / exact MEG solvers on quadratic-measurement
// instances and reproduce the experiment tables.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>

#include "meg/harness.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kNumerical = 3 };

struct Options {
  std::string mode = "lowrank";
  std::string grad = "deterministic";
  std::string schedule = "experiment";
  meg::Index n = 100;
  meg::Index r = 0;  // 0: same as rank-true
  meg::Index rank_true = 1;
  int T = 200;
  double kappa = 0.5;
  double tau_frac = 0.5;
  double c = 10.0;
  double eps0 = 1.0;
  double g = 1.0;
  double beta = 0.0;
  double eta = 0.0;
  double r0 = 0.0;
  meg::Index L = 64;
  bool full_batch = false;
  std::uint64_t seed = 1;
  bool dense_shadow = false;
  meg::Index dense_cap = 400;
  std::string out;
  std::string instance;
  std::string save_instance;
  int trials = 20;
  std::string table;
  std::vector<meg::Index> n_list;
  unsigned threads = 0;
};

meg::EpsilonSchedule make_schedule(const Options& o) {
  if (o.schedule == "experiment") return meg::ExperimentSchedule{o.c};
  if (o.schedule == "cubic_det") return meg::CubicDet{o.eps0, o.g, o.c};
  if (o.schedule == "cubic_det_general") {
    return meg::CubicDetGeneral{o.eps0, o.g, o.c};
  }
  if (o.schedule == "quadratic_stoch") return meg::QuadraticStoch{o.eps0, o.c};
  throw meg::ConfigError("unknown schedule '" + o.schedule + "'");
}

meg::RunConfig make_config(const Options& o) {
  meg::RunConfig cfg;
  cfg.mode = meg::parse_mode(o.mode);
  cfg.grad = meg::parse_grad_mode(o.grad);
  cfg.n = o.n;
  cfg.r_true = o.rank_true;
  cfg.r = o.r > 0 ? o.r : o.rank_true;
  cfg.T = o.T;
  cfg.kappa = o.kappa;
  cfg.tau_fraction = o.tau_frac;
  cfg.eps = make_schedule(o);
  if (o.beta > 0.0) cfg.beta = o.beta;
  if (o.eta > 0.0) cfg.eta = o.eta;
  if (o.r0 > 0.0) cfg.r0 = o.r0;
  cfg.batch = o.L;
  cfg.full_batch = o.full_batch;
  cfg.seed = o.seed;
  cfg.dense_cap = o.dense_cap;
  cfg.dense_shadow = o.dense_shadow || cfg.mode == meg::Mode::kLockstep;
  if (!o.instance.empty()) {
    auto inst = std::make_shared<const meg::QuadMeasInstance>(
        meg::load_instance(o.instance));
    cfg.n = inst->n;
    cfg.r_true = inst->r_true;
    if (o.r == 0) cfg.r = inst->r_true;
    cfg.instance = std::move(inst);
  }
  return cfg;
}

int run_table(const Options& o) {
  meg::TableOptions topt;
  if (!o.n_list.empty()) {
    topt.n_list = o.n_list;
  } else {
    topt.n_list = {o.n};
  }
  topt.trials = o.trials;
  topt.seed = o.seed;
  topt.T = o.T;
  topt.threads = o.threads;
  const meg::TableReport report =
      meg::reproduce_table(meg::parse_table_id(o.table), topt);
  const std::string text = report.format();
  std::cout << text;
  if (!o.out.empty()) {
    std::ofstream f(o.out);
    if (!f) throw meg::IoError(o.out + ": cannot open for writing");
    f << text;
  }
  return kOk;
}

int run_single(const Options& o) {
  const meg::RunConfig cfg = make_config(o);
  cfg.validate();
  if (!o.save_instance.empty()) {
    meg::save_instance(*meg::resolve_instance(cfg), o.save_instance);
  }
  const meg::RunRecord rec = meg::run(cfg);
  if (o.out.empty()) {
    meg::write_metrics(rec, std::cout);
  } else {
    meg::emit_metrics(rec, o.out);
  }
  for (const auto& [key, value] : rec.summary.items()) {
    std::cerr << key << " = " << value << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank matrix exponentiated gradient runs"};
  Options o;
  app.set_config("--config", "", "key = value file; flags override it");
  app.add_option("--mode", o.mode, "exact | lowrank | lockstep")
      ->check(CLI::IsMember({"exact", "lowrank", "lockstep"}));
  app.add_option("--grad", o.grad, "deterministic | stochastic")
      ->check(CLI::IsMember({"deterministic", "stochastic"}));
  app.add_option("--schedule", o.schedule,
                 "experiment | cubic_det | cubic_det_general | quadratic_stoch");
  app.add_option("--n", o.n, "dimension")->check(CLI::PositiveNumber);
  app.add_option("--r", o.r, "SVD rank (default: rank-true)");
  app.add_option("--rank-true", o.rank_true, "rank of the planted matrix");
  app.add_option("--T", o.T, "iterations")->check(CLI::NonNegativeNumber);
  app.add_option("--kappa", o.kappa, "noise level");
  app.add_option("--tau-frac", o.tau_frac, "tau / Tr(M)");
  app.add_option("--c", o.c, "schedule offset c");
  app.add_option("--eps0", o.eps0, "schedule scale eps0");
  app.add_option("--G", o.g, "gradient bound used by the cubic schedules");
  app.add_option("--beta", o.beta, "smoothness of f (default 0.4 sqrt(r n))");
  app.add_option("--eta", o.eta, "fixed step size override");
  app.add_option("--R0", o.r0, "radius for the stochastic step R0/(2 G sqrt T)");
  app.add_option("--L", o.L, "mini-batch size");
  app.add_flag("--full-batch", o.full_batch, "stochastic mode with L = m");
  app.add_option("--seed", o.seed, "base seed");
  app.add_flag("--dense-shadow", o.dense_shadow,
               "dense recomputation and full certificate (small n)");
  app.add_option("--dense-cap", o.dense_cap, "largest n for dense work");
  app.add_option("--out", o.out, "metrics CSV (or table text) path");
  app.add_option("--instance", o.instance, "load an instance file");
  app.add_option("--save-instance", o.save_instance, "write the instance");
  app.add_option("--trials", o.trials, "trials per table cell");
  app.add_option("--table", o.table,
                 "t1_rank1 | t2_rank5 | t3_rank20 | t4_certs | t5_overrank");
  app.add_option("--n-list", o.n_list, "dimensions for --table")
      ->delimiter(',');
  app.add_option("--threads", o.threads, "worker threads for --table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    return o.table.empty() ? run_single(o) : run_table(o);
  } catch (const meg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const meg::ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const meg::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
