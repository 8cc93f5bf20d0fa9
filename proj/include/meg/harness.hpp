#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "meg/quadmeas.hpp"
#include "meg/schedules.hpp"
#include "meg/solver.hpp"

namespace meg {

enum class Mode { kExact, kLowRank, kLockstep };
enum class GradMode { kDeterministic, kStochastic };

std::string to_string(Mode m);
std::string to_string(GradMode g);
Mode parse_mode(const std::string& s);
GradMode parse_grad_mode(const std::string& s);

struct RunConfig {
  Mode mode = Mode::kLowRank;
  GradMode grad = GradMode::kDeterministic;
  Index batch = 64;
  /// Stochastic mode only: every batch is all m indices once (L = m).
  bool full_batch = false;

  Index n = 100;
  Index r = 1;       // SVD rank
  Index r_true = 1;  // rank of the planted matrix
  int T = 200;
  double kappa = 0.5;
  double tau_fraction = 0.5;

  /// Smoothness of f; defaults to 0.4 sqrt(r n). Steps are 1 / (tau beta) on
  /// the unit spectrahedron.
  std::optional<double> beta;
  /// Fixed step override for any mode.
  std::optional<double> eta;
  /// Stochastic mode: eta = R0 / (2 G sqrt(T)).
  std::optional<double> r0;
  EpsilonSchedule eps = ExperimentSchedule{};

  std::uint64_t seed = 1;
  bool dense_shadow = false;
  Index dense_cap = 400;
  LanczosConfig lanczos;

  /// Pre-built instance; when null one is generated from (n, r_true, kappa,
  /// tau_fraction, seed).
  std::shared_ptr<const QuadMeasInstance> instance;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

struct RunRow {
  int t = 0;
  double f_value = 0.0;
  double eps = 0.0;
  std::optional<double> eta;
  std::optional<double> cert_cheap_lhs;
  std::optional<bool> cert_cheap_holds;
  std::optional<double> cert_full_lhs;
  std::optional<bool> cert_full_holds;
  std::optional<double> bregman_to_exact;
  double lambda_rsp1 = 0.0;
  std::int64_t elapsed_ns = 0;
  /// Dense-shadow only; not part of the CSV.
  std::optional<double> shadow_deviation;
};

struct RunSummary {
  double init_error = 0.0;
  double recovery_error = 0.0;
  double dual_gap = 0.0;
  double grad_gap = 0.0;
  double final_f = 0.0;
  double eta = 0.0;
  std::optional<int> first_cert_full;
  std::optional<int> first_cert_cheap;
  std::optional<double> max_shadow_deviation;
  std::optional<double> final_bregman_to_exact;
  /// sum_t sqrt(B(Z_{t+1}, X_{t+1})) and sum_t lambda_1(log Z_{t+1} -
  /// log X_{t+1}), Z_{t+1} being the exact step from X_t.
  std::optional<double> sum_sqrt_bregman_step;
  std::optional<double> sum_log_gap_bound;
  // Stochastic runs.
  std::optional<double> gradient_bound;
  std::optional<double> avg_f;
  std::optional<double> f_of_average;
  std::optional<double> f_uniform;
  std::optional<int> uniform_index;
  int lanczos_restarts = 0;

  /// Ordered (key, value) pairs of the fields that are present.
  std::vector<std::pair<std::string, double>> items() const;
  void set(const std::string& key, double value);
};

struct RunRecord {
  std::vector<RunRow> rows;
  RunSummary summary;
};

RunRecord run_deterministic(const RunConfig& cfg);
RunRecord run_stochastic(const RunConfig& cfg);
/// Dispatches on cfg.grad.
RunRecord run(const RunConfig& cfg);

/// Shared instance for cfg (generated or the pre-built one).
std::shared_ptr<const QuadMeasInstance> resolve_instance(const RunConfig& cfg);

/// Independent 64-bit stream seed derived from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                          std::uint64_t index = 0);

inline constexpr const char* kMetricsHeader =
    "t,f_value,eps_t,eta_t,cert_cheap_lhs,cert_cheap_holds,cert_full_lhs,"
    "cert_full_holds,bregman_to_exact,lambda_rsp1,elapsed_ns";

void write_metrics(const RunRecord& record, std::ostream& out);
void emit_metrics(const RunRecord& record, const std::string& path);
RunRecord parse_metrics(std::istream& in);
RunRecord load_metrics(const std::string& path);

// Tables ---------------------------------------------------------------------

enum class TableId { kRank1, kRank5, kRank20, kCerts, kOverRank };

std::string to_string(TableId id);
TableId parse_table_id(const std::string& s);

struct Stat {
  double mean = 0.0;
  double stddev = 0.0;
};

struct TableCell {
  Index n = 0;
  Index r_true = 0;
  Index r = 0;
  double tau_fraction = 0.0;
  int trials = 0;
  Stat init_error;
  Stat recovery_error;
  Stat grad_gap;
  Stat dual_gap;
  /// Runs where a certificate never held count as T + 1.
  Stat first_full;
  Stat first_cheap;
  int full_never = 0;
  int cheap_never = 0;
  /// Trials whose cheap and full first iterations coincide.
  int cheap_equals_full = 0;
  std::vector<RunSummary> per_trial;  // sorted by trial index
};

struct TableReport {
  TableId id = TableId::kRank1;
  int T = 0;
  std::vector<TableCell> cells;

  std::string format() const;
};

struct TableOptions {
  std::vector<Index> n_list{100};
  int trials = 20;
  std::uint64_t seed = 1;
  int T = 200;
  /// Worker threads for independent trials; 0 picks the hardware count.
  unsigned threads = 0;
};

/// Trial i uses seed + i. Results are aggregated in trial order, so the
/// thread count never changes the report.
TableReport reproduce_table(TableId id, const TableOptions& opt);

/// The (r_true, r, tau_fraction) cells of a table.
std::vector<std::tuple<Index, Index, double>> table_layout(TableId id);

}  // namespace meg
