#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>
#include <thread>

#include "meg/harness.hpp"

namespace meg {

namespace {

Stat stat_of(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

TableCell aggregate(std::vector<RunSummary> runs, int T) {
  TableCell cell;
  cell.trials = static_cast<int>(runs.size());
  std::vector<double> init, rec, gap, dual, full, cheap;
  for (const RunSummary& s : runs) {
    init.push_back(s.init_error);
    rec.push_back(s.recovery_error);
    gap.push_back(s.grad_gap);
    dual.push_back(s.dual_gap);
    full.push_back(s.first_cert_full.value_or(T + 1));
    cheap.push_back(s.first_cert_cheap.value_or(T + 1));
    if (!s.first_cert_full) ++cell.full_never;
    if (!s.first_cert_cheap) ++cell.cheap_never;
    if (s.first_cert_full == s.first_cert_cheap) ++cell.cheap_equals_full;
  }
  cell.init_error = stat_of(init);
  cell.recovery_error = stat_of(rec);
  cell.grad_gap = stat_of(gap);
  cell.dual_gap = stat_of(dual);
  cell.first_full = stat_of(full);
  cell.first_cheap = stat_of(cheap);
  cell.per_trial = std::move(runs);
  return cell;
}

std::string pm(const Stat& s, const char* f = "%.4f") {
  char a[32];
  char b[32];
  std::snprintf(a, sizeof a, f, s.mean);
  std::snprintf(b, sizeof b, f, s.stddev);
  return std::string(a) + " +- " + b;
}

}  // namespace

std::string to_string(TableId id) {
  switch (id) {
    case TableId::kRank1: return "t1_rank1";
    case TableId::kRank5: return "t2_rank5";
    case TableId::kRank20: return "t3_rank20";
    case TableId::kCerts: return "t4_certs";
    case TableId::kOverRank: return "t5_overrank";
  }
  return "?";
}

TableId parse_table_id(const std::string& s) {
  for (TableId id : {TableId::kRank1, TableId::kRank5, TableId::kRank20,
                     TableId::kCerts, TableId::kOverRank}) {
    if (s == to_string(id)) return id;
  }
  throw ConfigError("unknown table '" + s +
                    "' (t1_rank1|t2_rank5|t3_rank20|t4_certs|t5_overrank)");
}

std::vector<std::tuple<Index, Index, double>> table_layout(TableId id) {
  switch (id) {
    case TableId::kRank1: return {{1, 1, 0.5}};
    case TableId::kRank5: return {{5, 5, 0.5}};
    case TableId::kRank20: return {{20, 20, 0.65}};
    case TableId::kCerts: return {{1, 1, 0.5}, {5, 5, 0.5}, {20, 20, 0.65}};
    case TableId::kOverRank:
      return {{1, 3, 0.5}, {5, 10, 0.5}, {20, 30, 0.65}};
  }
  return {};
}

TableReport reproduce_table(TableId id, const TableOptions& opt) {
  if (opt.trials < 1) throw ConfigError("trials must be >= 1");
  TableReport report;
  report.id = id;
  report.T = opt.T;
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = opt.threads == 0 ? hw : opt.threads;

  for (Index n : opt.n_list) {
    for (const auto& [r_true, r, tau_fraction] : table_layout(id)) {
      if (r >= n) continue;
      std::vector<RunSummary> runs(static_cast<std::size_t>(opt.trials));
      std::vector<std::exception_ptr> errors(runs.size());
      auto job = [&, r_true = r_true, r = r, tf = tau_fraction](int i) {
        try {
          RunConfig cfg;
          cfg.n = n;
          cfg.r_true = r_true;
          cfg.r = r;
          cfg.tau_fraction = tf;
          cfg.T = opt.T;
          cfg.seed = opt.seed + static_cast<std::uint64_t>(i);
          cfg.dense_shadow = n <= cfg.dense_cap;
          runs[static_cast<std::size_t>(i)] = run_deterministic(cfg).summary;
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      };
      if (workers <= 1) {
        for (int i = 0; i < opt.trials; ++i) job(i);
      } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
          pool.emplace_back([&, w] {
            for (int i = static_cast<int>(w); i < opt.trials;
                 i += static_cast<int>(workers)) {
              job(i);
            }
          });
        }
        for (auto& th : pool) th.join();
      }
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
      TableCell cell = aggregate(std::move(runs), opt.T);
      cell.n = n;
      cell.r_true = r_true;
      cell.r = r;
      cell.tau_fraction = tau_fraction;
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

std::string TableReport::format() const {
  std::ostringstream os;
  os << "table " << to_string(id) << " (T = " << T << ")\n";
  os << "rank(M) | SVD rank | n | trials | init. error | recovery error | "
        "grad gap | dual gap | first full holds | first cheap holds | "
        "cheap == full\n";
  for (const TableCell& c : cells) {
    os << c.r_true << " | " << c.r << " | " << c.n << " | " << c.trials
       << " | " << pm(c.init_error) << " | " << pm(c.recovery_error) << " | "
       << pm(c.grad_gap) << " | " << pm(c.dual_gap) << " | "
       << pm(c.first_full, "%.2f") << " | " << pm(c.first_cheap, "%.2f")
       << " | " << c.cheap_equals_full << "/" << c.trials << '\n';
    if (c.full_never > 0 || c.cheap_never > 0) {
      os << "  (never held within T: full " << c.full_never << ", cheap "
         << c.cheap_never << "; counted as T + 1)\n";
    }
  }
  return os.str();
}

}  // namespace meg
