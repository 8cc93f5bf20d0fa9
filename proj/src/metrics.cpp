#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "meg/harness.hpp"

namespace meg {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
std::string cell(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_same_v<T, bool>) {
    return *v ? "1" : "0";
  } else {
    return fmt(*v);
  }
}

double to_double(const std::string& s, int line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    std::ostringstream msg;
    msg << "metrics line " << line << ": bad number '" << s << "'";
    throw IoError(msg.str());
  }
  return v;
}

std::optional<double> opt_double(const std::string& s, int line) {
  if (s.empty()) return std::nullopt;
  return to_double(s, line);
}

std::optional<bool> opt_bool(const std::string& s, int line) {
  if (s.empty()) return std::nullopt;
  if (s == "1") return true;
  if (s == "0") return false;
  std::ostringstream msg;
  msg << "metrics line " << line << ": bad flag '" << s << "'";
  throw IoError(msg.str());
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<std::pair<std::string, double>> RunSummary::items() const {
  std::vector<std::pair<std::string, double>> out{
      {"init_error", init_error}, {"recovery_error", recovery_error},
      {"dual_gap", dual_gap},     {"grad_gap", grad_gap},
      {"final_f", final_f},       {"eta", eta},
  };
  auto add = [&](const char* key, const auto& v) {
    if (v) out.emplace_back(key, static_cast<double>(*v));
  };
  add("first_cert_full", first_cert_full);
  add("first_cert_cheap", first_cert_cheap);
  add("max_shadow_deviation", max_shadow_deviation);
  add("final_bregman_to_exact", final_bregman_to_exact);
  add("sum_sqrt_bregman_step", sum_sqrt_bregman_step);
  add("sum_log_gap_bound", sum_log_gap_bound);
  add("gradient_bound", gradient_bound);
  add("avg_f", avg_f);
  add("f_of_average", f_of_average);
  add("f_uniform", f_uniform);
  add("uniform_index", uniform_index);
  out.emplace_back("lanczos_restarts", static_cast<double>(lanczos_restarts));
  return out;
}

void RunSummary::set(const std::string& key, double v) {
  const int iv = static_cast<int>(v);
  if (key == "init_error") init_error = v;
  else if (key == "recovery_error") recovery_error = v;
  else if (key == "dual_gap") dual_gap = v;
  else if (key == "grad_gap") grad_gap = v;
  else if (key == "final_f") final_f = v;
  else if (key == "eta") eta = v;
  else if (key == "first_cert_full") first_cert_full = iv;
  else if (key == "first_cert_cheap") first_cert_cheap = iv;
  else if (key == "max_shadow_deviation") max_shadow_deviation = v;
  else if (key == "final_bregman_to_exact") final_bregman_to_exact = v;
  else if (key == "sum_sqrt_bregman_step") sum_sqrt_bregman_step = v;
  else if (key == "sum_log_gap_bound") sum_log_gap_bound = v;
  else if (key == "gradient_bound") gradient_bound = v;
  else if (key == "avg_f") avg_f = v;
  else if (key == "f_of_average") f_of_average = v;
  else if (key == "f_uniform") f_uniform = v;
  else if (key == "uniform_index") uniform_index = iv;
  else if (key == "lanczos_restarts") lanczos_restarts = iv;
  // Unknown keys are ignored so newer files still load.
}

void write_metrics(const RunRecord& record, std::ostream& out) {
  out << kMetricsHeader << '\n';
  for (const RunRow& row : record.rows) {
    out << row.t << ',' << fmt(row.f_value) << ',' << fmt(row.eps) << ','
        << cell(row.eta) << ',' << cell(row.cert_cheap_lhs) << ','
        << cell(row.cert_cheap_holds) << ',' << cell(row.cert_full_lhs) << ','
        << cell(row.cert_full_holds) << ',' << cell(row.bregman_to_exact)
        << ',' << fmt(row.lambda_rsp1) << ',' << row.elapsed_ns << '\n';
  }
  for (const auto& [key, value] : record.summary.items()) {
    out << "# " << key << '=' << fmt(value) << '\n';
  }
}

void emit_metrics(const RunRecord& record, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  write_metrics(record, out);
  out.flush();
  if (!out) throw IoError(path + ": write failed");
}

RunRecord parse_metrics(std::istream& in) {
  RunRecord rec;
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw IoError("metrics: empty input");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsHeader) throw IoError("metrics: unexpected header");
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      key.erase(key.find_last_not_of(' ') + 1);
      rec.summary.set(key, to_double(line.substr(eq + 1), lineno));
      continue;
    }
    const auto f = split(line);
    if (f.size() != 11) {
      std::ostringstream msg;
      msg << "metrics line " << lineno << ": expected 11 fields, got "
          << f.size();
      throw IoError(msg.str());
    }
    RunRow row;
    row.t = static_cast<int>(to_double(f[0], lineno));
    row.f_value = to_double(f[1], lineno);
    row.eps = to_double(f[2], lineno);
    row.eta = opt_double(f[3], lineno);
    row.cert_cheap_lhs = opt_double(f[4], lineno);
    row.cert_cheap_holds = opt_bool(f[5], lineno);
    row.cert_full_lhs = opt_double(f[6], lineno);
    row.cert_full_holds = opt_bool(f[7], lineno);
    row.bregman_to_exact = opt_double(f[8], lineno);
    row.lambda_rsp1 = to_double(f[9], lineno);
    row.elapsed_ns = std::strtoll(f[10].c_str(), nullptr, 10);
    rec.rows.push_back(row);
  }
  return rec;
}

RunRecord load_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open for reading");
  try {
    return parse_metrics(in);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace meg
