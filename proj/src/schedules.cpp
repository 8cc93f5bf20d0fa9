#include "meg/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "meg/errors.hpp"

namespace meg {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_t(int t) {
  if (t < 0) throw ParameterError("schedule: iteration index must be >= 0");
}

}  // namespace

void validate(const StepConfig& cfg) {
  std::visit(overloaded{
                 [](const FixedStep& s) {
                   if (!(s.eta > 0.0)) {
                     throw ParameterError("fixed step: eta must be > 0");
                   }
                 },
                 [](const OneOverBeta& s) {
                   if (!(s.beta > 0.0)) {
                     throw ParameterError("one_over_beta: beta must be > 0");
                   }
                 },
                 [](const StochasticFixedStep& s) {
                   if (!(s.r0 > 0.0) || !(s.g > 0.0) || s.horizon < 1) {
                     throw ParameterError(
                         "stochastic_fixed: need R0 > 0, G > 0, T >= 1");
                   }
                 },
             },
             cfg);
}

double step_eval(const StepConfig& cfg, int t) {
  require_t(t);
  validate(cfg);
  return std::visit(
      overloaded{
          [](const FixedStep& s) { return s.eta; },
          [](const OneOverBeta& s) { return 1.0 / s.beta; },
          [](const StochasticFixedStep& s) {
            return s.r0 / (2.0 * s.g * std::sqrt(static_cast<double>(s.horizon)));
          },
      },
      cfg);
}

void validate(const EpsilonSchedule& s) {
  std::visit(overloaded{
                 [](const CubicDet& p) {
                   if (!(p.eps0_tilde > 0.0) || p.c < 0.0) {
                     throw ParameterError("cubic_det: need eps0 > 0, c >= 0");
                   }
                 },
                 [](const CubicDetGeneral& p) {
                   if (!(p.eps0_tilde > 0.0) || p.c < 0.0) {
                     throw ParameterError(
                         "cubic_det_general: need eps0 > 0, c >= 0");
                   }
                 },
                 [](const QuadraticStoch& p) {
                   if (!(p.eps0_tilde > 0.0) || p.c < 0.0) {
                     throw ParameterError(
                         "quadratic_stoch: need eps0 > 0, c >= 0");
                   }
                 },
                 [](const ExperimentSchedule& p) {
                   if (p.c < 0.0) throw ParameterError("experiment: c >= 0");
                 },
             },
             s);
}

double eps_schedule_eval(const EpsilonSchedule& s, int t) {
  require_t(t);
  validate(s);
  const double tt = static_cast<double>(t);
  const double raw = std::visit(
      overloaded{
          [&](const CubicDet& p) {
            return p.eps0_tilde / (2.0 * std::max(p.g * p.g, 1.0)) /
                   std::pow(tt + 1.0 + p.c, 3);
          },
          [&](const CubicDetGeneral& p) {
            return 3.0 * p.eps0_tilde / (2.0 * std::max(p.g * p.g, 1.0)) /
                   std::pow(tt + p.c + 1.0, 3);
          },
          [&](const QuadraticStoch& p) {
            return (9.0 / 32.0) * p.eps0_tilde / std::pow(tt + p.c + 1.0, 2);
          },
          [&](const ExperimentSchedule& p) {
            return 0.6 / std::pow(tt + p.c + 1.0, 2);
          },
      },
      s);
  return std::min(raw, 0.75);
}

std::string describe(const StepConfig& cfg) {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const FixedStep& s) { os << "fixed(eta=" << s.eta << ")"; },
                 [&](const OneOverBeta& s) {
                   os << "one_over_beta(beta=" << s.beta << ")";
                 },
                 [&](const StochasticFixedStep& s) {
                   os << "stochastic_fixed(R0=" << s.r0 << ", G=" << s.g
                      << ", T=" << s.horizon << ")";
                 },
             },
             cfg);
  return os.str();
}

std::string describe(const EpsilonSchedule& s) {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const CubicDet& p) {
                   os << "cubic_det(eps0=" << p.eps0_tilde << ", G=" << p.g
                      << ", c=" << p.c << ")";
                 },
                 [&](const CubicDetGeneral& p) {
                   os << "cubic_det_general(eps0=" << p.eps0_tilde
                      << ", G=" << p.g << ", c=" << p.c << ")";
                 },
                 [&](const QuadraticStoch& p) {
                   os << "quadratic_stoch(eps0=" << p.eps0_tilde
                      << ", c=" << p.c << ")";
                 },
                 [&](const ExperimentSchedule& p) {
                   os << "experiment(c=" << p.c << ")";
                 },
             },
             s);
  return os.str();
}

}  // namespace meg
