#pragma once

#include <string>
#include <variant>

namespace meg {

// Step-size rules ------------------------------------------------------------

struct FixedStep {
  double eta = 1.0;
};

/// eta_t = 1 / beta (deterministic presets).
struct OneOverBeta {
  double beta = 1.0;
};

/// eta = R0 / (2 G sqrt(T)) (stochastic preset).
struct StochasticFixedStep {
  double r0 = 1.0;
  double g = 1.0;
  int horizon = 1;
};

using StepConfig = std::variant<FixedStep, OneOverBeta, StochasticFixedStep>;

double step_eval(const StepConfig& cfg, int t);
void validate(const StepConfig& cfg);

// Approximation parameter sequences ------------------------------------------

/// eps_t = eps0 / (2 max{G^2, 1}) / (t + 1 + c)^3, for r = rank(X*).
struct CubicDet {
  double eps0_tilde = 1.0;
  double g = 1.0;
  double c = 0.0;
};

/// eps_t = 3 eps0 / (2 max{G^2, 1}) / (t + c + 1)^3, for r >= rank(X*).
struct CubicDetGeneral {
  double eps0_tilde = 1.0;
  double g = 1.0;
  double c = 0.0;
};

/// eps_t = (9/32) eps0 / (t + c + 1)^2, stochastic gradients.
struct QuadraticStoch {
  double eps0_tilde = 1.0;
  double c = 0.0;
};

/// eps_t = (3/5) / (t + c + 1)^2, the matrix-recovery experiments.
struct ExperimentSchedule {
  double c = 10.0;
};

using EpsilonSchedule =
    std::variant<CubicDet, CubicDetGeneral, QuadraticStoch, ExperimentSchedule>;

/// Formula value clamped into (0, 3/4].
double eps_schedule_eval(const EpsilonSchedule& s, int t);
void validate(const EpsilonSchedule& s);

std::string describe(const StepConfig& cfg);
std::string describe(const EpsilonSchedule& s);

}  // namespace meg
