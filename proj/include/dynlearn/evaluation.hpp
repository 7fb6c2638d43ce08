#pragma once

#include <string>

#include "dynlearn/dynamics.hpp"
#include "dynlearn/surrogate.hpp"

namespace dynlearn {

struct ForecastReport {
  double rmse_h = 0.0;   // error after one model step
  double rmse_4h = 0.0;  // error after four model steps
  int n_initials = 0;
  int n_failed = 0;  // starts excluded after divergence
  double delta = 0.0;  // model-time span of one step
};

/// Root-mean-square Euclidean error of the one-step map iterated 1 and 4
/// steps from n_initials evenly spaced starts on the given truth trajectory.
/// Diverging starts are excluded and counted.
ForecastReport forecast_rmse(const StepperFn& stepper, int dim, const Trajectory& truth,
                             int n_initials);

struct LyapunovReport {
  double lambda1 = 0.0;  // inverse model-time units
  int n_steps = 0;
  int renorm_interval = 0;
  int n_reperturb = 0;  // separation collapses that forced a fresh offset
};

/// Two-trajectory separation-rate estimate: a companion orbit offset by d0 is
/// renormalized back to d0 every renorm_interval steps and the log growth
/// accumulates. Throws NumericError with the step index if the orbit leaves
/// the divergence limit.
LyapunovReport lyapunov_lambda1(const StepperFn& stepper, int dim, Vec x0, int n_steps,
                                double delta, int renorm_interval, double d0 = 1e-8);

/// Free-runs the model and writes the orbit as CSV (t,x1..xd); the first
/// spinup states are discarded.
void attractor_export(const StepperFn& stepper, int dim, Vec x0, double dt, long n_steps,
                      long spinup, const std::string& path, const std::string& config_hash = "");

}  // namespace dynlearn
