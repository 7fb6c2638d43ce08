#include "dynlearn/evaluation.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dynlearn/errors.hpp"
#include "dynlearn/io.hpp"

namespace dynlearn {

namespace {

bool usable(const Vec& x) {
  for (double v : x)
    if (!std::isfinite(v) || std::fabs(v) > kDivergenceLimit) return false;
  return true;
}

}  // namespace

ForecastReport forecast_rmse(const StepperFn& stepper, int dim, const Trajectory& truth,
                             int n_initials) {
  const int len = truth.length();
  if (n_initials < 1) throw InvalidInput("forecast_rmse: n_initials must be >= 1");
  if (len < 5 || len - 4 < n_initials)
    throw InvalidInput("forecast_rmse: truth trajectory too short for requested starts");
  if (truth.dimension() != dim) throw InvalidInput("forecast_rmse: dimension mismatch");

  const long last_start = len - 5;
  double se_h = 0.0, se_4h = 0.0;
  int failed = 0, used = 0;
  for (int i = 0; i < n_initials; ++i) {
    const long s = n_initials == 1 ? 0 : i * last_start / (n_initials - 1);
    Vec x = truth.states[s];
    bool ok = true;
    double err_h = 0.0, err_4h = 0.0;
    for (int step = 1; step <= 4; ++step) {
      try {
        stepper(std::span<double>(x));
      } catch (const NumericError&) {
        ok = false;
        break;
      }
      if (!usable(x)) {
        ok = false;
        break;
      }
      double e = 0.0;
      for (int j = 0; j < dim; ++j) {
        const double diff = x[j] - truth.states[s + step][j];
        e += diff * diff;
      }
      if (step == 1) err_h = e;
      if (step == 4) err_4h = e;
    }
    if (!ok) {
      ++failed;
      continue;
    }
    se_h += err_h;
    se_4h += err_4h;
    ++used;
  }

  ForecastReport rep;
  rep.n_initials = n_initials;
  rep.n_failed = failed;
  rep.delta = truth.dt;
  if (used > 0) {
    rep.rmse_h = std::sqrt(se_h / used);
    rep.rmse_4h = std::sqrt(se_4h / used);
  } else {
    rep.rmse_h = rep.rmse_4h = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

LyapunovReport lyapunov_lambda1(const StepperFn& stepper, int dim, Vec x0, int n_steps,
                                double delta, int renorm_interval, double d0) {
  if (renorm_interval < 1) throw InvalidInput("lyapunov: renorm_interval must be >= 1");
  if (n_steps < renorm_interval) throw InvalidInput("lyapunov: n_steps < renorm_interval");
  if (d0 <= 0) throw InvalidInput("lyapunov: d0 must be > 0");
  if (static_cast<int>(x0.size()) != dim) throw InvalidInput("lyapunov: dimension mismatch");

  Vec x = x0;
  Vec companion = x0;
  companion[0] += d0;

  LyapunovReport rep;
  rep.n_steps = n_steps;
  rep.renorm_interval = renorm_interval;

  double log_sum = 0.0;
  long counted = 0;
  int since = 0;
  for (int step = 0; step < n_steps; ++step) {
    stepper(std::span<double>(x));
    stepper(std::span<double>(companion));
    if (!usable(x) || !usable(companion))
      throw NumericError("lyapunov: orbit diverged at step " + std::to_string(step), step);
    ++since;
    if (since == renorm_interval || step == n_steps - 1) {
      double dist2 = 0.0;
      for (int j = 0; j < dim; ++j) {
        const double diff = companion[j] - x[j];
        dist2 += diff * diff;
      }
      const double dist = std::sqrt(dist2);
      if (dist == 0.0) {
        companion = x;
        companion[0] += d0;
        ++rep.n_reperturb;
      } else {
        log_sum += std::log(dist / d0);
        counted += since;
        const double f = d0 / dist;
        for (int j = 0; j < dim; ++j) companion[j] = x[j] + f * (companion[j] - x[j]);
      }
      since = 0;
    }
  }
  rep.lambda1 = counted > 0 ? log_sum / (static_cast<double>(counted) * delta)
                            : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

void attractor_export(const StepperFn& stepper, int dim, Vec x0, double dt, long n_steps,
                      long spinup, const std::string& path, const std::string& config_hash) {
  Trajectory traj;
  traj.t0 = 0.0;
  traj.dt = dt;
  Vec x = std::move(x0);
  for (long s = 0; s < spinup; ++s) {
    stepper(std::span<double>(x));
    if (!usable(x)) throw NumericError("attractor_export: diverged during spinup at step " + std::to_string(s), s);
  }
  traj.states.push_back(x);
  for (long s = 0; s < n_steps; ++s) {
    stepper(std::span<double>(x));
    if (!usable(x)) throw NumericError("attractor_export: diverged at step " + std::to_string(s), s);
    traj.states.push_back(x);
  }
  (void)dim;
  write_trajectory_csv(path, traj, config_hash);
}

}  // namespace dynlearn
