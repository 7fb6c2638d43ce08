#pragma once

#include <functional>
#include <vector>

namespace dynlearn {

using Vec = std::vector<double>;
using RhsFn = std::function<Vec(const Vec&)>;

struct Lorenz63Params {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
};

/// Lorenz-63 vector field. Throws InvalidInput unless x has dimension 3.
Vec lorenz63_rhs(const Lorenz63Params& p, const Vec& x);

struct OdeSystem {
  int dimension = 0;
  RhsFn rhs;
};

OdeSystem make_lorenz63(Lorenz63Params p = {});

/// Classical 4-stage Runge-Kutta update; dt = 0 returns x unchanged.
/// Throws NumericError if any stage or the result goes non-finite.
Vec rk4_step(const RhsFn& rhs, const Vec& x, double dt);

struct Trajectory {
  double t0 = 0.0;
  double dt = 0.01;
  std::vector<Vec> states;

  int length() const { return static_cast<int>(states.size()); }
  int dimension() const { return states.empty() ? 0 : static_cast<int>(states.front().size()); }
};

/// Integrates spinup + n_steps RK4 steps and keeps the last n_steps + 1
/// states. Throws NumericError with the offending step index if any
/// component exceeds 1e6 in magnitude.
Trajectory simulate(const RhsFn& rhs, Vec x0, double dt, long n_steps, long spinup);

inline constexpr double kDivergenceLimit = 1e6;

}  // namespace dynlearn
