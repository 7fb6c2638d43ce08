#include "dynlearn/dynamics.hpp"

#include <cmath>
#include <string>

#include "dynlearn/errors.hpp"

namespace dynlearn {

namespace {

bool finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

bool inside_limit(const Vec& v) {
  for (double x : v)
    if (!(std::fabs(x) <= kDivergenceLimit)) return false;
  return true;
}

}  // namespace

Vec lorenz63_rhs(const Lorenz63Params& p, const Vec& x) {
  if (x.size() != 3)
    throw InvalidInput("lorenz63_rhs: state dimension " + std::to_string(x.size()) + ", expected 3");
  return {p.sigma * (x[1] - x[0]),
          p.rho * x[0] - x[1] - x[0] * x[2],
          x[0] * x[1] - p.beta * x[2]};
}

OdeSystem make_lorenz63(Lorenz63Params p) {
  return {3, [p](const Vec& x) { return lorenz63_rhs(p, x); }};
}

Vec rk4_step(const RhsFn& rhs, const Vec& x, double dt) {
  const size_t d = x.size();
  const Vec k1 = rhs(x);

  Vec tmp(d);
  for (size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
  const Vec k2 = rhs(tmp);

  for (size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
  const Vec k3 = rhs(tmp);

  for (size_t i = 0; i < d; ++i) tmp[i] = x[i] + dt * k3[i];
  const Vec k4 = rhs(tmp);

  Vec out(d);
  for (size_t i = 0; i < d; ++i)
    out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

  if (!finite(out)) throw NumericError("rk4_step: non-finite result");
  return out;
}

Trajectory simulate(const RhsFn& rhs, Vec x0, double dt, long n_steps, long spinup) {
  if (n_steps < 0) throw InvalidInput("simulate: n_steps < 0");
  if (spinup < 0) throw InvalidInput("simulate: spinup < 0");
  if (!finite(x0)) throw InvalidInput("simulate: non-finite initial state");

  Trajectory traj;
  traj.t0 = 0.0;
  traj.dt = dt;
  traj.states.reserve(static_cast<size_t>(n_steps) + 1);

  Vec x = std::move(x0);
  for (long step = 0; step < spinup; ++step) {
    x = rk4_step(rhs, x, dt);
    if (!inside_limit(x))
      throw NumericError("simulate: divergence during spinup at step " + std::to_string(step), step);
  }

  traj.states.push_back(x);
  for (long step = 0; step < n_steps; ++step) {
    x = rk4_step(rhs, x, dt);
    if (!inside_limit(x))
      throw NumericError("simulate: divergence at step " + std::to_string(step), step);
    traj.states.push_back(x);
  }
  return traj;
}

}  // namespace dynlearn
