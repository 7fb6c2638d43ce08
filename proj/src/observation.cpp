#include "dynlearn/observation.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dynlearn/errors.hpp"
#include "dynlearn/random.hpp"

namespace dynlearn {

namespace {
constexpr double kMaskedSentinel = std::numeric_limits<double>::quiet_NaN();
}

MaskPattern MaskPattern::all_true(int T, int d) {
  MaskPattern m;
  m.T = T;
  m.d = d;
  m.flags.assign(static_cast<size_t>(T) * d, 1);
  return m;
}

ObservationSeries apply_noise(const Trajectory& traj, const NoiseSpec& spec) {
  if (spec.variance < 0) throw InvalidInput("apply_noise: variance < 0");
  const int T = traj.length();
  const int d = traj.dimension();

  ObservationSeries obs;
  obs.t0 = traj.t0;
  obs.dt = traj.dt;
  obs.values = Tensor(T, d);
  obs.mask = MaskPattern::all_true(T, d);

  Rng rng(spec.seed);
  const double sd = std::sqrt(spec.variance);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < d; ++j)
      obs.values(t, j) = traj.states[t][j] + (sd > 0 ? rng.normal(0.0, sd) : 0.0);
  return obs;
}

MaskPattern mask_regular(int T, int period) {
  if (period < 1) throw InvalidInput("mask_regular: period < 1");
  MaskPattern m;
  m.T = T;
  m.d = 3;
  m.flags.assign(static_cast<size_t>(T) * m.d, 0);
  for (int t = 0; t < T; t += period)
    for (int j = 0; j < m.d; ++j) m.set(t, j, true);
  return m;
}

MaskPattern mask_irregular(int T, int d, double rate, uint64_t seed) {
  if (rate < 0.0 || rate > 1.0) throw InvalidInput("mask_irregular: rate outside [0, 1]");
  MaskPattern m;
  m.T = T;
  m.d = d;
  m.flags.assign(static_cast<size_t>(T) * d, 0);
  Rng rng(seed);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < d; ++j) m.set(t, j, rng.uniform() < rate);
  return m;
}

ObservationSeries apply_mask(ObservationSeries obs, MaskPattern mask) {
  if (mask.T != obs.length() || mask.d != obs.dimension())
    throw InvalidInput("apply_mask: mask shape does not match series");
  for (int t = 0; t < mask.T; ++t)
    for (int j = 0; j < mask.d; ++j) {
      if (mask.at(t, j)) {
        if (!obs.mask.at(t, j))
          throw InvalidInput("apply_mask: cannot expose an entry the series does not carry");
      } else {
        obs.values(t, j) = kMaskedSentinel;
      }
    }
  obs.mask = std::move(mask);
  return obs;
}

Tensor linear_interpolate(const ObservationSeries& obs) {
  const int T = obs.length();
  const int d = obs.dimension();
  Tensor out(T, d);

  for (int j = 0; j < d; ++j) {
    int prev = -1;
    for (int t = 0; t < T; ++t) {
      if (!obs.mask.at(t, j)) continue;
      const double v = obs.values(t, j);
      if (prev < 0) {
        for (int s = 0; s <= t; ++s) out(s, j) = v;  // hold before first observation
      } else {
        const double v0 = obs.values(prev, j);
        for (int s = prev + 1; s <= t; ++s) {
          const double w = static_cast<double>(s - prev) / (t - prev);
          out(s, j) = v0 + w * (v - v0);
        }
      }
      prev = t;
    }
    if (prev < 0)
      throw InvalidInput("linear_interpolate: component " + std::to_string(j) + " has no observations");
    for (int s = prev + 1; s < T; ++s) out(s, j) = obs.values(prev, j);
  }
  return out;
}

ObservationSeries subsample(const ObservationSeries& obs, int period) {
  if (period < 1) throw InvalidInput("subsample: period < 1");
  const int T = obs.length();
  const int d = obs.dimension();
  const int Tc = (T + period - 1) / period;

  ObservationSeries out;
  out.t0 = obs.t0;
  out.dt = obs.dt * period;
  out.values = Tensor(Tc, d);
  out.mask.T = Tc;
  out.mask.d = d;
  out.mask.flags.assign(static_cast<size_t>(Tc) * d, 0);
  for (int i = 0; i < Tc; ++i) {
    const int t = i * period;
    for (int j = 0; j < d; ++j) {
      out.values(i, j) = obs.values(t, j);
      out.mask.set(i, j, obs.mask.at(t, j));
    }
  }
  return out;
}

}  // namespace dynlearn
