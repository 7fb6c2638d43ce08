#pragma once

#include <cstdint>
#include <vector>

#include "dynlearn/dynamics.hpp"
#include "dynlearn/tensor.hpp"

namespace dynlearn {

// Per-time, per-component observation availability.
struct MaskPattern {
  int T = 0;
  int d = 0;
  std::vector<uint8_t> flags;  // row-major, 1 = observed

  bool at(int t, int j) const { return flags[static_cast<size_t>(t) * d + j] != 0; }
  void set(int t, int j, bool v) { flags[static_cast<size_t>(t) * d + j] = v ? 1 : 0; }

  static MaskPattern all_true(int T, int d);
};

struct ObservationSeries {
  double t0 = 0.0;
  double dt = 0.01;
  Tensor values;  // T x d; masked-out entries hold quiet NaN and must not be read
  MaskPattern mask;

  int length() const { return values.rows(); }
  int dimension() const { return values.cols(); }
};

struct NoiseSpec {
  double variance = 0.0;
  uint64_t seed = 0;
};

/// Adds i.i.d. N(0, variance) to every entry, drawn in row-major order.
/// The returned mask is all-true.
ObservationSeries apply_noise(const Trajectory& traj, const NoiseSpec& spec);

/// Row t fully observed iff t % period == 0.
MaskPattern mask_regular(int T, int period);

/// Each (t, component) observed independently with probability rate.
MaskPattern mask_irregular(int T, int d, double rate, uint64_t seed);

/// Replaces the series' mask and writes quiet NaN into newly hidden entries.
/// Values that the new mask exposes must already exist in the input.
ObservationSeries apply_mask(ObservationSeries obs, MaskPattern mask);

/// Per-component linear interpolation in time across gaps; nearest observed
/// value is held before the first and after the last observation. Throws
/// InvalidInput if some component is never observed.
Tensor linear_interpolate(const ObservationSeries& obs);

/// Keeps every period-th row (starting at row 0) and scales dt accordingly.
ObservationSeries subsample(const ObservationSeries& obs, int period);

}  // namespace dynlearn
