#include <doctest.h>

#include <cmath>

#include "dynlearn/errors.hpp"
#include "dynlearn/observation.hpp"

using namespace dynlearn;

namespace {

Trajectory constant_trajectory(int T, double value = 0.0) {
  Trajectory t;
  t.dt = 0.01;
  t.states.assign(T, Vec{value, value, value});
  return t;
}

}  // namespace

TEST_CASE("apply_noise with zero variance is the identity") {
  const OdeSystem sys = make_lorenz63();
  const Trajectory truth = simulate(sys.rhs, {8, 0, 30}, 0.01, 50, 100);
  const ObservationSeries obs = apply_noise(truth, {0.0, 7});
  for (int t = 0; t < obs.length(); ++t)
    for (int j = 0; j < 3; ++j) {
      CHECK(obs.values(t, j) == truth.states[t][j]);
      CHECK(obs.mask.at(t, j));
    }
}

TEST_CASE("apply_noise empirical variance matches the spec band") {
  const Trajectory truth = constant_trajectory(33334);  // > 1e5 samples over 3 components
  const ObservationSeries obs = apply_noise(truth, {4.0, 42});
  double mean = 0.0, var = 0.0;
  const long n = obs.values.size();
  for (long i = 0; i < n; ++i) mean += obs.values.data()[i];
  mean /= n;
  for (long i = 0; i < n; ++i) {
    const double d = obs.values.data()[i] - mean;
    var += d * d;
  }
  var /= (n - 1);
  CHECK(var > 3.8);
  CHECK(var < 4.2);
}

TEST_CASE("apply_noise is seed-deterministic") {
  const Trajectory truth = constant_trajectory(100, 1.0);
  const ObservationSeries a = apply_noise(truth, {2.0, 9});
  const ObservationSeries b = apply_noise(truth, {2.0, 9});
  for (long i = 0; i < a.values.size(); ++i) CHECK(a.values.data()[i] == b.values.data()[i]);
}

TEST_CASE("mask_regular observes exactly the multiples of the period") {
  const MaskPattern m = mask_regular(20, 8);
  for (int j = 0; j < 3; ++j) {
    CHECK(m.at(0, j));
    CHECK(m.at(8, j));
    CHECK(m.at(16, j));
    for (int t = 1; t < 8; ++t) CHECK(!m.at(t, j));
  }
}

TEST_CASE("mask_irregular basics") {
  SUBCASE("rate one observes everything") {
    const MaskPattern m = mask_irregular(50, 3, 1.0, 3);
    for (int t = 0; t < 50; ++t)
      for (int j = 0; j < 3; ++j) CHECK(m.at(t, j));
  }
  SUBCASE("observed fraction concentrates near the rate") {
    const MaskPattern m = mask_irregular(10000, 3, 1.0 / 8.0, 11);
    long observed = 0;
    for (uint8_t f : m.flags) observed += f;
    const double frac = static_cast<double>(observed) / (10000.0 * 3.0);
    CHECK(frac > 0.115);
    CHECK(frac < 0.135);
  }
  SUBCASE("seed-deterministic") {
    CHECK(mask_irregular(200, 3, 0.3, 5).flags == mask_irregular(200, 3, 0.3, 5).flags);
  }
}

TEST_CASE("masking and noising commute because noise is drawn for all entries first") {
  const OdeSystem sys = make_lorenz63();
  const Trajectory truth = simulate(sys.rhs, {8, 0, 30}, 0.01, 99, 100);
  const ObservationSeries noised = apply_noise(truth, {1.0, 13});
  const MaskPattern mask = mask_irregular(noised.length(), 3, 0.5, 21);
  const ObservationSeries masked = apply_mask(noised, mask);
  for (int t = 0; t < masked.length(); ++t)
    for (int j = 0; j < 3; ++j) {
      if (mask.at(t, j))
        CHECK(masked.values(t, j) == noised.values(t, j));
      else
        CHECK(std::isnan(masked.values(t, j)));
    }
}

TEST_CASE("linear_interpolate") {
  SUBCASE("fully observed series is returned unchanged") {
    const Trajectory truth = constant_trajectory(10, 3.5);
    const ObservationSeries obs = apply_noise(truth, {1.0, 17});
    const Tensor interp = linear_interpolate(obs);
    for (int t = 0; t < 10; ++t)
      for (int j = 0; j < 3; ++j) CHECK(interp(t, j) == obs.values(t, j));
  }

  SUBCASE("midpoint of a gap follows the linear rule and edges hold") {
    ObservationSeries obs;
    obs.values = Tensor(100, 3);
    obs.mask = MaskPattern::all_true(100, 3);
    for (int t = 0; t < 100; ++t)
      for (int j = 0; j < 3; ++j) obs.values(t, j) = t;
    MaskPattern m;
    m.T = 100;
    m.d = 3;
    m.flags.assign(300, 0);
    for (int j = 0; j < 3; ++j) {
      m.set(0, j, true);
      m.set(8, j, true);
      m.set(90, j, true);
    }
    const ObservationSeries masked = apply_mask(obs, m);
    const Tensor interp = linear_interpolate(masked);
    CHECK(interp(4, 0) == doctest::Approx(4.0));
    CHECK(interp(0, 1) == 0.0);
    CHECK(interp(8, 2) == 8.0);  // observed entries reproduced exactly
    for (int t = 91; t < 100; ++t) CHECK(interp(t, 0) == 90.0);
  }

  SUBCASE("a never-observed component is an error") {
    ObservationSeries obs;
    obs.values = Tensor(5, 3);
    obs.mask = MaskPattern::all_true(5, 3);
    MaskPattern m;
    m.T = 5;
    m.d = 3;
    m.flags.assign(15, 1);
    for (int t = 0; t < 5; ++t) m.set(t, 2, false);
    const ObservationSeries masked = apply_mask(obs, m);
    CHECK_THROWS_AS(linear_interpolate(masked), InvalidInput);
  }
}

TEST_CASE("subsample keeps every period-th row and rescales dt") {
  const Trajectory truth = constant_trajectory(17);
  ObservationSeries obs = apply_noise(truth, {1.0, 3});
  const ObservationSeries coarse = subsample(obs, 8);
  CHECK(coarse.length() == 3);
  CHECK(coarse.dt == doctest::Approx(0.08));
  for (int j = 0; j < 3; ++j) {
    CHECK(coarse.values(0, j) == obs.values(0, j));
    CHECK(coarse.values(1, j) == obs.values(8, j));
    CHECK(coarse.values(2, j) == obs.values(16, j));
  }
}
