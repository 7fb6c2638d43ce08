#include <doctest.h>

#include <cmath>

#include "dynlearn/baselines.hpp"
#include "dynlearn/errors.hpp"
#include "dynlearn/random.hpp"

using namespace dynlearn;

namespace {

Tensor lorenz_states(int n_steps, uint64_t noise_seed = 0, double variance = 0.0) {
  const OdeSystem sys = make_lorenz63();
  const Trajectory truth = simulate(sys.rhs, {8, 0, 30}, 0.01, n_steps, 1000);
  Tensor states(truth.length(), 3);
  Rng rng(noise_seed);
  const double sd = std::sqrt(variance);
  for (int t = 0; t < truth.length(); ++t)
    for (int j = 0; j < 3; ++j)
      states(t, j) = truth.states[t][j] + (sd > 0 ? rng.normal(0.0, sd) : 0.0);
  return states;
}

}  // namespace

TEST_CASE("hanning_smooth") {
  SUBCASE("constant series passes through") {
    const Tensor out = hanning_smooth(Tensor(100, 2, 3.25), 20);
    for (long i = 0; i < out.size(); ++i) CHECK(out.data()[i] == doctest::Approx(3.25).epsilon(1e-12));
  }

  SUBCASE("impulse response traces the normalized window") {
    Tensor impulse(100, 1);
    impulse(50, 0) = 1.0;
    const int window = 20;
    const Tensor out = hanning_smooth(impulse, window);

    std::vector<double> w(window);
    double s = 0;
    for (int k = 0; k < window; ++k) {
      w[k] = 0.5 * (1.0 - std::cos(2.0 * M_PI * k / (window - 1)));
      s += w[k];
    }
    const int center = (window - 1) / 2;
    for (int i = 0; i < 100; ++i) {
      const int k = 50 - i + center;
      const double expected = (k >= 0 && k < window) ? w[k] / s : 0.0;
      CHECK(out(i, 0) == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  SUBCASE("white noise variance drops by the window energy") {
    Rng rng(2);
    Tensor noise(20000, 1);
    for (long i = 0; i < noise.size(); ++i) noise.data()[i] = rng.normal(0.0, 4.0);
    const Tensor out = hanning_smooth(noise, 20);
    double mean = 0, var = 0;
    for (long i = 0; i < out.size(); ++i) mean += out.data()[i];
    mean /= out.size();
    for (long i = 0; i < out.size(); ++i) {
      const double d = out.data()[i] - mean;
      var += d * d;
    }
    var /= (out.size() - 1);
    CHECK(var < 2.0);
  }

  SUBCASE("linearity") {
    Rng rng(3);
    Tensor u(50, 1), v(50, 1);
    for (int i = 0; i < 50; ++i) {
      u(i, 0) = rng.uniform(-1, 1);
      v(i, 0) = rng.uniform(-1, 1);
    }
    Tensor combo(50, 1);
    for (int i = 0; i < 50; ++i) combo(i, 0) = 2.0 * u(i, 0) - 0.5 * v(i, 0);
    const Tensor su = hanning_smooth(u, 8), sv = hanning_smooth(v, 8),
                 sc = hanning_smooth(combo, 8);
    for (int i = 0; i < 50; ++i)
      CHECK(sc(i, 0) == doctest::Approx(2.0 * su(i, 0) - 0.5 * sv(i, 0)).epsilon(1e-12));
  }
}

TEST_CASE("sparse_fit recovers the Lorenz-63 structure from clean data") {
  const Tensor states = lorenz_states(10000);
  const SparseModel model = sparse_fit(states, 0.01, 0.1, 10);

  // dictionary: [1, x1, x2, x3, x1x2, x1x3, x2x3, x1^2, x2^2, x3^2]
  const double expected[3][10] = {
      {0, -10, 10, 0, 0, 0, 0, 0, 0, 0},
      {0, 28, -1, 0, 0, -1, 0, 0, 0, 0},
      {0, 0, 0, -8.0 / 3.0, 1, 0, 0, 0, 0, 0},
  };
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 10; ++j) {
      CAPTURE(i);
      CAPTURE(j);
      if (expected[i][j] == 0.0) {
        CHECK(model.coefficients(i, j) == 0.0);
      } else {
        CHECK(std::fabs(model.coefficients(i, j) - expected[i][j]) <
              0.05 * std::fabs(expected[i][j]));
      }
    }
}

TEST_CASE("sparse_fit on a single decaying component") {
  // x1' = -x1 with the other components identically zero; the dead dictionary
  // columns make the Gram matrix singular, exercising the ridge path.
  const int T = 2000;
  Tensor states(T, 3);
  for (int t = 0; t < T; ++t) states(t, 0) = 2.0 * std::exp(-0.01 * t);
  int regularized = 0;
  const SparseModel model = sparse_fit(states, 0.01, 0.1, 10, &regularized);
  CHECK(regularized > 0);
  CHECK(model.coefficients(0, 1) == doctest::Approx(-1.0).epsilon(1e-3));
  for (int j = 0; j < 10; ++j) {
    if (j != 1) CHECK(model.coefficients(0, j) == 0.0);
    CHECK(model.coefficients(1, j) == 0.0);
    CHECK(model.coefficients(2, j) == 0.0);
  }
}

TEST_CASE("sparse_fit of the zero trajectory is the zero model") {
  const SparseModel model = sparse_fit(Tensor(100, 3), 0.01, 0.1, 10);
  for (long i = 0; i < model.coefficients.size(); ++i) CHECK(model.coefficients.data()[i] == 0.0);
}

TEST_CASE("sparse_fit thresholding is idempotent") {
  const Tensor states = lorenz_states(4000);
  const SparseModel first = sparse_fit(states, 0.01, 0.1, 10);
  const SparseModel second = sparse_fit(states, 0.01, 0.1, 10);
  for (long i = 0; i < first.coefficients.size(); ++i)
    CHECK(first.coefficients.data()[i] == doctest::Approx(second.coefficients.data()[i]).epsilon(1e-12));
}

TEST_CASE("sparse_fit preconditions") {
  CHECK_THROWS_AS(sparse_fit(Tensor(4, 3), 0.01, 0.1, 10), InvalidInput);
  CHECK_THROWS_AS(sparse_fit(Tensor(10, 3), 0.0, 0.1, 10), InvalidInput);
}

TEST_CASE("analog_forecast") {
  const Tensor states = lorenz_states(5000);
  const AnalogCatalog catalog = build_catalog(states);

  SUBCASE("exact catalog hit with k=1 returns the successor") {
    const Vec query(states.row_span(123).begin(), states.row_span(123).end());
    const Vec out = analog_forecast(catalog, query, 1);
    for (int j = 0; j < 3; ++j) CHECK(out[j] == states(124, j));
  }

  SUBCASE("k = M averages every successor") {
    const Vec out = analog_forecast(catalog, {0, 0, 25}, catalog.states.rows());
    Vec mean(3, 0.0);
    for (int i = 0; i < catalog.successors.rows(); ++i)
      for (int j = 0; j < 3; ++j) mean[j] += catalog.successors(i, j);
    for (int j = 0; j < 3; ++j)
      CHECK(out[j] == doctest::Approx(mean[j] / catalog.successors.rows()).epsilon(1e-12));
  }

  SUBCASE("beats persistence on held-out points") {
    const OdeSystem sys = make_lorenz63();
    const Trajectory big = simulate(sys.rhs, {8, 0, 30}, 0.01, 11001, 1000);
    Tensor train(10001, 3), held(1000, 3);
    for (int t = 0; t <= 10000; ++t)
      for (int j = 0; j < 3; ++j) train(t, j) = big.states[t][j];
    const AnalogCatalog cat = build_catalog(train);

    double analog_se = 0, persist_se = 0;
    for (int i = 0; i < 1000; ++i) {
      const Vec x(big.states[10001 + i - 1]);
      const Vec target(big.states[10001 + i]);
      const Vec pred = analog_forecast(cat, x, 5);
      for (int j = 0; j < 3; ++j) {
        analog_se += (pred[j] - target[j]) * (pred[j] - target[j]);
        persist_se += (x[j] - target[j]) * (x[j] - target[j]);
      }
    }
    CHECK(analog_se < persist_se);
    (void)held;
  }

  SUBCASE("input validation") {
    CHECK_THROWS_AS(analog_forecast(catalog, {0, 0, 0}, 0), InvalidInput);
    CHECK_THROWS_AS(analog_forecast(catalog, {0, 0, 0}, catalog.states.rows() + 1), InvalidInput);
  }
}
