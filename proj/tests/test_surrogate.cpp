#include <doctest.h>

#include <cmath>

#include "dynlearn/dynamics.hpp"
#include "dynlearn/errors.hpp"
#include "dynlearn/random.hpp"
#include "dynlearn/surrogate.hpp"
#include "support/gradcheck.hpp"

using namespace dynlearn;
using dynlearn::testing::max_gradcheck_error;

namespace {

Vec random_state(Rng& rng, double scale = 20.0) {
  return {rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(0.0, 2 * scale)};
}

}  // namespace

TEST_CASE("bilinear_features fixed order") {
  const double zero[3] = {0, 0, 0};
  for (double f : bilinear_features(std::span<const double, 3>(zero, 3))) CHECK(f == 0.0);

  const double x[3] = {1, 2, 3};
  const auto f = bilinear_features(std::span<const double, 3>(x, 3));
  CHECK(f == std::array<double, 6>{2, 3, 6, 1, 4, 9});

  // swapping x1 and x2 permutes the features deterministically
  const double y[3] = {2, 1, 3};
  const auto g = bilinear_features(std::span<const double, 3>(y, 3));
  CHECK(g == std::array<double, 6>{f[0], f[2], f[1], f[4], f[3], f[5]});
}

TEST_CASE("flow_rhs special cases") {
  const SurrogateParams zero;
  CHECK(flow_rhs(zero, {5, -3, 8}) == Vec{0, 0, 0});

  SurrogateParams linear_only;
  linear_only.linear = Tensor::from_rows(3, 3, {1, 2, 0, 0, 1, 0, 0, 0, -1});
  const Vec v = flow_rhs(linear_only, {1, 1, 2});
  CHECK(v == Vec{3, 1, -2});
}

TEST_CASE("lorenz63 parameters are representable exactly") {
  const SurrogateParams star = lorenz63_surrogate();
  Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    const Vec x = random_state(rng);
    const Vec a = flow_rhs(star, x);
    const Vec b = lorenz63_rhs({}, x);
    for (int j = 0; j < 3; ++j) CHECK(std::fabs(a[j] - b[j]) < 1e-12);
  }
}

TEST_CASE("forecast_step") {
  SUBCASE("zero field is the identity map") {
    const SurrogateParams zero;
    CHECK(forecast_step(zero, {0.01, 1}, {1, 2, 3}) == Vec{1, 2, 3});
  }

  SUBCASE("matches the reference RK4 on the true field") {
    const SurrogateParams star = lorenz63_surrogate();
    const OdeSystem sys = make_lorenz63();
    Rng rng(6);
    for (int k = 0; k < 50; ++k) {
      const Vec x = random_state(rng);
      const Vec a = forecast_step(star, {0.01, 1}, x);
      const Vec b = rk4_step(sys.rhs, x, 0.01);
      for (int j = 0; j < 3; ++j) CHECK(std::fabs(a[j] - b[j]) < 1e-12);
    }
  }

  SUBCASE("two substeps equal two chained steps") {
    const SurrogateParams star = lorenz63_surrogate();
    const Vec x{2.0, -1.0, 24.0};
    const Vec two = forecast_step(star, {0.01, 2}, x);
    const Vec chained = forecast_step(star, {0.01, 1}, forecast_step(star, {0.01, 1}, x));
    CHECK(two == chained);
  }

  SUBCASE("tape graph reproduces the direct evaluation") {
    const SurrogateParams star = lorenz63_surrogate();
    Tensor batch(4, 3);
    Rng rng(8);
    for (int i = 0; i < 4; ++i) {
      const Vec x = random_state(rng);
      for (int j = 0; j < 3; ++j) batch(i, j) = x[j];
    }
    Tape tape;
    const SurrogateVars vars = surrogate_vars(tape, star, false);
    const auto out = forecast_node(tape, tape.constant(batch), vars, {0.01, 3});
    for (int i = 0; i < 4; ++i) {
      Vec x(batch.row_span(i).begin(), batch.row_span(i).end());
      const Vec direct = forecast_step(star, {0.01, 3}, x);
      for (int j = 0; j < 3; ++j)
        CHECK(tape.value(out)(i, j) == doctest::Approx(direct[j]).epsilon(1e-14));
    }
  }
}

TEST_CASE("loss_m values") {
  const FlowConfig cfg{0.01, 1};

  SUBCASE("data generated by the model itself fits exactly") {
    const SurrogateParams star = lorenz63_surrogate();
    Tensor states(200, 3);
    Vec x{4.0, -3.0, 21.0};
    for (int t = 0; t < 200; ++t) {
      for (int j = 0; j < 3; ++j) states(t, j) = x[j];
      x = forecast_step(star, cfg, x);
    }
    CHECK(loss_m_value(star, cfg, states) < 1e-20);
  }

  SUBCASE("clean truth satisfies the model flow") {
    const SurrogateParams star = lorenz63_surrogate();
    const OdeSystem sys = make_lorenz63();
    const Trajectory truth = simulate(sys.rhs, {8, 0, 30}, 0.01, 999, 1000);
    Tensor states(truth.length(), 3);
    for (int t = 0; t < truth.length(); ++t)
      for (int j = 0; j < 3; ++j) states(t, j) = truth.states[t][j];
    CHECK(loss_m_value(star, cfg, states) / truth.length() < 1e-10);
  }

  SUBCASE("unit displacement under the identity forecast") {
    const SurrogateParams zero;
    const Tensor states = Tensor::from_rows(2, 3, {0, 0, 0, 1, 0, 0});
    CHECK(loss_m_value(zero, cfg, states) == doctest::Approx(1.0));
  }

  SUBCASE("fewer than two states is an error") {
    CHECK_THROWS_AS(loss_m_value({}, cfg, Tensor(1, 3)), InvalidInput);
  }
}

TEST_CASE("flow_rhs is exactly quadratic (constant second differences)") {
  const SurrogateParams p = init_surrogate(99);
  Rng rng(14);
  const Vec x = random_state(rng, 3.0);
  for (int dir = 0; dir < 3; ++dir) {
    for (const double h : {0.25, 0.5, 1.0}) {
      Vec xp = x, xm = x;
      xp[dir] += h;
      xm[dir] -= h;
      const Vec fp = flow_rhs(p, xp), fm = flow_rhs(p, xm), f0 = flow_rhs(p, x);
      for (int j = 0; j < 3; ++j) {
        const double second_diff = (fp[j] - 2 * f0[j] + fm[j]) / (h * h);
        const double expected = 2.0 * p.bilinear(j, 3 + dir);  // coefficient on x_dir^2
        CHECK(second_diff == doctest::Approx(expected).epsilon(1e-7));
      }
    }
  }
}

TEST_CASE("gradcheck: loss_m against central differences") {
  const OdeSystem sys = make_lorenz63();
  const Trajectory truth = simulate(sys.rhs, {8, 0, 30}, 0.01, 12, 1000);
  Tensor states(truth.length(), 3);
  for (int t = 0; t < truth.length(); ++t)
    for (int j = 0; j < 3; ++j) states(t, j) = truth.states[t][j];

  const SurrogateParams p = init_surrogate(3);
  const FlowConfig cfg{0.01, 2};
  const double err = max_gradcheck_error(to_param_set(p), [&](Tape& t, const ParamSet& ps) {
    const SurrogateVars vars = surrogate_vars(t, from_param_set(ps), true);
    return loss_m_node(t, t.constant(states), vars, cfg);
  });
  CHECK(err < 1e-5);
}

TEST_CASE("one optimizer epoch at the truth is near-stationary") {
  // Whole-series batch: one epoch is one RMSprop step. On data the model
  // itself generated, the gradient is exactly zero, so nothing moves.
  const SurrogateParams star = lorenz63_surrogate();
  const FlowConfig cfg{0.01, 1};
  Tensor states(500, 3);
  Vec x{1.0, 2.0, 25.0};
  for (int t = 0; t < 500; ++t) {
    for (int j = 0; j < 3; ++j) states(t, j) = x[j];
    x = forecast_step(star, cfg, x);
  }

  ParamSet params = to_param_set(star);
  Tape tape;
  const SurrogateVars vars = surrogate_vars(tape, star, true);
  const auto loss = loss_m_node(tape, tape.constant(states), vars, cfg);
  RmspropState st;
  rmsprop_step(params, tape.backward(loss), st);

  const ParamSet before = to_param_set(star);
  for (const auto& [name, value] : params) {
    const Tensor& orig = before.at(name);
    for (long i = 0; i < value.size(); ++i)
      CHECK(std::fabs(value.data()[i] - orig.data()[i]) < 1e-6);
  }
}

TEST_CASE("surrogate parameter shapes survive the param-set round trip") {
  const SurrogateParams p = init_surrogate(1);
  const SurrogateParams q = from_param_set(to_param_set(p));
  for (long i = 0; i < p.linear.size(); ++i) CHECK(p.linear.data()[i] == q.linear.data()[i]);
  for (long i = 0; i < p.bilinear.size(); ++i) CHECK(p.bilinear.data()[i] == q.bilinear.data()[i]);
  for (long i = 0; i < p.bias.size(); ++i) CHECK(p.bias.data()[i] == q.bias.data()[i]);
}
