#include <doctest.h>

#include <cmath>

#include "dynlearn/dynamics.hpp"
#include "dynlearn/errors.hpp"

using namespace dynlearn;

TEST_CASE("lorenz63_rhs hand-checked values") {
  const Lorenz63Params p;
  CHECK(lorenz63_rhs(p, {0, 0, 0}) == Vec{0, 0, 0});

  const Vec at_123 = lorenz63_rhs(p, {1, 2, 3});
  CHECK(at_123[0] == doctest::Approx(10.0));
  CHECK(at_123[1] == doctest::Approx(23.0));
  CHECK(at_123[2] == doctest::Approx(-6.0));
}

TEST_CASE("lorenz63_rhs vanishes at the three fixed points") {
  const Lorenz63Params p;
  const double c = std::sqrt(p.beta * (p.rho - 1.0));  // sqrt(72) at defaults
  for (const Vec& fp : {Vec{0, 0, 0}, Vec{c, c, p.rho - 1}, Vec{-c, -c, p.rho - 1}}) {
    const Vec f = lorenz63_rhs(p, fp);
    for (double v : f) CHECK(std::fabs(v) < 1e-12);
  }
}

TEST_CASE("lorenz63_rhs rejects wrong dimension") {
  CHECK_THROWS_AS(lorenz63_rhs({}, {1.0, 2.0}), InvalidInput);
}

TEST_CASE("rk4_step zero step is the identity") {
  const OdeSystem sys = make_lorenz63();
  const Vec x{1.5, -2.0, 20.0};
  CHECK(rk4_step(sys.rhs, x, 0.0) == x);
}

TEST_CASE("rk4_step matches the exponential to 4th order") {
  // dx/dt = x, x(0)=1, one step of 0.1: RK4 gives the Taylor sum through dt^4.
  const RhsFn rhs = [](const Vec& x) { return x; };
  const Vec out = rk4_step(rhs, {1.0}, 0.1);
  CHECK(out[0] == doctest::Approx(1.10517083).epsilon(1e-9));
  CHECK(std::fabs(out[0] - std::exp(0.1)) < 1e-7);
}

TEST_CASE("rk4_step is exact on constant fields") {
  const RhsFn rhs = [](const Vec& x) { return Vec(x.size(), 2.5); };
  const Vec out = rk4_step(rhs, {1.0, -3.0}, 0.2);
  CHECK(out[0] == doctest::Approx(1.0 + 2.5 * 0.2).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(-3.0 + 2.5 * 0.2).epsilon(1e-15));
}

TEST_CASE("rk4_step error ratio under dt halving is ~16") {
  const OdeSystem sys = make_lorenz63();
  const Trajectory spin = simulate(sys.rhs, {8, 0, 30}, 0.01, 0, 1000);
  const Vec x0 = spin.states.front();

  auto integrate = [&](double dt, double horizon) {
    Vec x = x0;
    const long n = std::lround(horizon / dt);
    for (long i = 0; i < n; ++i) x = rk4_step(sys.rhs, x, dt);
    return x;
  };
  auto err = [&](const Vec& a, const Vec& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  };

  const Vec ref = integrate(0.0005, 1.0);
  const double e1 = err(integrate(0.02, 1.0), ref);
  const double e2 = err(integrate(0.01, 1.0), ref);
  const double ratio = e1 / e2;
  CHECK(std::log2(ratio) > 3.5);
  CHECK(std::log2(ratio) < 4.5);
}

TEST_CASE("simulate basics") {
  const OdeSystem sys = make_lorenz63();

  SUBCASE("zero steps returns the initial state") {
    const Trajectory t = simulate(sys.rhs, {1, 1, 1}, 0.01, 0, 0);
    REQUIRE(t.length() == 1);
    CHECK(t.states[0] == Vec{1, 1, 1});
  }

  SUBCASE("deterministic") {
    const Trajectory a = simulate(sys.rhs, {8, 0, 30}, 0.01, 500, 100);
    const Trajectory b = simulate(sys.rhs, {8, 0, 30}, 0.01, 500, 100);
    CHECK(a.states == b.states);
  }

  SUBCASE("continuation is bitwise identical to one long run") {
    const Trajectory whole = simulate(sys.rhs, {8, 0, 30}, 0.01, 300, 0);
    const Trajectory head = simulate(sys.rhs, {8, 0, 30}, 0.01, 200, 0);
    const Trajectory tail = simulate(sys.rhs, head.states.back(), 0.01, 100, 0);
    for (int i = 0; i <= 100; ++i) CHECK(tail.states[i] == whole.states[200 + i]);
  }
}

TEST_CASE("long simulation stays inside the attractor box") {
  const OdeSystem sys = make_lorenz63();
  const Trajectory t = simulate(sys.rhs, {8, 0, 30}, 0.01, 100000, 1000);
  for (const Vec& x : t.states) {
    CHECK(std::fabs(x[0]) <= 30.0);
    CHECK(std::fabs(x[1]) <= 30.0);
    CHECK(x[2] >= 0.0);
    CHECK(x[2] <= 60.0);
  }
}

TEST_CASE("simulate reports divergence with the step index") {
  // dx/dt = x^2 blows up in finite time
  const RhsFn rhs = [](const Vec& x) { return Vec{x[0] * x[0]}; };
  try {
    simulate(rhs, {1.0}, 0.5, 100, 0);
    FAIL("expected divergence");
  } catch (const NumericError& e) {
    CHECK(e.step() >= 0);
  }
}
