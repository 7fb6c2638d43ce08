#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dynlearn/errors.hpp"
#include "dynlearn/evaluation.hpp"
#include "dynlearn/io.hpp"

using namespace dynlearn;

namespace {

StepperFn true_lorenz_stepper(double dt = 0.01) {
  const OdeSystem sys = make_lorenz63();
  return [sys, dt](std::span<double> x) {
    Vec v(x.begin(), x.end());
    v = rk4_step(sys.rhs, v, dt);
    for (size_t i = 0; i < x.size(); ++i) x[i] = v[i];
  };
}

Trajectory holdout_truth(long n_steps) {
  const OdeSystem sys = make_lorenz63();
  return simulate(sys.rhs, {-4.0, 3.0, 22.0}, 0.01, n_steps, 1500);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("forecast_rmse of the generating model is zero") {
  const Trajectory truth = holdout_truth(500);
  const ForecastReport rep = forecast_rmse(true_lorenz_stepper(), 3, truth, 100);
  CHECK(rep.rmse_h < 1e-12);
  CHECK(rep.rmse_4h < 1e-12);
  CHECK(rep.n_failed == 0);
  CHECK(rep.delta == doctest::Approx(0.01));
}

TEST_CASE("persistence forecast error equals the mean one-step displacement") {
  const Trajectory truth = holdout_truth(3000);
  const StepperFn persistence = [](std::span<double>) {};
  const ForecastReport rep = forecast_rmse(persistence, 3, truth, 1000);

  double disp = 0;
  for (int t = 0; t + 1 < truth.length(); ++t) {
    double e = 0;
    for (int j = 0; j < 3; ++j) {
      const double d = truth.states[t + 1][j] - truth.states[t][j];
      e += d * d;
    }
    disp += e;
  }
  disp = std::sqrt(disp / (truth.length() - 1));
  CHECK(rep.rmse_h == doctest::Approx(disp).epsilon(0.2));
}

TEST_CASE("four-step error dominates one-step error for the true model") {
  // imperfect model: slightly wrong rho
  const OdeSystem wrong = make_lorenz63({10.0, 27.5, 8.0 / 3.0});
  const StepperFn stepper = [wrong](std::span<double> x) {
    Vec v(x.begin(), x.end());
    v = rk4_step(wrong.rhs, v, 0.01);
    for (size_t i = 0; i < x.size(); ++i) x[i] = v[i];
  };
  const Trajectory truth = holdout_truth(5000);
  const ForecastReport rep = forecast_rmse(stepper, 3, truth, 1000);
  CHECK(rep.rmse_4h >= rep.rmse_h);
}

TEST_CASE("failed starts are excluded and counted") {
  // diverges whenever x1 is positive at the start
  const StepperFn flaky = [](std::span<double> x) {
    if (x[0] > 0) x[0] = 2e6;
  };
  const Trajectory truth = holdout_truth(2000);
  const ForecastReport rep = forecast_rmse(flaky, 3, truth, 200);
  CHECK(rep.n_failed > 0);
  CHECK(rep.n_failed < 200);
  CHECK(std::isfinite(rep.rmse_h));
}

TEST_CASE("lyapunov_lambda1 reference values") {
  SUBCASE("identity map has no separation growth") {
    const StepperFn identity = [](std::span<double>) {};
    const LyapunovReport rep = lyapunov_lambda1(identity, 3, {1, 2, 3}, 1000, 0.01, 10);
    CHECK(std::fabs(rep.lambda1) < 1e-6);
  }

  SUBCASE("linear contraction has its analytic exponent") {
    const double a = -0.5, dt = 0.01;
    const double f = std::exp(a * dt);
    const StepperFn contract = [f](std::span<double> x) {
      for (double& v : x) v *= f;
    };
    const LyapunovReport rep = lyapunov_lambda1(contract, 3, {1, 1, 1}, 10000, dt, 10);
    CHECK(rep.lambda1 == doctest::Approx(-0.5).epsilon(0.02));
  }

  SUBCASE("true system exponent") {
    const Trajectory spin = holdout_truth(0);
    const LyapunovReport rep =
        lyapunov_lambda1(true_lorenz_stepper(), 3, spin.states.back(), 10000, 0.01, 10);
    CHECK(rep.lambda1 > 0.86);
    CHECK(rep.lambda1 < 0.96);
  }

  SUBCASE("estimate is stable in d0 and the renormalization interval") {
    const Trajectory spin = holdout_truth(0);
    const Vec x0 = spin.states.back();
    const double base =
        lyapunov_lambda1(true_lorenz_stepper(), 3, x0, 10000, 0.01, 10, 1e-8).lambda1;
    for (const double d0 : {1e-10, 1e-6}) {
      const double v = lyapunov_lambda1(true_lorenz_stepper(), 3, x0, 10000, 0.01, 10, d0).lambda1;
      CHECK(std::fabs(v - base) < 0.02);
    }
    for (const int interval : {5, 20}) {
      const double v =
          lyapunov_lambda1(true_lorenz_stepper(), 3, x0, 10000, 0.01, interval, 1e-8).lambda1;
      CHECK(std::fabs(v - base) < 0.02);
    }
  }

  SUBCASE("diverging orbit raises with the step index") {
    const StepperFn blow_up = [](std::span<double> x) {
      for (double& v : x) v *= 10.0;
    };
    CHECK_THROWS_AS(lyapunov_lambda1(blow_up, 3, {1, 1, 1}, 1000, 0.01, 10), NumericError);
  }
}

TEST_CASE("attractor_export") {
  const std::string dir = (std::filesystem::temp_directory_path() / "dynlearn_eval_test").string();
  std::filesystem::create_directories(dir);

  SUBCASE("zero steps write a single row") {
    const std::string path = dir + "/single.csv";
    attractor_export(true_lorenz_stepper(), 3, {1, 2, 3}, 0.01, 0, 0, path);
    std::ifstream in(path);
    std::string line;
    int rows = 0;
    while (std::getline(in, line))
      if (!line.empty() && line[0] != '#' && line[0] != 't') ++rows;
    CHECK(rows == 1);
  }

  SUBCASE("long true-model run visits both lobes and is byte-stable") {
    const std::string a = dir + "/orbit_a.csv", b = dir + "/orbit_b.csv";
    attractor_export(true_lorenz_stepper(), 3, {8, 0, 30}, 0.01, 100000, 1000, a, "deadbeef");
    attractor_export(true_lorenz_stepper(), 3, {8, 0, 30}, 0.01, 100000, 1000, b, "deadbeef");
    CHECK(slurp(a) == slurp(b));

    const Trajectory orbit = read_trajectory_csv(a);
    int left = 0, right = 0;
    for (const Vec& x : orbit.states) (x[0] < 0 ? left : right)++;
    CHECK(left >= 100);
    CHECK(right >= 100);
  }
}
