#pragma once

#include <algorithm>
#include <cmath>

#include "dynlearn/optimizer.hpp"
#include "dynlearn/tape.hpp"

namespace dynlearn::testing {

// Central-finite-difference oracle for tape gradients. build must register
// every entry of params on a fresh tape and return the scalar loss node.
// Returns the worst relative error, |analytic - fd| / max(1, |analytic|, |fd|).
template <typename BuildLoss>
double max_gradcheck_error(const ParamSet& params, BuildLoss build, double h = 1e-5) {
  Tape tape;
  const Tape::Var loss = build(tape, params);
  const GradMap grads = tape.backward(loss);

  auto loss_value = [&](const ParamSet& p) {
    Tape t;
    return t.value(build(t, p))(0, 0);
  };

  double worst = 0.0;
  for (const auto& [name, value] : params) {
    for (long i = 0; i < value.size(); ++i) {
      ParamSet plus = params, minus = params;
      plus.at(name).data()[i] += h;
      minus.at(name).data()[i] -= h;
      const double fd = (loss_value(plus) - loss_value(minus)) / (2.0 * h);
      const double analytic = grads.count(name) ? grads.at(name).data()[i] : 0.0;
      const double denom = std::max({1.0, std::fabs(analytic), std::fabs(fd)});
      worst = std::max(worst, std::fabs(analytic - fd) / denom);
    }
  }
  return worst;
}

}  // namespace dynlearn::testing
