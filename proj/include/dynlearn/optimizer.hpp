#pragma once

#include <map>
#include <string>

#include "dynlearn/tape.hpp"
#include "dynlearn/tensor.hpp"

namespace dynlearn {

using ParamSet = std::map<std::string, Tensor>;

struct RmspropState {
  double lr = 3e-4;
  double decay = 0.9;
  double epsilon = 1e-8;
  ParamSet acc;  // per-parameter squared-gradient moving averages
};

/// acc <- decay*acc + (1-decay)*g^2; param <- param - lr*g/(sqrt(acc)+eps).
/// Parameters without a gradient entry are left untouched.
void rmsprop_step(ParamSet& params, const GradMap& grads, RmspropState& state);

}  // namespace dynlearn
