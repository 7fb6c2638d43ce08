#include "dynlearn/optimizer.hpp"

#include <cmath>

#include "dynlearn/errors.hpp"

namespace dynlearn {

void rmsprop_step(ParamSet& params, const GradMap& grads, RmspropState& state) {
  if (state.lr <= 0) throw InvalidInput("rmsprop_step: lr must be > 0");
  for (auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) throw InvalidInput("rmsprop_step: unknown parameter " + name);
    Tensor& p = it->second;
    if (!p.same_shape(g)) throw InvalidInput("rmsprop_step: shape mismatch for " + name);

    Tensor& acc = state.acc.try_emplace(name, Tensor(p.rows(), p.cols())).first->second;
    for (long i = 0; i < p.size(); ++i) {
      const double gi = g.data()[i];
      double& a = acc.data()[i];
      a = state.decay * a + (1.0 - state.decay) * gi * gi;
      p.data()[i] -= state.lr * gi / (std::sqrt(a) + state.epsilon);
    }
  }
}

}  // namespace dynlearn
