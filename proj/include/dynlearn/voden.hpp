#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dynlearn/observation.hpp"
#include "dynlearn/optimizer.hpp"
#include "dynlearn/surrogate.hpp"
#include "dynlearn/tape.hpp"

namespace dynlearn {

// Inference network: per-timestep encoder (3 -> 7 -> 9, tanh hidden), two
// bidirectional LSTM layers of hidden size 9 (forward/backward concatenated),
// per-timestep decoder (18 -> 7 -> 3, tanh hidden).
struct VodenDims {
  int input = 3;
  int enc_hidden = 7;
  int lstm_input = 9;
  int lstm_hidden = 9;
  int dec_hidden = 7;
  int output = 3;
};

/// Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] weights, zero biases except the
/// LSTM forget-gate block, which starts at +1.
ParamSet init_voden_params(uint64_t seed, const VodenDims& dims = {});

/// Names of every inference-network parameter, in initialization order.
std::vector<std::string> voden_param_names();

struct VodenVars {
  std::map<std::string, Tape::Var> vars;
  Tape::Var at(const std::string& name) const { return vars.at(name); }
};

VodenVars voden_vars(Tape& tape, const ParamSet& phi, bool trainable);

/// Builds decoder(biLSTM2(biLSTM1(encoder(y)))) over a T x 3 input node.
Tape::Var inference_node(Tape& tape, Tape::Var y, const VodenVars& vars,
                         const VodenDims& dims = {});

/// Value-only forward pass (T x 3 in, T x 3 out).
Tensor inference_forward(const ParamSet& phi, const Tensor& y_interp);

/// Inner loss over a T x 3 state node:
///   sum_t [ lambda*|mask .* (f(x*_t) - y)|^2 + |f(x*_t) - x*_{t+1}|^2 ],
/// the innovation term scoring each forecast against the observation at the
/// time the forecast is valid for. mask01 is the 0/1 mask and masked_values
/// the observations with hidden entries zeroed; both T x 3.
Tape::Var loss_e_node(Tape& tape, Tape::Var x_star, const SurrogateVars& theta,
                      const FlowConfig& flow, const Tensor& mask01, const Tensor& masked_values,
                      double lambda);

/// Full loss_e for the given networks and observations (interpolated input
/// built internally). Value only.
double loss_e_value(const SurrogateParams& theta, const ParamSet& phi,
                    const ObservationSeries& obs, const FlowConfig& flow, double lambda);

struct VodenConfig {
  double lambda = 0.1;
  int n_e_steps = 100;
  int n_m_steps = 100;
  int epochs = 100;
  double lr = 3e-4;       // inference-network steps
  double m_lr = 1e-2;     // surrogate steps
  uint64_t seed = 0;      // reserved for future stochastic variants
};

struct VodenResult {
  SurrogateParams theta;
  ParamSet phi;
  std::vector<double> loss_e_history;  // one entry per outer epoch
  std::vector<double> loss_m_history;
  double initial_loss_e = 0.0;
  double initial_loss_m = 0.0;
  long steps_e_total = 0;
  long steps_m_total = 0;
};

/// Alternates N_E RMSprop steps on loss_e over the inference parameters with
/// N_M steps on loss_m over the surrogate, for the configured epochs.
VodenResult voden_train(const ObservationSeries& obs, SurrogateParams theta0, ParamSet phi0,
                        const VodenConfig& cfg, const FlowConfig& flow);

}  // namespace dynlearn
