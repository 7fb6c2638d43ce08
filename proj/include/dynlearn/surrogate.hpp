#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>

#include "dynlearn/dynamics.hpp"
#include "dynlearn/optimizer.hpp"
#include "dynlearn/tape.hpp"
#include "dynlearn/tensor.hpp"

namespace dynlearn {

// Quadratic-dictionary residual flow over d = 3:
//   rhs(x) = linear*x + bilinear*q(x) + bias,
// with q the six degree-2 monomials in fixed order.
struct SurrogateParams {
  Tensor linear{3, 3};    // checkpoint key "A"
  Tensor bilinear{3, 6};  // checkpoint key "B"
  Tensor bias{1, 3};      // checkpoint key "b"
};

struct FlowConfig {
  double dt = 0.01;  // inner RK4 step
  int substeps = 1;  // one-step map spans dt * substeps
};

/// (x1*x2, x1*x3, x2*x3, x1^2, x2^2, x3^2)
std::array<double, 6> bilinear_features(std::span<const double, 3> x);

Vec flow_rhs(const SurrogateParams& p, const Vec& x);

/// One application of the learned one-step map: `substeps` RK4 steps of the
/// flow at step dt. Throws NumericError when an intermediate goes non-finite.
Vec forecast_step(const SurrogateParams& p, const FlowConfig& cfg, const Vec& x);

/// In-place variant used in ensemble loops; scratch-free and allocation-free.
void forecast_step_inplace(const SurrogateParams& p, const FlowConfig& cfg, double* x);

/// In-place one-step map with captured parameters.
using StepperFn = std::function<void(std::span<double>)>;
StepperFn make_stepper(const SurrogateParams& p, const FlowConfig& cfg);

/// Sum over consecutive pairs of squared forecast residuals,
/// sum_t |f(x_t) - x_{t+1}|^2, evaluated without a tape.
double loss_m_value(const SurrogateParams& p, const FlowConfig& cfg, const Tensor& states);

// --- tape graph builders (batched over rows of the state matrix) ---

struct SurrogateVars {
  Tape::Var linear, bilinear, bias;
};

/// Registers the parameters on the tape, trainable under names A, B, b or as
/// constants when frozen.
SurrogateVars surrogate_vars(Tape& tape, const SurrogateParams& p, bool trainable);

/// rhs applied to every row of X (n x 3).
Tape::Var flow_rhs_node(Tape& tape, Tape::Var X, const SurrogateVars& v);

/// One-step map applied to every row of X.
Tape::Var forecast_node(Tape& tape, Tape::Var X, const SurrogateVars& v, const FlowConfig& cfg);

/// loss over a states node (T x 3, T >= 2).
Tape::Var loss_m_node(Tape& tape, Tape::Var states, const SurrogateVars& v, const FlowConfig& cfg);

/// Entries of linear/bilinear i.i.d. uniform on [-0.01, 0.01], bias zero.
SurrogateParams init_surrogate(uint64_t seed);

/// Parameters that reproduce the Lorenz-63 field exactly.
SurrogateParams lorenz63_surrogate(const Lorenz63Params& lp = {});

ParamSet to_param_set(const SurrogateParams& p);
SurrogateParams from_param_set(const ParamSet& ps);

}  // namespace dynlearn
