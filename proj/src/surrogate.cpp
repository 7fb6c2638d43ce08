#include "dynlearn/surrogate.hpp"

#include <cmath>
#include <string>

#include "dynlearn/errors.hpp"
#include "dynlearn/random.hpp"

namespace dynlearn {

namespace {

void rhs_raw(const SurrogateParams& p, const double* x, double* out) {
  const double q[6] = {x[0] * x[1], x[0] * x[2], x[1] * x[2],
                       x[0] * x[0], x[1] * x[1], x[2] * x[2]};
  for (int i = 0; i < 3; ++i) {
    double acc = p.bias(0, i);
    for (int j = 0; j < 3; ++j) acc += p.linear(i, j) * x[j];
    for (int j = 0; j < 6; ++j) acc += p.bilinear(i, j) * q[j];
    out[i] = acc;
  }
}

void rk4_raw(const SurrogateParams& p, double dt, double* x) {
  double k1[3], k2[3], k3[3], k4[3], tmp[3];
  rhs_raw(p, x, k1);
  for (int i = 0; i < 3; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
  rhs_raw(p, tmp, k2);
  for (int i = 0; i < 3; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
  rhs_raw(p, tmp, k3);
  for (int i = 0; i < 3; ++i) tmp[i] = x[i] + dt * k3[i];
  rhs_raw(p, tmp, k4);
  for (int i = 0; i < 3; ++i)
    x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

}  // namespace

std::array<double, 6> bilinear_features(std::span<const double, 3> x) {
  return {x[0] * x[1], x[0] * x[2], x[1] * x[2], x[0] * x[0], x[1] * x[1], x[2] * x[2]};
}

Vec flow_rhs(const SurrogateParams& p, const Vec& x) {
  if (x.size() != 3) throw InvalidInput("flow_rhs: state dimension must be 3");
  Vec out(3);
  rhs_raw(p, x.data(), out.data());
  return out;
}

Vec forecast_step(const SurrogateParams& p, const FlowConfig& cfg, const Vec& x) {
  if (x.size() != 3) throw InvalidInput("forecast_step: state dimension must be 3");
  Vec out = x;
  forecast_step_inplace(p, cfg, out.data());
  return out;
}

void forecast_step_inplace(const SurrogateParams& p, const FlowConfig& cfg, double* x) {
  if (cfg.dt <= 0 || cfg.substeps < 1) throw InvalidInput("forecast_step: bad flow config");
  for (int s = 0; s < cfg.substeps; ++s) {
    rk4_raw(p, cfg.dt, x);
    for (int i = 0; i < 3; ++i)
      if (!std::isfinite(x[i]))
        throw NumericError("forecast_step: non-finite state at substep " + std::to_string(s), s);
  }
}

StepperFn make_stepper(const SurrogateParams& p, const FlowConfig& cfg) {
  return [p, cfg](std::span<double> x) {
    if (x.size() != 3) throw InvalidInput("stepper: state dimension must be 3");
    forecast_step_inplace(p, cfg, x.data());
  };
}

double loss_m_value(const SurrogateParams& p, const FlowConfig& cfg, const Tensor& states) {
  if (states.rows() < 2) throw InvalidInput("loss_m: need at least two states");
  if (states.cols() != 3) throw InvalidInput("loss_m: states must be T x 3");
  double loss = 0.0;
  double x[3];
  for (int t = 0; t + 1 < states.rows(); ++t) {
    x[0] = states(t, 0);
    x[1] = states(t, 1);
    x[2] = states(t, 2);
    forecast_step_inplace(p, cfg, x);
    for (int j = 0; j < 3; ++j) {
      const double r = x[j] - states(t + 1, j);
      loss += r * r;
    }
  }
  return loss;
}

SurrogateVars surrogate_vars(Tape& tape, const SurrogateParams& p, bool trainable) {
  if (trainable)
    return {tape.param("A", p.linear), tape.param("B", p.bilinear), tape.param("b", p.bias)};
  return {tape.constant(p.linear), tape.constant(p.bilinear), tape.constant(p.bias)};
}

Tape::Var flow_rhs_node(Tape& tape, Tape::Var X, const SurrogateVars& v) {
  const Tape::Var x1 = tape.slice_cols(X, 0, 1);
  const Tape::Var x2 = tape.slice_cols(X, 1, 2);
  const Tape::Var x3 = tape.slice_cols(X, 2, 3);
  const Tape::Var q = tape.concat_cols({tape.mul(x1, x2), tape.mul(x1, x3), tape.mul(x2, x3),
                                        tape.mul(x1, x1), tape.mul(x2, x2), tape.mul(x3, x3)});
  const Tape::Var lin = tape.matmul(X, tape.transpose(v.linear));
  const Tape::Var bil = tape.matmul(q, tape.transpose(v.bilinear));
  return tape.add_row(tape.add(lin, bil), v.bias);
}

Tape::Var forecast_node(Tape& tape, Tape::Var X, const SurrogateVars& v, const FlowConfig& cfg) {
  if (cfg.dt <= 0 || cfg.substeps < 1) throw InvalidInput("forecast_node: bad flow config");
  Tape::Var x = X;
  for (int s = 0; s < cfg.substeps; ++s) {
    const Tape::Var k1 = flow_rhs_node(tape, x, v);
    const Tape::Var k2 = flow_rhs_node(tape, tape.add(x, tape.scale(k1, 0.5 * cfg.dt)), v);
    const Tape::Var k3 = flow_rhs_node(tape, tape.add(x, tape.scale(k2, 0.5 * cfg.dt)), v);
    const Tape::Var k4 = flow_rhs_node(tape, tape.add(x, tape.scale(k3, cfg.dt)), v);
    const Tape::Var sum_k =
        tape.add(tape.add(k1, k4), tape.scale(tape.add(k2, k3), 2.0));
    x = tape.add(x, tape.scale(sum_k, cfg.dt / 6.0));
    if (!tape.value(x).all_finite())
      throw NumericError("forecast_node: non-finite state at substep " + std::to_string(s), s);
  }
  return x;
}

Tape::Var loss_m_node(Tape& tape, Tape::Var states, const SurrogateVars& v, const FlowConfig& cfg) {
  const Tensor& st = tape.value(states);
  if (st.rows() < 2) throw InvalidInput("loss_m: need at least two states");
  const int T = st.rows();
  const Tape::Var head = tape.slice_rows(states, 0, T - 1);
  const Tape::Var tail = tape.slice_rows(states, 1, T);
  const Tape::Var pred = forecast_node(tape, head, v, cfg);
  return tape.squared_norm(tape.sub(pred, tail));
}

SurrogateParams init_surrogate(uint64_t seed) {
  Rng rng(seed);
  SurrogateParams p;
  for (long i = 0; i < p.linear.size(); ++i) p.linear.data()[i] = rng.uniform(-0.01, 0.01);
  for (long i = 0; i < p.bilinear.size(); ++i) p.bilinear.data()[i] = rng.uniform(-0.01, 0.01);
  return p;
}

SurrogateParams lorenz63_surrogate(const Lorenz63Params& lp) {
  SurrogateParams p;
  p.linear = Tensor::from_rows(3, 3,
                               {-lp.sigma, lp.sigma, 0.0,
                                lp.rho, -1.0, 0.0,
                                0.0, 0.0, -lp.beta});
  p.bilinear(1, 1) = -1.0;  // -x1*x3 in the second component
  p.bilinear(2, 0) = 1.0;   // +x1*x2 in the third component
  return p;
}

ParamSet to_param_set(const SurrogateParams& p) {
  return {{"A", p.linear}, {"B", p.bilinear}, {"b", p.bias}};
}

SurrogateParams from_param_set(const ParamSet& ps) {
  SurrogateParams p;
  p.linear = ps.at("A");
  p.bilinear = ps.at("B");
  p.bias = ps.at("b");
  if (p.linear.rows() != 3 || p.linear.cols() != 3 || p.bilinear.rows() != 3 ||
      p.bilinear.cols() != 6 || p.bias.rows() != 1 || p.bias.cols() != 3)
    throw InvalidInput("surrogate parameters have wrong shapes");
  return p;
}

}  // namespace dynlearn
