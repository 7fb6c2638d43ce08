#include "dynlearn/voden.hpp"

#include <cmath>
#include <string>

#include "dynlearn/errors.hpp"
#include "dynlearn/random.hpp"

namespace dynlearn {

namespace {

struct ParamShape {
  const char* name;
  int rows, cols;
  bool lstm_bias;
};

std::vector<ParamShape> param_shapes(const VodenDims& d) {
  const int h4 = 4 * d.lstm_hidden;
  const int bi = 2 * d.lstm_hidden;
  return {
      {"enc.W1", d.enc_hidden, d.input, false},
      {"enc.b1", 1, d.enc_hidden, false},
      {"enc.W2", d.lstm_input, d.enc_hidden, false},
      {"enc.b2", 1, d.lstm_input, false},
      {"lstm1.fw.W", h4, d.lstm_input, false},
      {"lstm1.fw.R", h4, d.lstm_hidden, false},
      {"lstm1.fw.b", 1, h4, true},
      {"lstm1.bw.W", h4, d.lstm_input, false},
      {"lstm1.bw.R", h4, d.lstm_hidden, false},
      {"lstm1.bw.b", 1, h4, true},
      {"lstm2.fw.W", h4, bi, false},
      {"lstm2.fw.R", h4, d.lstm_hidden, false},
      {"lstm2.fw.b", 1, h4, true},
      {"lstm2.bw.W", h4, bi, false},
      {"lstm2.bw.R", h4, d.lstm_hidden, false},
      {"lstm2.bw.b", 1, h4, true},
      {"dec.W1", d.dec_hidden, bi, false},
      {"dec.b1", 1, d.dec_hidden, false},
      {"dec.W2", d.output, d.dec_hidden, false},
      {"dec.b2", 1, d.output, false},
  };
}

Tensor mask01_tensor(const MaskPattern& m) {
  Tensor t(m.T, m.d);
  for (int i = 0; i < m.T; ++i)
    for (int j = 0; j < m.d; ++j) t(i, j) = m.at(i, j) ? 1.0 : 0.0;
  return t;
}

Tensor masked_values_tensor(const ObservationSeries& obs) {
  Tensor t(obs.length(), obs.dimension());
  for (int i = 0; i < t.rows(); ++i)
    for (int j = 0; j < t.cols(); ++j)
      t(i, j) = obs.mask.at(i, j) ? obs.values(i, j) : 0.0;
  return t;
}

}  // namespace

ParamSet init_voden_params(uint64_t seed, const VodenDims& dims) {
  Rng rng(seed);
  ParamSet phi;
  const int h = dims.lstm_hidden;
  for (const ParamShape& s : param_shapes(dims)) {
    Tensor t(s.rows, s.cols);
    const bool is_bias = s.rows == 1 && std::string(s.name).find(".b") != std::string::npos;
    if (!is_bias) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(s.cols));
      for (long i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-bound, bound);
    } else if (s.lstm_bias) {
      for (int j = h; j < 2 * h; ++j) t(0, j) = 1.0;  // forget gate
    }
    phi.emplace(s.name, std::move(t));
  }
  return phi;
}

std::vector<std::string> voden_param_names() {
  std::vector<std::string> names;
  for (const ParamShape& s : param_shapes(VodenDims{})) names.emplace_back(s.name);
  return names;
}

VodenVars voden_vars(Tape& tape, const ParamSet& phi, bool trainable) {
  VodenVars out;
  for (const auto& [name, value] : phi)
    out.vars.emplace(name, trainable ? tape.param(name, value) : tape.constant(value));
  return out;
}

Tape::Var inference_node(Tape& tape, Tape::Var y, const VodenVars& v, const VodenDims&) {
  const Tape::Var e1 =
      tape.tanh(tape.add_row(tape.matmul(y, tape.transpose(v.at("enc.W1"))), v.at("enc.b1")));
  const Tape::Var e2 = tape.add_row(tape.matmul(e1, tape.transpose(v.at("enc.W2"))), v.at("enc.b2"));

  const Tape::Var h1 = tape.concat_cols(
      {tape.lstm(e2, v.at("lstm1.fw.W"), v.at("lstm1.fw.R"), v.at("lstm1.fw.b"), false),
       tape.lstm(e2, v.at("lstm1.bw.W"), v.at("lstm1.bw.R"), v.at("lstm1.bw.b"), true)});
  const Tape::Var h2 = tape.concat_cols(
      {tape.lstm(h1, v.at("lstm2.fw.W"), v.at("lstm2.fw.R"), v.at("lstm2.fw.b"), false),
       tape.lstm(h1, v.at("lstm2.bw.W"), v.at("lstm2.bw.R"), v.at("lstm2.bw.b"), true)});

  const Tape::Var d1 =
      tape.tanh(tape.add_row(tape.matmul(h2, tape.transpose(v.at("dec.W1"))), v.at("dec.b1")));
  const Tape::Var out = tape.add_row(tape.matmul(d1, tape.transpose(v.at("dec.W2"))), v.at("dec.b2"));
  if (!tape.value(out).all_finite()) throw NumericError("inference_forward: non-finite activations");
  return out;
}

Tensor inference_forward(const ParamSet& phi, const Tensor& y_interp) {
  Tape tape;
  const VodenVars vars = voden_vars(tape, phi, false);
  const Tape::Var y = tape.constant(y_interp);
  return tape.value(inference_node(tape, y, vars));
}

Tape::Var loss_e_node(Tape& tape, Tape::Var x_star, const SurrogateVars& theta,
                      const FlowConfig& flow, const Tensor& mask01, const Tensor& masked_values,
                      double lambda) {
  const int T = tape.value(x_star).rows();
  if (T < 2) throw InvalidInput("loss_e: need at least two states");

  const Tape::Var pred = forecast_node(tape, tape.slice_rows(x_star, 0, T - 1), theta, flow);
  const Tape::Var dyn = tape.squared_norm(tape.sub(pred, tape.slice_rows(x_star, 1, T)));

  // forecast from row t is valid at row t+1; score it against that row's
  // observation wherever one exists
  Tensor m_tail(T - 1, mask01.cols()), y_tail(T - 1, mask01.cols());
  for (int i = 1; i < T; ++i)
    for (int j = 0; j < mask01.cols(); ++j) {
      m_tail(i - 1, j) = mask01(i, j);
      y_tail(i - 1, j) = masked_values(i, j);
    }
  const Tape::Var innovation = tape.squared_norm(
      tape.sub(tape.mul(tape.constant(std::move(m_tail)), pred), tape.constant(std::move(y_tail))));

  return tape.add(tape.scale(innovation, lambda), dyn);
}

double loss_e_value(const SurrogateParams& theta, const ParamSet& phi,
                    const ObservationSeries& obs, const FlowConfig& flow, double lambda) {
  Tape tape;
  const VodenVars vars = voden_vars(tape, phi, false);
  const SurrogateVars sv = surrogate_vars(tape, theta, false);
  const Tape::Var y = tape.constant(linear_interpolate(obs));
  const Tape::Var x_star = inference_node(tape, y, vars);
  const Tape::Var loss = loss_e_node(tape, x_star, sv, flow, mask01_tensor(obs.mask),
                                     masked_values_tensor(obs), lambda);
  return tape.value(loss)(0, 0);
}

VodenResult voden_train(const ObservationSeries& obs, SurrogateParams theta0, ParamSet phi0,
                        const VodenConfig& cfg, const FlowConfig& flow) {
  if (cfg.n_e_steps < 1 || cfg.n_m_steps < 1) throw InvalidInput("voden_train: budgets must be >= 1");
  if (cfg.epochs < 1) throw InvalidInput("voden_train: epochs must be >= 1");
  if (cfg.lambda < 0) throw InvalidInput("voden_train: lambda must be >= 0");

  const Tensor y_interp = linear_interpolate(obs);
  const Tensor mask01 = mask01_tensor(obs.mask);
  const Tensor masked_values = masked_values_tensor(obs);

  VodenResult res;
  res.theta = std::move(theta0);
  res.phi = std::move(phi0);
  res.initial_loss_e = loss_e_value(res.theta, res.phi, obs, flow, cfg.lambda);
  res.initial_loss_m = loss_m_value(res.theta, flow, inference_forward(res.phi, y_interp));

  RmspropState opt_phi;
  opt_phi.lr = cfg.lr;
  RmspropState opt_theta;
  opt_theta.lr = cfg.m_lr;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int k = 0; k < cfg.n_e_steps; ++k) {
      Tape tape;
      const VodenVars vars = voden_vars(tape, res.phi, true);
      const SurrogateVars sv = surrogate_vars(tape, res.theta, false);
      const Tape::Var y = tape.constant(y_interp);
      const Tape::Var x_star = inference_node(tape, y, vars);
      const Tape::Var loss =
          loss_e_node(tape, x_star, sv, flow, mask01, masked_values, cfg.lambda);
      if (!std::isfinite(tape.value(loss)(0, 0)))
        throw NumericError("voden_train: non-finite loss_e at epoch " + std::to_string(epoch) +
                               " step " + std::to_string(k),
                           epoch);
      rmsprop_step(res.phi, tape.backward(loss), opt_phi);
      ++res.steps_e_total;
    }

    const Tensor x_star = inference_forward(res.phi, y_interp);
    ParamSet theta_params = to_param_set(res.theta);
    for (int k = 0; k < cfg.n_m_steps; ++k) {
      Tape tape;
      const SurrogateVars sv = surrogate_vars(tape, from_param_set(theta_params), true);
      const Tape::Var states = tape.constant(x_star);
      const Tape::Var loss = loss_m_node(tape, states, sv, flow);
      if (!std::isfinite(tape.value(loss)(0, 0)))
        throw NumericError("voden_train: non-finite loss_m at epoch " + std::to_string(epoch) +
                               " step " + std::to_string(k),
                           epoch);
      rmsprop_step(theta_params, tape.backward(loss), opt_theta);
      ++res.steps_m_total;
    }
    res.theta = from_param_set(theta_params);

    res.loss_e_history.push_back(loss_e_value(res.theta, res.phi, obs, flow, cfg.lambda));
    res.loss_m_history.push_back(loss_m_value(res.theta, flow, x_star));
  }
  return res;
}

}  // namespace dynlearn
