#include "dynlearn/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "dynlearn/errors.hpp"

namespace dynlearn {

using nlohmann::json;

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::kFull: return "full";
    case Scenario::kS1: return "s1";
    case Scenario::kS2: return "s2";
  }
  return "full";
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kEnksEm: return "enks-em";
    case Method::kVoden: return "voden";
    case Method::kBinn: return "binn";
    case Method::kSr: return "sr";
    case Method::kSrHann: return "sr-hann";
    case Method::kAf: return "af";
  }
  return "enks-em";
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "full") return Scenario::kFull;
  if (s == "s1") return Scenario::kS1;
  if (s == "s2") return Scenario::kS2;
  throw InvalidInput("corruption.scenario: unknown value '" + s + "'");
}

Method method_from_string(const std::string& s) {
  if (s == "enks-em") return Method::kEnksEm;
  if (s == "voden") return Method::kVoden;
  if (s == "binn") return Method::kBinn;
  if (s == "sr") return Method::kSr;
  if (s == "sr-hann") return Method::kSrHann;
  if (s == "af") return Method::kAf;
  throw InvalidInput("method.name: unknown value '" + s + "'");
}

namespace {

json to_json(const ExperimentConfig& c) {
  json j;
  j["system"] = {{"name", c.system.name},
                 {"sigma", c.system.params.sigma},
                 {"rho", c.system.params.rho},
                 {"beta", c.system.params.beta}};
  j["simulation"] = {{"dt", c.simulation.dt},
                     {"n_steps", c.simulation.n_steps},
                     {"spinup", c.simulation.spinup},
                     {"seed", c.simulation.seed},
                     {"x0", c.simulation.x0},
                     {"jitter_x0", c.simulation.jitter_x0}};
  j["corruption"] = {{"variance", c.corruption.variance},
                     {"scenario", to_string(c.corruption.scenario)},
                     {"noise_seed", c.corruption.noise_seed},
                     {"mask_seed", c.corruption.mask_seed},
                     {"period", c.corruption.period},
                     {"rate", c.corruption.rate}};
  json enks = {{"n_members", c.enks.n_members},
               {"model_noise_var", c.enks.model_noise_var},
               {"inflation", c.enks.inflation},
               {"seed", c.enks.seed},
               {"n_em_iters", c.enks.n_em_iters},
               {"n_m_steps", c.enks.n_m_steps},
               {"m_lr", c.enks.m_lr},
               {"init_seed", c.enks.init_seed}};
  enks["obs_noise_var"] = c.enks.obs_noise_var ? json(*c.enks.obs_noise_var) : json(nullptr);
  j["method"] = {{"name", to_string(c.method)},
                 {"enks", enks},
                 {"voden",
                  {{"lambda", c.voden.lambda},
                   {"epochs", c.voden.epochs},
                   {"n_e_steps", c.voden.n_e_steps},
                   {"n_m_steps", c.voden.n_m_steps},
                   {"lr", c.voden.lr},
                   {"m_lr", c.voden.m_lr},
                   {"init_seed", c.voden.init_seed}}},
                 {"binn", {{"steps", c.binn.steps}, {"lr", c.binn.lr}, {"init_seed", c.binn.init_seed}}},
                 {"sparse",
                  {{"threshold", c.sparse.threshold},
                   {"max_sweeps", c.sparse.max_sweeps},
                   {"window", c.sparse.window}}},
                 {"analog", {{"k", c.analog.k}}}};
  j["evaluation"] = {{"n_initials", c.evaluation.n_initials},
                     {"holdout_seed", c.evaluation.holdout_seed},
                     {"holdout_steps", c.evaluation.holdout_steps},
                     {"lyapunov_steps", c.evaluation.lyapunov_steps},
                     {"renorm_interval", c.evaluation.renorm_interval},
                     {"d0", c.evaluation.d0},
                     {"attractor_steps", c.evaluation.attractor_steps}};
  j["output"] = {{"dir", c.output_dir}};
  return j;
}

template <typename T>
void read_field(const json& j, const char* section, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidInput(std::string(section) + "." + key + ": bad value");
  }
}

ExperimentConfig from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("system")) {
    const json& s = j.at("system");
    read_field(s, "system", "name", c.system.name);
    read_field(s, "system", "sigma", c.system.params.sigma);
    read_field(s, "system", "rho", c.system.params.rho);
    read_field(s, "system", "beta", c.system.params.beta);
  }
  if (j.contains("simulation")) {
    const json& s = j.at("simulation");
    read_field(s, "simulation", "dt", c.simulation.dt);
    read_field(s, "simulation", "n_steps", c.simulation.n_steps);
    read_field(s, "simulation", "spinup", c.simulation.spinup);
    read_field(s, "simulation", "seed", c.simulation.seed);
    read_field(s, "simulation", "x0", c.simulation.x0);
    read_field(s, "simulation", "jitter_x0", c.simulation.jitter_x0);
  }
  if (j.contains("corruption")) {
    const json& s = j.at("corruption");
    read_field(s, "corruption", "variance", c.corruption.variance);
    if (s.contains("scenario")) c.corruption.scenario = scenario_from_string(s.at("scenario").get<std::string>());
    read_field(s, "corruption", "noise_seed", c.corruption.noise_seed);
    read_field(s, "corruption", "mask_seed", c.corruption.mask_seed);
    read_field(s, "corruption", "period", c.corruption.period);
    read_field(s, "corruption", "rate", c.corruption.rate);
  }
  if (j.contains("method")) {
    const json& m = j.at("method");
    if (m.contains("name")) c.method = method_from_string(m.at("name").get<std::string>());
    if (m.contains("enks")) {
      const json& e = m.at("enks");
      read_field(e, "method.enks", "n_members", c.enks.n_members);
      read_field(e, "method.enks", "model_noise_var", c.enks.model_noise_var);
      if (e.contains("obs_noise_var") && !e.at("obs_noise_var").is_null()) {
        double r = 0;
        read_field(e, "method.enks", "obs_noise_var", r);
        c.enks.obs_noise_var = r;
      }
      read_field(e, "method.enks", "inflation", c.enks.inflation);
      read_field(e, "method.enks", "seed", c.enks.seed);
      read_field(e, "method.enks", "n_em_iters", c.enks.n_em_iters);
      read_field(e, "method.enks", "n_m_steps", c.enks.n_m_steps);
      read_field(e, "method.enks", "m_lr", c.enks.m_lr);
      read_field(e, "method.enks", "init_seed", c.enks.init_seed);
    }
    if (m.contains("voden")) {
      const json& v = m.at("voden");
      read_field(v, "method.voden", "lambda", c.voden.lambda);
      read_field(v, "method.voden", "epochs", c.voden.epochs);
      read_field(v, "method.voden", "n_e_steps", c.voden.n_e_steps);
      read_field(v, "method.voden", "n_m_steps", c.voden.n_m_steps);
      read_field(v, "method.voden", "lr", c.voden.lr);
      read_field(v, "method.voden", "m_lr", c.voden.m_lr);
      read_field(v, "method.voden", "init_seed", c.voden.init_seed);
    }
    if (m.contains("binn")) {
      const json& b = m.at("binn");
      read_field(b, "method.binn", "steps", c.binn.steps);
      read_field(b, "method.binn", "lr", c.binn.lr);
      read_field(b, "method.binn", "init_seed", c.binn.init_seed);
    }
    if (m.contains("sparse")) {
      const json& s = m.at("sparse");
      read_field(s, "method.sparse", "threshold", c.sparse.threshold);
      read_field(s, "method.sparse", "max_sweeps", c.sparse.max_sweeps);
      read_field(s, "method.sparse", "window", c.sparse.window);
    }
    if (m.contains("analog")) read_field(m.at("analog"), "method.analog", "k", c.analog.k);
  }
  if (j.contains("evaluation")) {
    const json& e = j.at("evaluation");
    read_field(e, "evaluation", "n_initials", c.evaluation.n_initials);
    read_field(e, "evaluation", "holdout_seed", c.evaluation.holdout_seed);
    read_field(e, "evaluation", "holdout_steps", c.evaluation.holdout_steps);
    read_field(e, "evaluation", "lyapunov_steps", c.evaluation.lyapunov_steps);
    read_field(e, "evaluation", "renorm_interval", c.evaluation.renorm_interval);
    read_field(e, "evaluation", "d0", c.evaluation.d0);
    read_field(e, "evaluation", "attractor_steps", c.evaluation.attractor_steps);
  }
  if (j.contains("output")) read_field(j.at("output"), "output", "dir", c.output_dir);
  return c;
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

void validate(const ExperimentConfig& c) {
  auto check = [](bool ok, const char* field, const char* what) {
    if (!ok) throw InvalidInput(std::string(field) + ": " + what);
  };
  check(c.system.name == "lorenz63", "system.name", "only lorenz63 is built in");
  check(std::isfinite(c.system.params.sigma) && std::isfinite(c.system.params.rho) &&
            std::isfinite(c.system.params.beta),
        "system", "parameters must be finite");
  check(c.simulation.dt > 0, "simulation.dt", "must be > 0");
  check(c.simulation.n_steps >= 0, "simulation.n_steps", "must be >= 0");
  check(c.simulation.spinup >= 0, "simulation.spinup", "must be >= 0");
  check(c.corruption.variance >= 0, "corruption.variance", "must be >= 0");
  check(c.corruption.period >= 1, "corruption.period", "must be >= 1");
  check(c.corruption.rate >= 0 && c.corruption.rate <= 1, "corruption.rate", "must be in [0, 1]");
  check(c.enks.n_members >= 2, "method.enks.n_members", "must be >= 2");
  check(c.enks.model_noise_var >= 0, "method.enks.model_noise_var", "must be >= 0");
  check(!c.enks.obs_noise_var || *c.enks.obs_noise_var > 0, "method.enks.obs_noise_var",
        "must be > 0");
  check(c.enks.inflation >= 1.0, "method.enks.inflation", "must be >= 1");
  check(c.enks.n_em_iters >= 1, "method.enks.n_em_iters", "must be >= 1");
  check(c.enks.n_m_steps >= 1, "method.enks.n_m_steps", "must be >= 1");
  check(c.enks.m_lr > 0, "method.enks.m_lr", "must be > 0");
  check(c.voden.lambda >= 0, "method.voden.lambda", "must be >= 0");
  check(c.voden.epochs >= 1, "method.voden.epochs", "must be >= 1");
  check(c.voden.n_e_steps >= 1, "method.voden.n_e_steps", "must be >= 1");
  check(c.voden.n_m_steps >= 1, "method.voden.n_m_steps", "must be >= 1");
  check(c.voden.lr > 0, "method.voden.lr", "must be > 0");
  check(c.voden.m_lr > 0, "method.voden.m_lr", "must be > 0");
  check(c.binn.steps >= 1, "method.binn.steps", "must be >= 1");
  check(c.binn.lr > 0, "method.binn.lr", "must be > 0");
  check(c.sparse.threshold >= 0, "method.sparse.threshold", "must be >= 0");
  check(c.sparse.max_sweeps >= 1, "method.sparse.max_sweeps", "must be >= 1");
  check(c.sparse.window >= 2, "method.sparse.window", "must be >= 2");
  check(c.analog.k >= 1, "method.analog.k", "must be >= 1");
  check(c.evaluation.n_initials >= 1, "evaluation.n_initials", "must be >= 1");
  check(c.evaluation.holdout_steps >= 5, "evaluation.holdout_steps", "must be >= 5");
  check(c.evaluation.renorm_interval >= 1, "evaluation.renorm_interval", "must be >= 1");
  check(c.evaluation.lyapunov_steps >= c.evaluation.renorm_interval, "evaluation.lyapunov_steps",
        "must be >= renorm_interval");
  check(c.evaluation.d0 > 0, "evaluation.d0", "must be > 0");
  check(c.evaluation.attractor_steps >= 0, "evaluation.attractor_steps", "must be >= 0");
  check(!c.output_dir.empty(), "output.dir", "must not be empty");
}

ExperimentConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config: invalid JSON: ") + e.what());
  }
  ExperimentConfig cfg = from_json(j);
  validate(cfg);
  return cfg;
}

std::string config_text(const ExperimentConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

void save_config(const std::string& path, const ExperimentConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config: " + path);
  out << config_text(cfg);
}

std::string config_hash(const ExperimentConfig& cfg) {
  const uint64_t h = fnv1a(to_json(cfg).dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dynlearn
