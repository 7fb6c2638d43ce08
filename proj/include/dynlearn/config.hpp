#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "dynlearn/dynamics.hpp"

namespace dynlearn {

enum class Scenario { kFull, kS1, kS2 };
enum class Method { kEnksEm, kVoden, kBinn, kSr, kSrHann, kAf };

std::string to_string(Scenario s);
std::string to_string(Method m);
Scenario scenario_from_string(const std::string& s);
Method method_from_string(const std::string& s);

struct SystemConfig {
  std::string name = "lorenz63";
  Lorenz63Params params;
};

struct SimulationConfig {
  double dt = 0.01;
  long n_steps = 10000;
  long spinup = 1000;
  uint64_t seed = 1;
  std::array<double, 3> x0 = {8.0, 0.0, 30.0};
  bool jitter_x0 = true;  // seed-dependent offset of x0 before spinup
};

struct CorruptionConfig {
  double variance = 0.5;
  Scenario scenario = Scenario::kFull;
  uint64_t noise_seed = 1001;
  uint64_t mask_seed = 1002;
  int period = 8;      // s1 downsampling
  double rate = 0.125; // s2 per-component observation probability
};

struct EnksMethodConfig {
  int n_members = 50;
  double model_noise_var = 1e-3;
  std::optional<double> obs_noise_var;  // defaults to the corruption variance
  double inflation = 1.0;
  uint64_t seed = 2001;
  int n_em_iters = 20;
  int n_m_steps = 200;
  double m_lr = 0.01;
  uint64_t init_seed = 3001;
};

struct VodenMethodConfig {
  double lambda = 0.1;
  int epochs = 100;
  int n_e_steps = 100;
  int n_m_steps = 100;
  double lr = 3e-4;
  double m_lr = 0.01;
  uint64_t init_seed = 3002;
};

struct BinnMethodConfig {
  int steps = 4000;
  double lr = 0.01;
  uint64_t init_seed = 3003;
};

struct SparseMethodConfig {
  double threshold = 0.1;
  int max_sweeps = 10;
  int window = 20;  // only used by sr-hann
};

struct AnalogMethodConfig {
  int k = 5;
};

struct EvaluationConfig {
  int n_initials = 1000;
  uint64_t holdout_seed = 9001;
  long holdout_steps = 12000;
  int lyapunov_steps = 10000;
  int renorm_interval = 10;
  double d0 = 1e-8;
  long attractor_steps = 10000;
};

struct ExperimentConfig {
  SystemConfig system;
  SimulationConfig simulation;
  CorruptionConfig corruption;
  Method method = Method::kEnksEm;
  EnksMethodConfig enks;
  VodenMethodConfig voden;
  BinnMethodConfig binn;
  SparseMethodConfig sparse;
  AnalogMethodConfig analog;
  EvaluationConfig evaluation;
  std::string output_dir = "out";

  double resolved_obs_noise_var() const {
    return enks.obs_noise_var ? *enks.obs_noise_var : corruption.variance;
  }
};

/// Throws InvalidInput naming the offending field.
void validate(const ExperimentConfig& cfg);

ExperimentConfig parse_config_text(const std::string& text);
std::string config_text(const ExperimentConfig& cfg);

ExperimentConfig load_config(const std::string& path);
void save_config(const std::string& path, const ExperimentConfig& cfg);

/// FNV-1a over the canonical serialized form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace dynlearn
