#pragma once

#include <string>
#include <vector>

#include "dynlearn/baselines.hpp"
#include "dynlearn/dynamics.hpp"
#include "dynlearn/enks.hpp"
#include "dynlearn/observation.hpp"
#include "dynlearn/surrogate.hpp"

namespace dynlearn {

// CSV files carry full double precision (17 significant digits). When a
// config hash is supplied it is embedded as a leading `# config_hash=` line.

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::string& config_hash = "");
Trajectory read_trajectory_csv(const std::string& path);

void write_observations_csv(const std::string& path, const ObservationSeries& obs,
                            const std::string& config_hash = "");
ObservationSeries read_observations_csv(const std::string& path);

void write_smoother_csv(const std::string& path, const SmootherResult& result, double t0,
                        double dt, const std::string& config_hash = "");

void write_em_history_csv(const std::string& path, const std::vector<double>& loss_m,
                          const std::string& config_hash = "");
void write_voden_history_csv(const std::string& path, const std::vector<double>& loss_e,
                             const std::vector<double>& loss_m,
                             const std::string& config_hash = "");

// Checkpoints are JSON; every kind carries "method" and "config_hash".

struct SurrogateCheckpoint {
  SurrogateParams params;
  FlowConfig flow;
  std::string method = "binn";
  std::string config_hash;
};
void save_surrogate_checkpoint(const std::string& path, const SurrogateCheckpoint& ckpt);
SurrogateCheckpoint load_surrogate_checkpoint(const std::string& path);

struct VodenCheckpoint {
  SurrogateParams theta;
  FlowConfig flow;
  ParamSet phi;
  double lambda = 0.1;
  std::string config_hash;
};
void save_voden_checkpoint(const std::string& path, const VodenCheckpoint& ckpt);
VodenCheckpoint load_voden_checkpoint(const std::string& path);

struct SparseCheckpoint {
  SparseModel model;
  double dt = 0.01;
  std::string config_hash;
};
void save_sparse_checkpoint(const std::string& path, const SparseCheckpoint& ckpt,
                            const std::string& method = "sr");
SparseCheckpoint load_sparse_checkpoint(const std::string& path);

struct AnalogCheckpoint {
  AnalogCatalog catalog;
  int k = 5;
  double dt = 0.01;
  std::string config_hash;
};
void save_analog_checkpoint(const std::string& path, const AnalogCheckpoint& ckpt);
AnalogCheckpoint load_analog_checkpoint(const std::string& path);

/// Reads just the "method" field of a checkpoint file.
std::string checkpoint_method(const std::string& path);
/// Reads just the "config_hash" field of a checkpoint file.
std::string checkpoint_config_hash(const std::string& path);

struct MetricsReport {
  std::string method;
  std::string scenario;
  double noise_var = 0.0;
  double rmse_h = 0.0;
  double rmse_4h = 0.0;
  double delta = 0.0;
  int n_initials = 0;
  int n_failed = 0;
  double lambda1 = 0.0;  // NaN serializes as null
  int lyapunov_steps = 0;
  int renorm_interval = 0;
  std::string config_hash;
};
void write_metrics_json(const std::string& path, const MetricsReport& report);
MetricsReport read_metrics_json(const std::string& path);

/// 17-significant-digit formatting used by every CSV writer.
std::string fmt_g17(double v);

}  // namespace dynlearn
