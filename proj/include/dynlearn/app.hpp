#pragma once

#include <optional>
#include <string>

#include "dynlearn/config.hpp"
#include "dynlearn/io.hpp"

namespace dynlearn {

// Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 I/O.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitIo = 4;

struct CommandOptions {
  std::string config_path;
  std::string out_dir;                    // overrides config output.dir when set
  std::optional<uint64_t> seed_override;  // overrides simulation.seed
  std::string out_name;                   // simulate: file name, default truth.csv
  std::string truth_path;                 // corrupt/evaluate input override
  std::string obs_path;                   // fit input override
  std::string checkpoint_path;            // evaluate input override
  std::string table = "noisy";            // reproduce: noisy | partial
  bool full_grid = false;
  int jobs = 1;
};

int cmd_simulate(const CommandOptions& opt);
int cmd_corrupt(const CommandOptions& opt);
int cmd_fit(const CommandOptions& opt);
int cmd_evaluate(const CommandOptions& opt);
int cmd_reproduce(const CommandOptions& opt);

/// Parses argv and dispatches; maps exceptions onto the exit-code contract.
int run_cli(int argc, const char* const* argv);

// Pieces reused by reproduce and the tests.
Trajectory simulate_from_config(const ExperimentConfig& cfg, uint64_t seed);
ObservationSeries corrupt_from_config(const ExperimentConfig& cfg, const Trajectory& truth);
void fit_from_config(const ExperimentConfig& cfg, const ObservationSeries& obs,
                     const std::string& out_dir, const std::string& hash);
MetricsReport evaluate_checkpoint(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                                  const Trajectory& holdout_full, const std::string& out_dir,
                                  const std::string& hash);

}  // namespace dynlearn
