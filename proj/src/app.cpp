#include "dynlearn/app.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <vector>

#include <CLI11.hpp>

#include "dynlearn/baselines.hpp"
#include "dynlearn/enks.hpp"
#include "dynlearn/errors.hpp"
#include "dynlearn/evaluation.hpp"
#include "dynlearn/random.hpp"
#include "dynlearn/voden.hpp"

namespace dynlearn {

namespace fs = std::filesystem;

namespace {

std::string out_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

ExperimentConfig load_effective_config(const CommandOptions& opt) {
  if (opt.config_path.empty()) throw InvalidInput("config: --config is required");
  ExperimentConfig cfg = load_config(opt.config_path);
  if (!opt.out_dir.empty()) cfg.output_dir = opt.out_dir;
  if (opt.seed_override) cfg.simulation.seed = *opt.seed_override;
  validate(cfg);
  return cfg;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

StepperFn sparse_stepper(const SparseModel& model, double dt) {
  return [model, dt](std::span<double> x) {
    Vec v(x.begin(), x.end());
    v = rk4_step([&model](const Vec& s) { return sparse_rhs(model, s); }, v, dt);
    for (size_t i = 0; i < x.size(); ++i) x[i] = v[i];
  };
}

StepperFn analog_stepper(const AnalogCatalog& catalog, int k) {
  return [catalog, k](std::span<double> x) {
    const Vec out = analog_forecast(catalog, Vec(x.begin(), x.end()), k);
    for (size_t i = 0; i < x.size(); ++i) x[i] = out[i];
  };
}

Trajectory subsample_trajectory(const Trajectory& traj, int period) {
  Trajectory out;
  out.t0 = traj.t0;
  out.dt = traj.dt * period;
  for (int t = 0; t < traj.length(); t += period) out.states.push_back(traj.states[t]);
  return out;
}

Trajectory free_run_capped(const StepperFn& stepper, const Vec& x0, double dt, long n_steps) {
  Trajectory traj;
  traj.t0 = 0.0;
  traj.dt = dt;
  Vec x = x0;
  traj.states.push_back(x);
  for (long s = 0; s < n_steps; ++s) {
    try {
      stepper(std::span<double>(x));
    } catch (const NumericError&) {
      break;
    }
    bool ok = true;
    for (double v : x)
      if (!std::isfinite(v) || std::fabs(v) > kDivergenceLimit) ok = false;
    if (!ok) break;
    traj.states.push_back(x);
  }
  return traj;
}

}  // namespace

Trajectory simulate_from_config(const ExperimentConfig& cfg, uint64_t seed) {
  Vec x0(cfg.simulation.x0.begin(), cfg.simulation.x0.end());
  if (cfg.simulation.jitter_x0) {
    Rng rng(seed);
    for (double& v : x0) v += rng.uniform(-0.5, 0.5);
  }
  const OdeSystem sys = make_lorenz63(cfg.system.params);
  return simulate(sys.rhs, std::move(x0), cfg.simulation.dt, cfg.simulation.n_steps,
                  cfg.simulation.spinup);
}

ObservationSeries corrupt_from_config(const ExperimentConfig& cfg, const Trajectory& truth) {
  ObservationSeries obs = apply_noise(truth, {cfg.corruption.variance, cfg.corruption.noise_seed});
  switch (cfg.corruption.scenario) {
    case Scenario::kFull:
      break;
    case Scenario::kS1:
      obs = apply_mask(std::move(obs), mask_regular(obs.length(), cfg.corruption.period));
      break;
    case Scenario::kS2:
      obs = apply_mask(std::move(obs), mask_irregular(obs.length(), obs.dimension(),
                                                      cfg.corruption.rate, cfg.corruption.mask_seed));
      break;
  }
  return obs;
}

void fit_from_config(const ExperimentConfig& cfg, const ObservationSeries& obs,
                     const std::string& out_dir, const std::string& hash) {
  const std::string ckpt = out_path(out_dir, "checkpoint.json");
  const std::string history = out_path(out_dir, "loss_history.csv");

  switch (cfg.method) {
    case Method::kEnksEm: {
      ObservationSeries fit_obs = obs;
      FlowConfig flow{cfg.simulation.dt, 1};
      if (cfg.corruption.scenario == Scenario::kS1) {
        fit_obs = subsample(obs, cfg.corruption.period);
        flow.substeps = cfg.corruption.period;
      }
      EnksConfig ecfg;
      ecfg.n_members = cfg.enks.n_members;
      ecfg.model_noise_var = cfg.enks.model_noise_var;
      ecfg.obs_noise_var = cfg.resolved_obs_noise_var();
      ecfg.inflation = cfg.enks.inflation;
      ecfg.seed = cfg.enks.seed;
      const EnksEmResult res =
          enks_em(fit_obs, init_surrogate(cfg.enks.init_seed), flow, ecfg, cfg.enks.n_em_iters,
                  cfg.enks.n_m_steps, cfg.enks.m_lr);
      save_surrogate_checkpoint(ckpt, {res.theta, flow, "enks-em", hash});
      write_em_history_csv(history, res.loss_m_history, hash);
      write_smoother_csv(out_path(out_dir, "smoother.csv"), res.smoothing, fit_obs.t0, fit_obs.dt,
                         hash);
      break;
    }
    case Method::kVoden: {
      const FlowConfig flow{cfg.simulation.dt, 1};
      VodenConfig vcfg;
      vcfg.lambda = cfg.voden.lambda;
      vcfg.epochs = cfg.voden.epochs;
      vcfg.n_e_steps = cfg.voden.n_e_steps;
      vcfg.n_m_steps = cfg.voden.n_m_steps;
      vcfg.lr = cfg.voden.lr;
      vcfg.m_lr = cfg.voden.m_lr;
      const VodenResult res = voden_train(obs, init_surrogate(cfg.voden.init_seed),
                                          init_voden_params(cfg.voden.init_seed + 1), vcfg, flow);
      save_voden_checkpoint(ckpt, {res.theta, flow, res.phi, vcfg.lambda, hash});
      write_voden_history_csv(history, res.loss_e_history, res.loss_m_history, hash);
      break;
    }
    case Method::kBinn: {
      const FlowConfig flow{cfg.simulation.dt, 1};
      const Tensor states = linear_interpolate(obs);
      ParamSet params = to_param_set(init_surrogate(cfg.binn.init_seed));
      RmspropState opt;
      opt.lr = cfg.binn.lr;
      std::vector<double> losses;
      losses.reserve(cfg.binn.steps);
      for (int k = 0; k < cfg.binn.steps; ++k) {
        Tape tape;
        const SurrogateVars vars = surrogate_vars(tape, from_param_set(params), true);
        const Tape::Var loss = loss_m_node(tape, tape.constant(states), vars, flow);
        const double value = tape.value(loss)(0, 0);
        if (!std::isfinite(value))
          throw NumericError("binn: non-finite loss at step " + std::to_string(k), k);
        losses.push_back(value);
        rmsprop_step(params, tape.backward(loss), opt);
      }
      save_surrogate_checkpoint(ckpt, {from_param_set(params), flow, "binn", hash});
      write_em_history_csv(history, losses, hash);
      break;
    }
    case Method::kSr:
    case Method::kSrHann: {
      Tensor states = linear_interpolate(obs);
      if (cfg.method == Method::kSrHann) states = hanning_smooth(states, cfg.sparse.window);
      const SparseModel model =
          sparse_fit(states, cfg.simulation.dt, cfg.sparse.threshold, cfg.sparse.max_sweeps);
      save_sparse_checkpoint(ckpt, {model, cfg.simulation.dt, hash}, to_string(cfg.method));
      break;
    }
    case Method::kAf: {
      const AnalogCatalog catalog = build_catalog(linear_interpolate(obs));
      save_analog_checkpoint(ckpt, {catalog, cfg.analog.k, cfg.simulation.dt, hash});
      break;
    }
  }
}

MetricsReport evaluate_checkpoint(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                                  const Trajectory& holdout_full, const std::string& out_dir,
                                  const std::string& hash) {
  const std::string stored_hash = checkpoint_config_hash(checkpoint_path);
  if (stored_hash != hash)
    throw InvalidInput("evaluate: checkpoint config_hash " + stored_hash +
                       " does not match config " + hash);

  const std::string method = checkpoint_method(checkpoint_path);
  StepperFn stepper;
  double delta = cfg.simulation.dt;
  Trajectory holdout = holdout_full;

  if (method == "enks-em" || method == "binn") {
    const SurrogateCheckpoint ckpt = load_surrogate_checkpoint(checkpoint_path);
    stepper = make_stepper(ckpt.params, ckpt.flow);
    delta = ckpt.flow.dt * ckpt.flow.substeps;
    if (ckpt.flow.substeps > 1) holdout = subsample_trajectory(holdout_full, ckpt.flow.substeps);
  } else if (method == "voden") {
    const VodenCheckpoint ckpt = load_voden_checkpoint(checkpoint_path);
    stepper = make_stepper(ckpt.theta, ckpt.flow);
    delta = ckpt.flow.dt * ckpt.flow.substeps;
    if (ckpt.flow.substeps > 1) holdout = subsample_trajectory(holdout_full, ckpt.flow.substeps);
  } else if (method == "sr" || method == "sr-hann") {
    const SparseCheckpoint ckpt = load_sparse_checkpoint(checkpoint_path);
    stepper = sparse_stepper(ckpt.model, ckpt.dt);
    delta = ckpt.dt;
  } else if (method == "af") {
    const AnalogCheckpoint ckpt = load_analog_checkpoint(checkpoint_path);
    stepper = analog_stepper(ckpt.catalog, ckpt.k);
    delta = ckpt.dt;
  } else {
    throw InvalidInput("evaluate: unknown checkpoint method '" + method + "'");
  }

  MetricsReport report;
  report.method = method;
  report.scenario = to_string(cfg.corruption.scenario);
  report.noise_var = cfg.corruption.variance;
  report.config_hash = hash;

  const ForecastReport fc = forecast_rmse(stepper, 3, holdout, cfg.evaluation.n_initials);
  report.rmse_h = fc.rmse_h;
  report.rmse_4h = fc.rmse_4h;
  report.delta = delta;
  report.n_initials = fc.n_initials;
  report.n_failed = fc.n_failed;

  report.lyapunov_steps = cfg.evaluation.lyapunov_steps;
  report.renorm_interval = cfg.evaluation.renorm_interval;
  const Vec x0 = holdout.states.back();
  try {
    const LyapunovReport ly =
        lyapunov_lambda1(stepper, 3, x0, cfg.evaluation.lyapunov_steps, delta,
                         cfg.evaluation.renorm_interval, cfg.evaluation.d0);
    report.lambda1 = ly.lambda1;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "warning: lyapunov run diverged (%s); recording nan\n", e.what());
    report.lambda1 = std::numeric_limits<double>::quiet_NaN();
  }

  const Trajectory orbit =
      free_run_capped(stepper, x0, delta, cfg.evaluation.attractor_steps);
  write_trajectory_csv(out_path(out_dir, "attractor.csv"), orbit, hash);
  if (orbit.length() < cfg.evaluation.attractor_steps + 1)
    std::fprintf(stderr, "warning: attractor run stopped early at %d states\n", orbit.length());

  write_metrics_json(out_path(out_dir, "metrics.json"), report);
  return report;
}

int cmd_simulate(const CommandOptions& opt) {
  const ExperimentConfig cfg = load_effective_config(opt);
  const std::string hash = config_hash(cfg);
  ensure_dir(cfg.output_dir);
  const Trajectory traj = simulate_from_config(cfg, cfg.simulation.seed);
  const std::string name = opt.out_name.empty() ? "truth.csv" : opt.out_name;
  write_trajectory_csv(out_path(cfg.output_dir, name), traj, hash);
  return kExitOk;
}

int cmd_corrupt(const CommandOptions& opt) {
  const ExperimentConfig cfg = load_effective_config(opt);
  const std::string hash = config_hash(cfg);
  ensure_dir(cfg.output_dir);
  const std::string truth_path =
      opt.truth_path.empty() ? out_path(cfg.output_dir, "truth.csv") : opt.truth_path;
  const Trajectory truth = read_trajectory_csv(truth_path);
  const ObservationSeries obs = corrupt_from_config(cfg, truth);
  write_observations_csv(out_path(cfg.output_dir, "observations.csv"), obs, hash);
  return kExitOk;
}

int cmd_fit(const CommandOptions& opt) {
  const ExperimentConfig cfg = load_effective_config(opt);
  const std::string hash = config_hash(cfg);
  ensure_dir(cfg.output_dir);
  const std::string obs_path =
      opt.obs_path.empty() ? out_path(cfg.output_dir, "observations.csv") : opt.obs_path;
  const ObservationSeries obs = read_observations_csv(obs_path);
  fit_from_config(cfg, obs, cfg.output_dir, hash);
  return kExitOk;
}

int cmd_evaluate(const CommandOptions& opt) {
  const ExperimentConfig cfg = load_effective_config(opt);
  const std::string hash = config_hash(cfg);
  ensure_dir(cfg.output_dir);
  const std::string ckpt_path =
      opt.checkpoint_path.empty() ? out_path(cfg.output_dir, "checkpoint.json") : opt.checkpoint_path;
  const std::string truth_path =
      opt.truth_path.empty() ? out_path(cfg.output_dir, "holdout.csv") : opt.truth_path;

  Trajectory holdout;
  if (fs::exists(truth_path)) {
    holdout = read_trajectory_csv(truth_path);
  } else {
    // No held-out truth on disk yet: generate it from the holdout seed.
    ExperimentConfig hcfg = cfg;
    hcfg.simulation.n_steps = cfg.evaluation.holdout_steps;
    holdout = simulate_from_config(hcfg, cfg.evaluation.holdout_seed);
    write_trajectory_csv(truth_path, holdout, hash);
  }
  evaluate_checkpoint(cfg, ckpt_path, holdout, cfg.output_dir, hash);
  return kExitOk;
}

int cmd_reproduce(const CommandOptions& opt) {
  const ExperimentConfig base = load_effective_config(opt);
  ensure_dir(base.output_dir);

  std::vector<double> variances =
      opt.full_grid ? std::vector<double>{0.5, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0}
                    : std::vector<double>{0.5, 4.0, 16.0};
  std::vector<std::pair<Method, Scenario>> cells;
  if (opt.table == "noisy") {
    for (Method m : {Method::kAf, Method::kSr, Method::kSrHann, Method::kBinn, Method::kEnksEm,
                     Method::kVoden})
      cells.emplace_back(m, Scenario::kFull);
  } else if (opt.table == "partial") {
    if (opt.full_grid) variances = {0.5, 2.0, 4.0, 8.0, 16.0, 32.0};
    for (Scenario s : {Scenario::kS1, Scenario::kS2})
      for (Method m : {Method::kEnksEm, Method::kVoden}) cells.emplace_back(m, s);
  } else {
    throw InvalidInput("reproduce: table must be 'noisy' or 'partial'");
  }

  struct Row {
    std::string method, scenario, status, hash;
    double variance = 0.0;
    MetricsReport metrics;
    bool ok = false;
  };
  std::vector<Row> rows(cells.size() * variances.size());

  auto run_cell = [&](size_t idx) {
    const auto [method, scenario] = cells[idx / variances.size()];
    const double variance = variances[idx % variances.size()];
    Row& row = rows[idx];
    row.method = to_string(method);
    row.scenario = to_string(scenario);
    row.variance = variance;

    ExperimentConfig cell = base;
    cell.method = method;
    cell.corruption.scenario = scenario;
    cell.corruption.variance = variance;
    cell.output_dir = out_path(base.output_dir, "cells/" + row.method + "_" + row.scenario +
                                                    "_v" + fmt_g17(variance));
    const std::string hash = config_hash(cell);
    row.hash = hash;
    try {
      ensure_dir(cell.output_dir);
      const Trajectory truth = simulate_from_config(cell, cell.simulation.seed);
      write_trajectory_csv(out_path(cell.output_dir, "truth.csv"), truth, hash);
      const ObservationSeries obs = corrupt_from_config(cell, truth);
      write_observations_csv(out_path(cell.output_dir, "observations.csv"), obs, hash);
      fit_from_config(cell, obs, cell.output_dir, hash);

      ExperimentConfig hcfg = cell;
      hcfg.simulation.n_steps = cell.evaluation.holdout_steps;
      const Trajectory holdout = simulate_from_config(hcfg, cell.evaluation.holdout_seed);
      write_trajectory_csv(out_path(cell.output_dir, "holdout.csv"), holdout, hash);
      row.metrics = evaluate_checkpoint(cell, out_path(cell.output_dir, "checkpoint.json"),
                                        holdout, cell.output_dir, hash);
      row.status = "ok";
      row.ok = true;
    } catch (const std::exception& e) {
      row.status = std::string("failed: ") + e.what();
    }
  };

  const int jobs = std::max(1, opt.jobs);
  for (size_t start = 0; start < rows.size(); start += jobs) {
    std::vector<std::future<void>> batch;
    for (size_t i = start; i < std::min(rows.size(), start + jobs); ++i)
      batch.push_back(std::async(std::launch::async, run_cell, i));
    for (auto& f : batch) f.get();
  }

  std::ofstream out(out_path(base.output_dir, "reproduce.csv"));
  if (!out) throw IoError("cannot write reproduce.csv");
  auto g6 = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };
  out << "method,scenario,noise_var,rmse_h,rmse_4h,lambda1,n_failed,status,config_hash\n";
  for (const Row& row : rows) {
    out << row.method << "," << row.scenario << "," << g6(row.variance) << ",";
    if (row.ok)
      out << g6(row.metrics.rmse_h) << "," << g6(row.metrics.rmse_4h) << ","
          << g6(row.metrics.lambda1) << "," << row.metrics.n_failed;
    else
      out << ",,,";
    out << ",\"" << row.status << "\"," << row.hash << "\n";
  }
  return kExitOk;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Learning chaotic dynamics from noisy, partially observed trajectories"};
  app.require_subcommand(1);

  CommandOptions opt;
  uint64_t seed_value = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", opt.out_dir, "output directory (overrides config)");
    sub->add_option("--seed", seed_value, "override simulation.seed")
        ->each([&](const std::string&) { opt.seed_override = seed_value; });
  };

  CLI::App* sim = app.add_subcommand("simulate", "generate a ground-truth trajectory");
  add_common(sim);
  sim->add_option("--out-name", opt.out_name, "output file name (default truth.csv)");

  CLI::App* corrupt = app.add_subcommand("corrupt", "noise + mask a truth trajectory");
  add_common(corrupt);
  corrupt->add_option("--truth", opt.truth_path, "truth CSV (default <out>/truth.csv)");

  CLI::App* fit = app.add_subcommand("fit", "fit a model to observations");
  add_common(fit);
  fit->add_option("--obs", opt.obs_path, "observations CSV (default <out>/observations.csv)");

  CLI::App* evaluate = app.add_subcommand("evaluate", "forecast + topology metrics for a checkpoint");
  add_common(evaluate);
  evaluate->add_option("--checkpoint", opt.checkpoint_path,
                       "checkpoint JSON (default <out>/checkpoint.json)");
  evaluate->add_option("--truth", opt.truth_path, "held-out truth CSV (default <out>/holdout.csv)");

  CLI::App* reproduce = app.add_subcommand("reproduce", "run a method x noise grid");
  add_common(reproduce);
  reproduce->add_option("--table", opt.table, "noisy | partial");
  reproduce->add_flag("--full", opt.full_grid, "full noise grid instead of the desk-scale one");
  reproduce->add_option("--jobs", opt.jobs, "concurrent cells");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sim->parsed()) return cmd_simulate(opt);
    if (corrupt->parsed()) return cmd_corrupt(opt);
    if (fit->parsed()) return cmd_fit(opt);
    if (evaluate->parsed()) return cmd_evaluate(opt);
    if (reproduce->parsed()) return cmd_reproduce(opt);
  } catch (const InvalidInput& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  }
  return kExitConfig;
}

}  // namespace dynlearn
