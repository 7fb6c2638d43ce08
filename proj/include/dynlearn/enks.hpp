#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dynlearn/observation.hpp"
#include "dynlearn/random.hpp"
#include "dynlearn/surrogate.hpp"
#include "dynlearn/tensor.hpp"

namespace dynlearn {

struct EnksConfig {
  int n_members = 50;
  double model_noise_var = 1e-3;  // Q
  double obs_noise_var = 1.0;     // R
  double inflation = 1.0;         // multiplicative, applied to anomalies
  uint64_t seed = 0;
};

struct SmootherResult {
  Tensor means;    // T x d posterior means
  Tensor spreads;  // T x d member standard deviations
  int regularized = 0;  // analysis/smoother updates that needed a ridge
};

/// Advances every member (one row each) with the stepper, perturbs with
/// N(0, Q I), then inflates anomalies about the new mean.
Tensor enkf_forecast(const Tensor& ensemble, const StepperFn& stepper, const EnksConfig& cfg,
                     Rng& rng);

/// Perturbed-observation EnKF update restricted to the observed components.
/// Returns the ensemble unchanged when nothing is observed. A singular
/// innovation covariance gets a 1e-8 ridge; *regularized is incremented and a
/// warning goes to stderr.
Tensor enkf_analysis(const Tensor& ensemble, std::span<const double> y,
                     std::span<const uint8_t> mask, double obs_noise_var, Rng& rng,
                     int* regularized = nullptr);

/// Forward EnKF pass followed by the fixed-interval backward update that uses
/// cross-time ensemble covariances. Ensemble starts from the first observed
/// value of each component (0 if never observed) with an N(0, 4I) spread.
SmootherResult enks_smooth(const ObservationSeries& obs, const StepperFn& stepper, int dim,
                           const EnksConfig& cfg);

SmootherResult enks_smooth(const ObservationSeries& obs, const SurrogateParams& theta,
                           const FlowConfig& flow, const EnksConfig& cfg);

struct EnksEmResult {
  SurrogateParams theta;
  SmootherResult smoothing;            // under the final parameters
  std::vector<double> loss_m_history;  // one entry per EM iteration (post M-step)
};

/// Alternates smoothing under the current parameters with n_m_steps RMSprop
/// updates of the surrogate on the posterior means. The returned smoothing is
/// recomputed with the final parameters.
EnksEmResult enks_em(const ObservationSeries& obs, SurrogateParams theta0, const FlowConfig& flow,
                     const EnksConfig& cfg, int n_em_iters, int n_m_steps, double m_lr);

}  // namespace dynlearn
