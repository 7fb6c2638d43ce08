#include "dynlearn/enks.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "dynlearn/errors.hpp"

namespace dynlearn {

namespace {

// In-place lower Cholesky of a dense n x n matrix; false on failure.
bool cholesky(std::vector<double>& a, int n) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[static_cast<size_t>(i) * n + j];
      for (int k = 0; k < j; ++k)
        s -= a[static_cast<size_t>(i) * n + k] * a[static_cast<size_t>(j) * n + k];
      if (i == j) {
        if (s <= 0.0 || !std::isfinite(s)) return false;
        a[static_cast<size_t>(i) * n + i] = std::sqrt(s);
      } else {
        a[static_cast<size_t>(i) * n + j] = s / a[static_cast<size_t>(j) * n + j];
      }
    }
  }
  return true;
}

// Solves L L^T x = b for one right-hand side, b overwritten.
void chol_solve(const std::vector<double>& l, int n, double* b) {
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= l[static_cast<size_t>(i) * n + k] * b[k];
    b[i] = s / l[static_cast<size_t>(i) * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int k = i + 1; k < n; ++k) s -= l[static_cast<size_t>(k) * n + i] * b[k];
    b[i] = s / l[static_cast<size_t>(i) * n + i];
  }
}

// SPD solve with a ridge retry; increments *regularized when the ridge kicks in.
std::vector<double> spd_factor(std::vector<double> a, int n, int* regularized, const char* where) {
  std::vector<double> l = a;
  if (cholesky(l, n)) return l;
  for (int i = 0; i < n; ++i) a[static_cast<size_t>(i) * n + i] += 1e-8;
  l = a;
  if (!cholesky(l, n))
    throw NumericError(std::string(where) + ": covariance not positive definite after ridge");
  if (regularized) ++(*regularized);
  std::fprintf(stderr, "warning: %s: singular covariance, 1e-8 ridge applied\n", where);
  return l;
}

std::vector<double> column_means(const Tensor& ens) {
  const int N = ens.rows(), d = ens.cols();
  std::vector<double> mean(d, 0.0);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < d; ++j) mean[j] += ens(i, j);
  for (int j = 0; j < d; ++j) mean[j] /= N;
  return mean;
}

}  // namespace

Tensor enkf_forecast(const Tensor& ensemble, const StepperFn& stepper, const EnksConfig& cfg,
                     Rng& rng) {
  if (ensemble.rows() < 2) throw InvalidInput("enkf_forecast: need at least 2 members");
  if (cfg.model_noise_var < 0) throw InvalidInput("enkf_forecast: Q < 0");
  if (cfg.inflation < 1.0) throw InvalidInput("enkf_forecast: inflation < 1");

  const int N = ensemble.rows(), d = ensemble.cols();
  Tensor out = ensemble;
  const double q_sd = std::sqrt(cfg.model_noise_var);
  for (int i = 0; i < N; ++i) {
    stepper(out.row_span(i));
    for (int j = 0; j < d; ++j) {
      if (q_sd > 0) out(i, j) += rng.normal(0.0, q_sd);
      if (!std::isfinite(out(i, j)) || std::fabs(out(i, j)) > kDivergenceLimit)
        throw NumericError("enkf_forecast: member " + std::to_string(i) + " diverged", i);
    }
  }
  if (cfg.inflation != 1.0) {
    const std::vector<double> mean = column_means(out);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < d; ++j) out(i, j) = mean[j] + cfg.inflation * (out(i, j) - mean[j]);
  }
  return out;
}

Tensor enkf_analysis(const Tensor& ensemble, std::span<const double> y,
                     std::span<const uint8_t> mask, double obs_noise_var, Rng& rng,
                     int* regularized) {
  const int N = ensemble.rows(), d = ensemble.cols();
  if (obs_noise_var <= 0) throw InvalidInput("enkf_analysis: R must be > 0");

  std::vector<int> obs_idx;
  for (int j = 0; j < d; ++j)
    if (mask[j]) obs_idx.push_back(j);
  const int m = static_cast<int>(obs_idx.size());
  if (m == 0) return ensemble;

  const std::vector<double> mean = column_means(ensemble);

  // Innovation covariance C = H P H^T + R I and cross covariance P H^T from
  // the sample anomalies; H is row selection by the mask.
  std::vector<double> c(static_cast<size_t>(m) * m, 0.0);
  std::vector<double> pxy(static_cast<size_t>(d) * m, 0.0);
  for (int i = 0; i < N; ++i) {
    for (int a = 0; a < m; ++a) {
      const double ya = ensemble(i, obs_idx[a]) - mean[obs_idx[a]];
      for (int b = 0; b <= a; ++b)
        c[static_cast<size_t>(a) * m + b] += ya * (ensemble(i, obs_idx[b]) - mean[obs_idx[b]]);
      for (int j = 0; j < d; ++j)
        pxy[static_cast<size_t>(j) * m + a] += (ensemble(i, j) - mean[j]) * ya;
    }
  }
  for (int a = 0; a < m; ++a)
    for (int b = 0; b <= a; ++b) {
      c[static_cast<size_t>(a) * m + b] /= (N - 1);
      c[static_cast<size_t>(b) * m + a] = c[static_cast<size_t>(a) * m + b];
    }
  for (size_t i = 0; i < pxy.size(); ++i) pxy[i] /= (N - 1);
  for (int a = 0; a < m; ++a) c[static_cast<size_t>(a) * m + a] += obs_noise_var;

  const std::vector<double> l = spd_factor(c, m, regularized, "enkf_analysis");

  // K^T columns: solve C k_j = (P H^T)_j for each state component j.
  std::vector<double> gain(static_cast<size_t>(d) * m);  // gain[j*m + a] = K(j, a)
  std::vector<double> rhs(m);
  for (int j = 0; j < d; ++j) {
    for (int a = 0; a < m; ++a) rhs[a] = pxy[static_cast<size_t>(j) * m + a];
    chol_solve(l, m, rhs.data());
    for (int a = 0; a < m; ++a) gain[static_cast<size_t>(j) * m + a] = rhs[a];
  }

  Tensor out = ensemble;
  const double r_sd = std::sqrt(obs_noise_var);
  std::vector<double> innov(m);
  for (int i = 0; i < N; ++i) {
    for (int a = 0; a < m; ++a)
      innov[a] = y[obs_idx[a]] + rng.normal(0.0, r_sd) - ensemble(i, obs_idx[a]);
    for (int j = 0; j < d; ++j) {
      double upd = 0.0;
      for (int a = 0; a < m; ++a) upd += gain[static_cast<size_t>(j) * m + a] * innov[a];
      out(i, j) += upd;
    }
  }
  return out;
}

SmootherResult enks_smooth(const ObservationSeries& obs, const StepperFn& stepper, int dim,
                           const EnksConfig& cfg) {
  const int T = obs.length();
  const int d = dim;
  const int N = cfg.n_members;
  if (T < 1) throw InvalidInput("enks_smooth: empty series");
  if (N < 2) throw InvalidInput("enks_smooth: need at least 2 members");
  if (obs.dimension() != d) throw InvalidInput("enks_smooth: dimension mismatch");

  Rng rng(cfg.seed);
  SmootherResult res;

  // First observed value per component anchors the initial ensemble.
  std::vector<double> init(d, 0.0);
  for (int j = 0; j < d; ++j)
    for (int t = 0; t < T; ++t)
      if (obs.mask.at(t, j)) {
        init[j] = obs.values(t, j);
        break;
      }

  Tensor ens(N, d);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < d; ++j) ens(i, j) = init[j] + rng.normal(0.0, 2.0);

  std::vector<Tensor> forecast(T), analysis(T);
  for (int t = 0; t < T; ++t) {
    if (t > 0) ens = enkf_forecast(ens, stepper, cfg, rng);
    forecast[t] = ens;
    const size_t row = static_cast<size_t>(t) * d;
    ens = enkf_analysis(ens, obs.values.row_span(t),
                        std::span<const uint8_t>(obs.mask.flags.data() + row, d),
                        cfg.obs_noise_var, rng, &res.regularized);
    analysis[t] = ens;
  }

  // Backward pass: member-wise update with the cross-time gain
  // G_t = Cov(analysis_t, forecast_{t+1}) Cov(forecast_{t+1})^{-1}.
  Tensor smoothed = analysis[T - 1];
  Tensor means(T, d), spreads(T, d);
  auto record = [&](int t, const Tensor& e) {
    for (int j = 0; j < d; ++j) {
      double m = 0.0;
      for (int i = 0; i < N; ++i) m += e(i, j);
      m /= N;
      double var = 0.0;
      for (int i = 0; i < N; ++i) var += (e(i, j) - m) * (e(i, j) - m);
      means(t, j) = m;
      spreads(t, j) = std::sqrt(var / (N - 1));
    }
  };
  record(T - 1, smoothed);

  std::vector<double> pf(static_cast<size_t>(d) * d), cross(static_cast<size_t>(d) * d);
  for (int t = T - 2; t >= 0; --t) {
    const Tensor& xa = analysis[t];
    const Tensor& xf = forecast[t + 1];
    const std::vector<double> ma = column_means(xa);
    const std::vector<double> mf = column_means(xf);
    std::fill(pf.begin(), pf.end(), 0.0);
    std::fill(cross.begin(), cross.end(), 0.0);
    for (int i = 0; i < N; ++i)
      for (int a = 0; a < d; ++a) {
        const double fa = xf(i, a) - mf[a];
        for (int b = 0; b < d; ++b) {
          pf[static_cast<size_t>(a) * d + b] += fa * (xf(i, b) - mf[b]);
          cross[static_cast<size_t>(a) * d + b] += (xa(i, b) - ma[b]) * fa;
        }
      }
    for (size_t i = 0; i < pf.size(); ++i) {
      pf[i] /= (N - 1);
      cross[i] /= (N - 1);
    }

    // cross[a*d+b] = Cov(forecast_a, analysis_b); solving Pf z = cross(:, b)
    // gives column b of G^T.
    const std::vector<double> l = spd_factor(pf, d, &res.regularized, "enks_smooth");
    std::vector<double> gt(static_cast<size_t>(d) * d);  // gt[a*d+b] = G(b, a)
    std::vector<double> rhs(d);
    for (int b = 0; b < d; ++b) {
      for (int a = 0; a < d; ++a) rhs[a] = cross[static_cast<size_t>(a) * d + b];
      chol_solve(l, d, rhs.data());
      for (int a = 0; a < d; ++a) gt[static_cast<size_t>(a) * d + b] = rhs[a];
    }

    Tensor next = xa;
    for (int i = 0; i < N; ++i)
      for (int b = 0; b < d; ++b) {
        double upd = 0.0;
        for (int a = 0; a < d; ++a)
          upd += (smoothed(i, a) - xf(i, a)) * gt[static_cast<size_t>(a) * d + b];
        next(i, b) += upd;
      }
    smoothed = std::move(next);
    record(t, smoothed);
  }

  res.means = std::move(means);
  res.spreads = std::move(spreads);
  return res;
}

SmootherResult enks_smooth(const ObservationSeries& obs, const SurrogateParams& theta,
                           const FlowConfig& flow, const EnksConfig& cfg) {
  return enks_smooth(obs, make_stepper(theta, flow), 3, cfg);
}

EnksEmResult enks_em(const ObservationSeries& obs, SurrogateParams theta0, const FlowConfig& flow,
                     const EnksConfig& cfg, int n_em_iters, int n_m_steps, double m_lr) {
  if (n_em_iters < 1) throw InvalidInput("enks_em: n_em_iters must be >= 1");
  if (n_m_steps < 1) throw InvalidInput("enks_em: n_m_steps must be >= 1");

  EnksEmResult res;
  res.theta = std::move(theta0);

  for (int iter = 0; iter < n_em_iters; ++iter) {
    EnksConfig iter_cfg = cfg;
    iter_cfg.seed = cfg.seed + 1000003ull * static_cast<uint64_t>(iter);
    const SmootherResult smooth = enks_smooth(obs, res.theta, flow, iter_cfg);

    ParamSet params = to_param_set(res.theta);
    RmspropState opt;
    opt.lr = m_lr;
    for (int k = 0; k < n_m_steps; ++k) {
      Tape tape;
      const SurrogateVars vars = surrogate_vars(tape, from_param_set(params), true);
      const Tape::Var states = tape.constant(smooth.means);
      const Tape::Var loss = loss_m_node(tape, states, vars, flow);
      if (!std::isfinite(tape.value(loss)(0, 0)))
        throw NumericError("enks_em: non-finite loss at iteration " + std::to_string(iter), iter);
      rmsprop_step(params, tape.backward(loss), opt);
    }
    res.theta = from_param_set(params);
    res.loss_m_history.push_back(loss_m_value(res.theta, flow, smooth.means));
  }

  EnksConfig final_cfg = cfg;
  final_cfg.seed = cfg.seed + 1000003ull * static_cast<uint64_t>(n_em_iters);
  res.smoothing = enks_smooth(obs, res.theta, flow, final_cfg);
  return res;
}

}  // namespace dynlearn
