#include "dynlearn/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "dynlearn/errors.hpp"

namespace dynlearn {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> dictionary_row(const double* x) {
  return {1.0, x[0], x[1], x[2], x[0] * x[1], x[0] * x[2], x[1] * x[2],
          x[0] * x[0], x[1] * x[1], x[2] * x[2]};
}

// Gaussian elimination with partial pivoting; small symmetric systems only.
bool solve_dense(std::vector<double> a, int n, std::vector<double>& b) {
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(a[static_cast<size_t>(r) * n + col]) >
          std::fabs(a[static_cast<size_t>(piv) * n + col]))
        piv = r;
    if (std::fabs(a[static_cast<size_t>(piv) * n + col]) < 1e-300) return false;
    if (piv != col) {
      for (int j = 0; j < n; ++j)
        std::swap(a[static_cast<size_t>(col) * n + j], a[static_cast<size_t>(piv) * n + j]);
      std::swap(b[col], b[piv]);
    }
    const double diag = a[static_cast<size_t>(col) * n + col];
    for (int r = col + 1; r < n; ++r) {
      const double f = a[static_cast<size_t>(r) * n + col] / diag;
      if (f == 0.0) continue;
      for (int j = col; j < n; ++j)
        a[static_cast<size_t>(r) * n + j] -= f * a[static_cast<size_t>(col) * n + j];
      b[r] -= f * b[col];
    }
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a[static_cast<size_t>(i) * n + j] * b[j];
    b[i] = s / a[static_cast<size_t>(i) * n + i];
  }
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(b[i])) return false;
  return true;
}

// Least squares of target against the active dictionary columns via normal
// equations; falls back to a scaled ridge when the Gram matrix is singular.
std::vector<double> ls_on_support(const std::vector<std::vector<double>>& dict,
                                  const std::vector<double>& target,
                                  const std::vector<int>& support, int* regularized) {
  const int k = static_cast<int>(support.size());
  std::vector<double> gram(static_cast<size_t>(k) * k, 0.0), rhs(k, 0.0);
  for (size_t t = 0; t < dict.size(); ++t) {
    for (int a = 0; a < k; ++a) {
      const double da = dict[t][support[a]];
      rhs[a] += da * target[t];
      for (int b = 0; b <= a; ++b) gram[static_cast<size_t>(a) * k + b] += da * dict[t][support[b]];
    }
  }
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < a; ++b) gram[static_cast<size_t>(b) * k + a] = gram[static_cast<size_t>(a) * k + b];

  std::vector<double> coef = rhs;
  if (!solve_dense(gram, k, coef)) {
    double trace = 0.0;
    for (int a = 0; a < k; ++a) trace += gram[static_cast<size_t>(a) * k + a];
    const double ridge = std::max(1e-12 * trace, 1e-12);
    for (int a = 0; a < k; ++a) gram[static_cast<size_t>(a) * k + a] += ridge;
    coef = rhs;
    if (!solve_dense(gram, k, coef))
      throw NumericError("sparse_fit: normal equations unsolvable even with ridge");
    if (regularized) ++(*regularized);
    std::fprintf(stderr, "warning: sparse_fit: rank-deficient dictionary, ridge applied\n");
  }
  return coef;
}

}  // namespace

Tensor hanning_smooth(const Tensor& series, int window) {
  if (window < 2) throw InvalidInput("hanning_smooth: window must be >= 2");
  const int T = series.rows(), d = series.cols();
  if (T < 1) throw InvalidInput("hanning_smooth: empty series");

  std::vector<double> w(window);
  for (int k = 0; k < window; ++k) w[k] = 0.5 * (1.0 - std::cos(2.0 * kPi * k / (window - 1)));

  const int center = (window - 1) / 2;
  Tensor out(T, d);
  for (int i = 0; i < T; ++i) {
    double wsum = 0.0;
    for (int k = 0; k < window; ++k) {
      const int s = i + k - center;
      if (s >= 0 && s < T) wsum += w[k];
    }
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int k = 0; k < window; ++k) {
        const int s = i + k - center;
        if (s >= 0 && s < T) acc += w[k] * series(s, j);
      }
      out(i, j) = acc / wsum;
    }
  }
  return out;
}

SparseModel sparse_fit(const Tensor& states, double dt, double threshold, int max_sweeps,
                       int* regularized) {
  const int T = states.rows();
  if (T < 5) throw InvalidInput("sparse_fit: need at least 5 states");
  if (states.cols() != 3) throw InvalidInput("sparse_fit: states must be T x 3");
  if (dt <= 0) throw InvalidInput("sparse_fit: dt must be > 0");
  if (max_sweeps < 1) throw InvalidInput("sparse_fit: max_sweeps must be >= 1");

  std::vector<std::vector<double>> dict(T);
  for (int t = 0; t < T; ++t) dict[t] = dictionary_row(states.data() + static_cast<size_t>(t) * 3);

  Tensor deriv(T, 3);
  for (int j = 0; j < 3; ++j) {
    deriv(0, j) = (states(1, j) - states(0, j)) / dt;
    for (int t = 1; t < T - 1; ++t) deriv(t, j) = (states(t + 1, j) - states(t - 1, j)) / (2.0 * dt);
    deriv(T - 1, j) = (states(T - 1, j) - states(T - 2, j)) / dt;
  }

  SparseModel model;
  model.threshold = threshold;
  for (int j = 0; j < 3; ++j) {
    std::vector<double> target(T);
    for (int t = 0; t < T; ++t) target[t] = deriv(t, j);

    std::vector<int> support(10);
    std::iota(support.begin(), support.end(), 0);
    std::vector<double> coef = ls_on_support(dict, target, support, regularized);

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      std::vector<int> kept;
      for (size_t a = 0; a < support.size(); ++a)
        if (std::fabs(coef[a]) >= threshold) kept.push_back(support[a]);
      if (kept.size() == support.size()) break;
      support = std::move(kept);
      if (support.empty()) {
        coef.clear();
        break;
      }
      coef = ls_on_support(dict, target, support, regularized);
    }
    for (size_t a = 0; a < support.size(); ++a) model.coefficients(j, support[a]) = coef[a];
  }
  return model;
}

Vec sparse_rhs(const SparseModel& model, const Vec& x) {
  if (x.size() != 3) throw InvalidInput("sparse_rhs: state dimension must be 3");
  const std::vector<double> feats = dictionary_row(x.data());
  Vec out(3, 0.0);
  for (int j = 0; j < 3; ++j)
    for (int a = 0; a < 10; ++a) out[j] += model.coefficients(j, a) * feats[a];
  return out;
}

AnalogCatalog build_catalog(const Tensor& states) {
  const int T = states.rows();
  if (T < 2) throw InvalidInput("build_catalog: need at least 2 states");
  AnalogCatalog cat;
  cat.states = Tensor(T - 1, states.cols());
  cat.successors = Tensor(T - 1, states.cols());
  for (int t = 0; t < T - 1; ++t)
    for (int j = 0; j < states.cols(); ++j) {
      cat.states(t, j) = states(t, j);
      cat.successors(t, j) = states(t + 1, j);
    }
  return cat;
}

Vec analog_forecast(const AnalogCatalog& catalog, const Vec& x, int k) {
  const int M = catalog.states.rows();
  if (M == 0) throw InvalidInput("analog_forecast: empty catalog");
  if (k < 1 || k > M) throw InvalidInput("analog_forecast: k outside [1, M]");
  if (static_cast<int>(x.size()) != catalog.states.cols())
    throw InvalidInput("analog_forecast: dimension mismatch");

  std::vector<std::pair<double, int>> dist(M);
  for (int i = 0; i < M; ++i) {
    double s = 0.0;
    for (int j = 0; j < catalog.states.cols(); ++j) {
      const double diff = catalog.states(i, j) - x[j];
      s += diff * diff;
    }
    dist[i] = {s, i};
  }
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

  Vec out(x.size(), 0.0);
  for (int n = 0; n < k; ++n) {
    const int idx = dist[n].second;
    for (size_t j = 0; j < x.size(); ++j) out[j] += catalog.successors(idx, static_cast<int>(j));
  }
  for (double& v : out) v /= k;
  return out;
}

}  // namespace dynlearn
