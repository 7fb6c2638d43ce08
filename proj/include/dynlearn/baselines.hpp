#pragma once

#include <array>
#include <string>

#include "dynlearn/dynamics.hpp"
#include "dynlearn/tensor.hpp"

namespace dynlearn {

/// Per-component convolution with a unit-sum Hanning window; truncated
/// windows at the edges are renormalized.
Tensor hanning_smooth(const Tensor& series, int window);

// Thresholded least squares over the degree-2 polynomial dictionary
// [1, x1, x2, x3, x1x2, x1x3, x2x3, x1^2, x2^2, x3^2].
inline constexpr std::array<const char*, 10> kSparseDictionary = {
    "1", "x1", "x2", "x3", "x1x2", "x1x3", "x2x3", "x1^2", "x2^2", "x3^2"};

struct SparseModel {
  Tensor coefficients{3, 10};
  double threshold = 0.1;
};

/// Estimates derivatives by centered differences (one-sided at the edges),
/// solves least squares on the dictionary, then repeatedly zeroes
/// coefficients below the threshold and refits the survivors. Rank-deficient
/// normal equations get a ridge and a stderr warning; *regularized reports it.
SparseModel sparse_fit(const Tensor& states, double dt, double threshold, int max_sweeps,
                       int* regularized = nullptr);

Vec sparse_rhs(const SparseModel& model, const Vec& x);

struct AnalogCatalog {
  Tensor states;      // M x 3
  Tensor successors;  // M x 3, state one step later
};

/// Consecutive pairs of a trajectory matrix (rows t -> t+1).
AnalogCatalog build_catalog(const Tensor& states);

/// Mean successor of the k nearest catalog states under Euclidean distance;
/// ties broken toward the lower catalog index.
Vec analog_forecast(const AnalogCatalog& catalog, const Vec& x, int k);

}  // namespace dynlearn
