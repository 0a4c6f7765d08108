#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lowshot/sampling.hpp"

namespace lowshot {

// Sum(w l) / Sum(w). Throws ZeroWeightMass when no draw carries weight.
double is_fscore(std::span<const LabeledDraw> draws);

struct VarianceEstimate {
  double asymptotic_var = 0.0;  // S^2, variance of sqrt(n)(G_hat - G)
  double estimate_var = 0.0;    // S^2 / n, variance of G_hat itself
};

// Delta-method variance of the self-normalized estimator with the
// weight-dependent Bessel-style factor C = 1 - Sum(w^2)/Sum(w)^2. n counts
// every draw, zero-weight ones included.
// Throws InsufficientDraws (n < 2), ZeroWeightMass, DegenerateWeights (C <= 0).
VarianceEstimate variance_estimate(std::span<const LabeledDraw> draws, double g_hat);

struct IterationRecord {
  std::size_t iteration = 0;   // 1-based
  std::size_t batch_size = 0;  // fresh labels acquired this iteration
  std::vector<LabeledDraw> draws;
  double g_hat = 0.0;
  std::optional<double> asymptotic_var;
  std::optional<double> estimate_var;  // empty when the variance is unavailable
  double weight_mass = 0.0;
  std::vector<std::string> warnings;
};

struct CombinedEstimate {
  double g = 0.0;
  std::optional<double> var;
};

// Weight-mass-weighted mean of the last min(window, k) estimates, with
// variance Sum (m_i / Sum m)^2 var_i under zero covariance.
CombinedEstimate combine_estimates(std::span<const IterationRecord> records, std::size_t window);

// Covariance-one bound (Sum (m_i / Sum m) sd_i)^2 over the same window.
std::optional<double> worst_case_combined_variance(std::span<const IterationRecord> records,
                                                   std::size_t window);

}  // namespace lowshot
