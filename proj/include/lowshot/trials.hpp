#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lowshot/acis.hpp"
#include "lowshot/baselines.hpp"
#include "lowshot/pool.hpp"
#include "lowshot/synth.hpp"

namespace lowshot {

struct TrialReport {
  std::string method;
  std::size_t budget = 0;
  std::size_t trials = 0;  // successful trials
  double mse = 0.0;
  double bias = 0.0;
  double empirical_var = 0.0;
  std::optional<double> mean_predicted_var;  // ACIS and SAWADE only
  double runtime_ms = 0.0;
};

// One estimate from one method on one pool.
struct TrialOutcome {
  std::optional<double> g_hat;
  std::optional<double> predicted_var;
};

struct TrialSamples {
  Method method = Method::Rand;
  std::size_t budget = 0;
  std::vector<double> estimates;
  std::vector<double> predicted_vars;
  std::size_t failed = 0;
  double runtime_ms = 0.0;
};

struct BenchOptions {
  Alpha alpha = Alpha::f1();
  std::uint64_t master_seed = 0;
  AcisConfig acis;  // template; budget, alpha and seed are set per trial
};

// Runs a single trial. ACIS and ACIS_LAST differ only in how the iteration
// estimates are read out.
TrialOutcome run_method(Method method, const ScoredPool& pool, std::span<const Label> oracle, std::size_t budget,
                        const BenchOptions& options, std::uint64_t seed);

// Seed of trial t at a given budget, derived from the master seed.
std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t budget, std::size_t trial);

// Raw per-trial estimates for every (method, budget). Trials that yield no
// estimate are counted in `failed` and excluded.
std::vector<TrialSamples> collect_trials(const ScoredPool& pool, std::span<const Method> methods,
                                         std::span<const std::size_t> budgets, std::size_t trials,
                                         const BenchOptions& options);

// Population-form MSE, bias and variance against the exact value.
TrialReport summarize(const TrialSamples& samples, double exact);

// Throws MissingLabel unless the pool carries oracle labels.
std::vector<TrialReport> run_trials(const ScoredPool& pool, std::span<const Method> methods,
                                    std::span<const std::size_t> budgets, std::size_t trials,
                                    const BenchOptions& options);
std::vector<TrialReport> run_trials(const SynthConfig& cfg, std::span<const Method> methods,
                                    std::span<const std::size_t> budgets, std::size_t trials,
                                    const BenchOptions& options);

struct FiniteVarianceRow {
  std::size_t subset_size = 0;
  std::size_t trials = 0;  // subsets with a defined metric
  double mean = 0.0;
  double variance = 0.0;   // unbiased (n - 1) form
  std::size_t degenerate = 0;
};

// Spread of the exact metric over uniformly drawn subsets of the pool.
std::vector<FiniteVarianceRow> finite_dataset_variance(const ScoredPool& pool, std::span<const std::size_t> subset_sizes,
                                                       std::size_t trials, Alpha alpha, std::uint64_t seed);

}  // namespace lowshot
