#include "lowshot/trials.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>
#include <map>

#include "lowshot/errors.hpp"
#include "lowshot/fscore.hpp"

namespace lowshot {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

AcisConfig acis_config_for(const BenchOptions& options, std::size_t budget, std::uint64_t seed) {
  AcisConfig cfg = options.acis;
  cfg.alpha = options.alpha;
  cfg.budget = budget;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t budget, std::size_t trial) {
  return mix_seed(mix_seed(master_seed, budget), trial);
}

TrialOutcome run_method(Method method, const ScoredPool& pool, std::span<const Label> oracle, std::size_t budget,
                        const BenchOptions& options, std::uint64_t seed) {
  Rng rng(seed);
  const Alpha alpha = options.alpha;
  const double eps = options.acis.eps;
  TrialOutcome out;
  auto take = [&out](const BaselineResult& r) {
    out.g_hat = r.g_hat;
    out.predicted_var = r.estimate_var;
  };
  switch (method) {
    case Method::Acis:
    case Method::AcisLast: {
      const auto result =
          acis_run(pool, [&](std::size_t j) { return oracle[j]; }, acis_config_for(options, budget, seed));
      if (method == Method::Acis) {
        out.g_hat = result.g_final;
        out.predicted_var = result.var_final;
      } else {
        out.g_hat = result.g_last;
        out.predicted_var = result.records.back().estimate_var;
      }
      break;
    }
    case Method::TopK: take(topk_estimate(pool, oracle, budget, alpha)); break;
    case Method::Gmm: take(gmm_estimate(pool, oracle, budget, alpha)); break;
    case Method::Herding: take(herding_estimate(pool, oracle, budget, alpha)); break;
    case Method::Sawade: take(sawade_estimate(pool, oracle, budget, alpha, rng, eps)); break;
    case Method::Rand: take(rand_estimate(pool, oracle, budget, alpha, rng)); break;
    case Method::Iso: take(calibrate_infer_estimate(pool, oracle, budget, alpha, CalibratorKind::Isotonic, rng, eps)); break;
    case Method::Platt: take(calibrate_infer_estimate(pool, oracle, budget, alpha, CalibratorKind::Platt, rng, eps)); break;
  }
  return out;
}

std::vector<TrialSamples> collect_trials(const ScoredPool& pool, std::span<const Method> methods,
                                         std::span<const std::size_t> budgets, std::size_t trials,
                                         const BenchOptions& options) {
  if (trials == 0) throw Error(ErrorCode::InvalidArgument, "trials must be at least 1");
  const auto oracle = pool.oracle_labels();
  const bool both_acis = std::find(methods.begin(), methods.end(), Method::Acis) != methods.end() &&
                         std::find(methods.begin(), methods.end(), Method::AcisLast) != methods.end();

  std::vector<TrialSamples> out;
  for (const std::size_t budget : budgets) {
    std::map<Method, TrialSamples> by_method;
    for (const Method m : methods) by_method[m] = TrialSamples{m, budget, {}, {}, 0, 0.0};

    auto record = [&](Method m, const TrialOutcome& o, double ms) {
      auto& s = by_method[m];
      s.runtime_ms += ms;
      if (!o.g_hat) {
        ++s.failed;
        return;
      }
      s.estimates.push_back(*o.g_hat);
      if (o.predicted_var) s.predicted_vars.push_back(*o.predicted_var);
    };

    for (std::size_t t = 0; t < trials; ++t) {
      const std::uint64_t seed = trial_seed(options.master_seed, budget, t);
      for (const Method m : methods) {
        if (both_acis && m == Method::AcisLast) continue;
        const auto start = Clock::now();
        try {
          if (both_acis && m == Method::Acis) {
            const auto result =
                acis_run(pool, [&](std::size_t j) { return oracle[j]; }, acis_config_for(options, budget, seed));
            const double ms = elapsed_ms(start);
            record(Method::Acis, TrialOutcome{result.g_final, result.var_final}, ms / 2.0);
            record(Method::AcisLast, TrialOutcome{result.g_last, result.records.back().estimate_var}, ms / 2.0);
          } else {
            const TrialOutcome outcome = run_method(m, pool, oracle, budget, options, seed);
            record(m, outcome, elapsed_ms(start));
          }
        } catch (const Error& e) {
          std::cerr << "trial " << t << " of " << method_name(m) << " at budget " << budget
                    << " failed: " << e.what() << "\n";
          record(m, TrialOutcome{}, elapsed_ms(start));
          if (both_acis && m == Method::Acis) record(Method::AcisLast, TrialOutcome{}, 0.0);
        }
      }
    }
    for (const Method m : methods) {
      auto& s = by_method[m];
      if (s.failed > 0) {
        std::cerr << method_name(m) << " at budget " << budget << ": " << s.failed << " of " << trials
                  << " trials gave no estimate\n";
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

TrialReport summarize(const TrialSamples& samples, double exact) {
  TrialReport r;
  r.method = std::string(method_name(samples.method));
  r.budget = samples.budget;
  r.trials = samples.estimates.size();
  r.runtime_ms = samples.runtime_ms;
  if (!samples.estimates.empty()) {
    const double n = static_cast<double>(samples.estimates.size());
    double mean = 0.0;
    for (const double g : samples.estimates) mean += g;
    mean /= n;
    double var = 0.0;
    for (const double g : samples.estimates) var += (g - mean) * (g - mean);
    var /= n;
    r.bias = mean - exact;
    r.empirical_var = var;
    r.mse = r.bias * r.bias + r.empirical_var;
  }
  if (!samples.predicted_vars.empty()) {
    double acc = 0.0;
    for (const double v : samples.predicted_vars) acc += v;
    r.mean_predicted_var = acc / static_cast<double>(samples.predicted_vars.size());
  }
  return r;
}

std::vector<TrialReport> run_trials(const ScoredPool& pool, std::span<const Method> methods,
                                    std::span<const std::size_t> budgets, std::size_t trials,
                                    const BenchOptions& options) {
  const auto oracle = pool.oracle_labels();
  const double exact = exact_fscore(oracle, pool.predicted(), options.alpha);
  std::vector<TrialReport> reports;
  for (const auto& s : collect_trials(pool, methods, budgets, trials, options)) reports.push_back(summarize(s, exact));
  return reports;
}

std::vector<TrialReport> run_trials(const SynthConfig& cfg, std::span<const Method> methods,
                                    std::span<const std::size_t> budgets, std::size_t trials,
                                    const BenchOptions& options) {
  const SynthPool synth = synth_generate(cfg);
  if (synth.regenerations > 0) {
    std::cerr << "synthetic pool regenerated " << synth.regenerations << " times (seed " << synth.seed_used << ")\n";
  }
  return run_trials(synth.pool, methods, budgets, trials, options);
}

std::vector<FiniteVarianceRow> finite_dataset_variance(const ScoredPool& pool, std::span<const std::size_t> subset_sizes,
                                                       std::size_t trials, Alpha alpha, std::uint64_t seed) {
  const auto oracle = pool.oracle_labels();
  const auto predicted = pool.predicted();
  std::vector<FiniteVarianceRow> rows;
  for (const std::size_t size : subset_sizes) {
    if (size == 0 || size > pool.size()) throw Error(ErrorCode::InvalidArgument, "subset size out of range");
    Rng rng(mix_seed(seed, size));
    FiniteVarianceRow row;
    row.subset_size = size;
    std::vector<double> values;
    values.reserve(trials);
    std::vector<Label> y(size), yhat(size);
    for (std::size_t t = 0; t < trials; ++t) {
      const auto idx = sample_without_replacement(pool.size(), size, rng);
      for (std::size_t k = 0; k < size; ++k) {
        y[k] = oracle[idx[k]];
        yhat[k] = predicted[idx[k]];
      }
      try {
        values.push_back(exact_fscore(y, yhat, alpha));
      } catch (const Error&) {
        ++row.degenerate;
      }
    }
    row.trials = values.size();
    if (!values.empty()) {
      for (const double v : values) row.mean += v;
      row.mean /= static_cast<double>(values.size());
    }
    if (values.size() > 1) {
      for (const double v : values) row.variance += (v - row.mean) * (v - row.mean);
      row.variance /= static_cast<double>(values.size() - 1);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace lowshot
