#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "lowshot/calibration.hpp"
#include "lowshot/pool.hpp"
#include "lowshot/rng.hpp"
#include "lowshot/sampling.hpp"

namespace lowshot {

enum class Method { Acis, AcisLast, TopK, Gmm, Herding, Sawade, Rand, Iso, Platt };

std::string_view method_name(Method m);
// Accepts the CLI spellings (acis, acis-last, topk, gmm, herding, sawade,
// rand, iso, platt), case-insensitive. Throws InvalidArgument.
Method parse_method(std::string_view name);

struct BaselineResult {
  Method method = Method::Rand;
  std::size_t budget = 0;
  std::optional<double> g_hat;  // empty when the metric is undefined on the sample
  std::optional<double> estimate_var;
  std::vector<std::pair<std::size_t, Label>> labels_used;
};

// Labels the budget highest-scored items; everything unlabeled counts as a
// true negative.
BaselineResult topk_estimate(const ScoredPool& pool, std::span<const Label> oracle, std::size_t budget, Alpha alpha);

struct GaussianComponent {
  double weight = 0.5;
  double mean = 0.0;
  double var = 1.0;
};

struct MixtureFit {
  GaussianComponent negative;
  GaussianComponent positive;
  std::vector<double> log_likelihood;  // one entry per EM iteration
  bool converged = false;
};

// Two-component 1-D Gaussian mixture by EM from the given starting point.
// Stops after 500 iterations or once the log-likelihood gains less than 1e-9.
// Variances are floored at 1e-6. The positive component is the one with the
// higher mean on return.
MixtureFit fit_score_mixture(std::span<const double> scores, GaussianComponent negative, GaussianComponent positive);

// Top-K labels anchor a score mixture whose posterior labels the rest.
BaselineResult gmm_estimate(const ScoredPool& pool, std::span<const Label> oracle, std::size_t budget, Alpha alpha);

// Silverman rule-of-thumb bandwidth, 0.9 min(sd, IQR/1.34) n^(-1/5).
double silverman_bandwidth(std::span<const double> values);

// Greedy kernel herding in unit-score space with a Gaussian kernel. Never
// selects an index twice. Deterministic.
std::vector<std::size_t> herding_select(const ScoredPool& pool, std::size_t budget);
BaselineResult herding_estimate(const ScoredPool& pool, std::span<const Label> oracle, std::size_t budget,
                                Alpha alpha);

// One-shot importance sampling that treats eps-clamped unit scores as
// calibrated probabilities, with an expected-count guess for G.
SamplingPlan sawade_plan(const ScoredPool& pool, Alpha alpha, double eps);
BaselineResult sawade_estimate(const ScoredPool& pool, std::span<const Label> oracle, std::size_t budget,
                               Alpha alpha, Rng& rng, double eps = 1e-4);

// Uniform sample without replacement, plug-in metric on the sample.
BaselineResult rand_estimate(const ScoredPool& pool, std::span<const Label> oracle, std::size_t budget, Alpha alpha,
                             Rng& rng);

// Uniform labels, a fitted calibrator infers the rest as expected counts.
BaselineResult calibrate_infer_estimate(const ScoredPool& pool, std::span<const Label> oracle, std::size_t budget,
                                        Alpha alpha, CalibratorKind kind, Rng& rng, double eps = 1e-4);

// Expected-count F-score where labeled items contribute their true label and
// the rest contribute probs[j].
double expected_count_fscore(std::span<const Label> predicted, std::span<const double> probs,
                             std::span<const std::pair<std::size_t, Label>> labeled, Alpha alpha);

// k distinct indices in [0, n) uniformly at random.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng);

}  // namespace lowshot
