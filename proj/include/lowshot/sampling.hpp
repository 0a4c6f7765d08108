#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lowshot/pool.hpp"
#include "lowshot/rng.hpp"

namespace lowshot {

// Normalized importance distribution over a subset of pool indices.
struct SamplingPlan {
  std::vector<std::size_t> domain;  // ascending pool indices
  std::vector<double> mass;         // per pool index; zero outside domain
  double p_x = 0.0;                 // uniform population density 1/|X|
  bool uniform_fallback = false;    // set when the optimal mass was all zero
};

// Labels collected so far, indexed by pool position.
class LabelStore {
 public:
  LabelStore() = default;
  explicit LabelStore(std::size_t pool_size) : labels_(pool_size, -1) {}

  std::size_t pool_size() const noexcept { return labels_.size(); }
  std::size_t count() const noexcept { return count_; }
  bool has(std::size_t index) const { return labels_.at(index) >= 0; }
  std::optional<Label> get(std::size_t index) const;
  void set(std::size_t index, Label label);

  // Labeled (index, label) pairs in ascending index order.
  std::vector<std::pair<std::size_t, Label>> entries() const;

 private:
  std::vector<std::int8_t> labels_;
  std::size_t count_ = 0;
};

enum class Provenance { Fresh, Reused };

struct LabeledDraw {
  std::size_t index = 0;
  Label true_label = 0;
  double density_ratio = 0.0;  // p(x) / q(x)
  double weight = 0.0;         // density_ratio * v
  Label loss_complement = 0;   // 1 iff predicted == true label
  Provenance provenance = Provenance::Fresh;
};

// v(y, yhat) = alpha yhat + (1 - alpha) y.
inline double fscore_weight_factor(Label truth, Label predicted, double alpha) {
  return alpha * predicted + (1.0 - alpha) * truth;
}

// Indices of the multiplier * (iteration + 1) * n_pos highest unit scores,
// ties broken by pool order, returned ascending. Falls back to every index
// when the model predicts no positives.
std::vector<std::size_t> restrict_domain(const ScoredPool& pool, std::size_t iteration,
                                         std::size_t multiplier);

std::vector<std::size_t> full_domain(std::size_t pool_size);

// Variance-minimizing proposal with probs standing in for p(y=1|x) and g_prev
// for the F-score. probs and predicted are indexed by pool position.
// Throws AllZeroMass when no domain index receives positive mass.
SamplingPlan importance_distribution(std::span<const double> probs, std::span<const Label> predicted,
                                     double g_prev, Alpha alpha, std::span<const std::size_t> domain,
                                     std::size_t pool_size);

SamplingPlan uniform_plan(std::span<const std::size_t> domain, std::size_t pool_size);

// Inverse-CDF sampler over a plan's domain.
class PlanSampler {
 public:
  explicit PlanSampler(const SamplingPlan& plan);
  std::size_t operator()(Rng& rng) const;

 private:
  std::vector<std::size_t> domain_;
  std::vector<double> cdf_;
};

// n i.i.d. draws with replacement from the plan.
std::vector<std::size_t> weighted_sample(const SamplingPlan& plan, std::size_t n_draws, Rng& rng);

// Importance-weighted draws for sampled indices; throws MissingLabel.
std::vector<LabeledDraw> make_draws(std::span<const std::size_t> indices, const SamplingPlan& plan,
                                    const ScoredPool& pool, const LabelStore& labels, Alpha alpha);

// Previously labeled items, each weighted by |L|/|X| * v.
std::vector<LabeledDraw> reuse_draws(const LabelStore& labels, const ScoredPool& pool, Alpha alpha);

}  // namespace lowshot
