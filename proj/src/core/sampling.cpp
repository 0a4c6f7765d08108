#include "lowshot/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lowshot/errors.hpp"

namespace lowshot {

std::optional<Label> LabelStore::get(std::size_t index) const {
  const auto v = labels_.at(index);
  if (v < 0) return std::nullopt;
  return static_cast<Label>(v);
}

void LabelStore::set(std::size_t index, Label label) {
  if (label > 1) throw Error(ErrorCode::InvalidLabel, "label must be 0 or 1");
  auto& slot = labels_.at(index);
  if (slot < 0) ++count_;
  slot = static_cast<std::int8_t>(label);
}

std::vector<std::pair<std::size_t, Label>> LabelStore::entries() const {
  std::vector<std::pair<std::size_t, Label>> out;
  out.reserve(count_);
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= 0) out.emplace_back(i, static_cast<Label>(labels_[i]));
  }
  return out;
}

std::vector<std::size_t> full_domain(std::size_t pool_size) {
  std::vector<std::size_t> all(pool_size);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return all;
}

std::vector<std::size_t> restrict_domain(const ScoredPool& pool, std::size_t iteration,
                                         std::size_t multiplier) {
  const std::size_t n_pos = pool.predicted_positive_count();
  const std::size_t n = pool.size();
  if (n_pos == 0) return full_domain(n);

  const std::size_t want = multiplier * (iteration + 1) * n_pos;
  if (want >= n) return full_domain(n);

  std::vector<std::size_t> order = full_domain(n);
  const auto scores = pool.scores();
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(want), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
                    });
  order.resize(want);
  std::sort(order.begin(), order.end());
  return order;
}

SamplingPlan importance_distribution(std::span<const double> probs, std::span<const Label> predicted,
                                     double g_prev, Alpha alpha, std::span<const std::size_t> domain,
                                     std::size_t pool_size) {
  if (domain.empty()) throw Error(ErrorCode::EmptyInput, "sampling domain is empty");
  if (probs.size() != pool_size || predicted.size() != pool_size) {
    throw Error(ErrorCode::InvalidArgument, "per-item inputs must match the pool size");
  }
  const double a = alpha.value;
  const double g = g_prev;
  const double p_x = 1.0 / static_cast<double>(pool_size);

  SamplingPlan plan;
  plan.domain.assign(domain.begin(), domain.end());
  plan.mass.assign(pool_size, 0.0);
  plan.p_x = p_x;

  double total = 0.0;
  for (const std::size_t j : domain) {
    const double c = probs[j];
    double m;
    if (predicted[j] == 1) {
      m = p_x * std::sqrt(c * (1.0 - g) * (1.0 - g) + a * a * (1.0 - c) * g * g);
    } else {
      m = p_x * (1.0 - a) * std::sqrt(c * g * g);
    }
    plan.mass[j] = m;
    total += m;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::AllZeroMass, "importance distribution has no mass on the domain");
  for (const std::size_t j : domain) plan.mass[j] /= total;
  return plan;
}

SamplingPlan uniform_plan(std::span<const std::size_t> domain, std::size_t pool_size) {
  if (domain.empty()) throw Error(ErrorCode::EmptyInput, "sampling domain is empty");
  SamplingPlan plan;
  plan.domain.assign(domain.begin(), domain.end());
  plan.mass.assign(pool_size, 0.0);
  plan.p_x = 1.0 / static_cast<double>(pool_size);
  const double m = 1.0 / static_cast<double>(domain.size());
  for (const std::size_t j : domain) plan.mass[j] = m;
  return plan;
}

PlanSampler::PlanSampler(const SamplingPlan& plan) {
  domain_.reserve(plan.domain.size());
  cdf_.reserve(plan.domain.size());
  double acc = 0.0;
  for (const std::size_t j : plan.domain) {
    if (plan.mass[j] <= 0.0) continue;
    acc += plan.mass[j];
    domain_.push_back(j);
    cdf_.push_back(acc);
  }
  if (domain_.empty()) throw Error(ErrorCode::AllZeroMass, "plan has no positive mass");
}

std::size_t PlanSampler::operator()(Rng& rng) const {
  const double u = unit_uniform(rng) * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  return domain_[static_cast<std::size_t>(it - cdf_.begin())];
}

std::vector<std::size_t> weighted_sample(const SamplingPlan& plan, std::size_t n_draws, Rng& rng) {
  if (n_draws == 0) throw Error(ErrorCode::InvalidArgument, "n_draws must be at least 1");
  const PlanSampler sampler(plan);
  std::vector<std::size_t> out(n_draws);
  for (auto& idx : out) idx = sampler(rng);
  return out;
}

std::vector<LabeledDraw> make_draws(std::span<const std::size_t> indices, const SamplingPlan& plan,
                                    const ScoredPool& pool, const LabelStore& labels, Alpha alpha) {
  std::vector<LabeledDraw> draws;
  draws.reserve(indices.size());
  const auto predicted = pool.predicted();
  for (const std::size_t j : indices) {
    const auto y = labels.get(j);
    if (!y) throw Error(ErrorCode::MissingLabel, "no label for drawn item '" + pool[j].id + "'");
    const double q = plan.mass.at(j);
    if (!(q > 0.0)) throw Error(ErrorCode::InvalidArgument, "drawn index lies outside the plan support");
    LabeledDraw d;
    d.index = j;
    d.true_label = *y;
    d.density_ratio = plan.p_x / q;
    d.weight = d.density_ratio * fscore_weight_factor(*y, predicted[j], alpha.value);
    d.loss_complement = predicted[j] == *y ? 1 : 0;
    d.provenance = Provenance::Fresh;
    draws.push_back(d);
  }
  return draws;
}

std::vector<LabeledDraw> reuse_draws(const LabelStore& labels, const ScoredPool& pool, Alpha alpha) {
  std::vector<LabeledDraw> draws;
  if (labels.count() == 0) return draws;
  const double ratio = static_cast<double>(labels.count()) / static_cast<double>(pool.size());
  const auto predicted = pool.predicted();
  for (const auto& [j, y] : labels.entries()) {
    LabeledDraw d;
    d.index = j;
    d.true_label = y;
    d.density_ratio = ratio;
    d.weight = ratio * fscore_weight_factor(y, predicted[j], alpha.value);
    d.loss_complement = predicted[j] == y ? 1 : 0;
    d.provenance = Provenance::Reused;
    draws.push_back(d);
  }
  return draws;
}

}  // namespace lowshot
