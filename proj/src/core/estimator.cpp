#include "lowshot/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "lowshot/errors.hpp"

namespace lowshot {

double is_fscore(std::span<const LabeledDraw> draws) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& d : draws) {
    num += d.weight * d.loss_complement;
    den += d.weight;
  }
  if (!(den > 0.0)) throw Error(ErrorCode::ZeroWeightMass, "no draw carries importance weight");
  return std::clamp(num / den, 0.0, 1.0);
}

VarianceEstimate variance_estimate(std::span<const LabeledDraw> draws, double g_hat) {
  const std::size_t n = draws.size();
  if (n < 2) throw Error(ErrorCode::InsufficientDraws, "variance needs at least two draws");

  double sum_w = 0.0;
  double sum_w2 = 0.0;
  double sum_w2_dev2 = 0.0;
  for (const auto& d : draws) {
    const double dev = d.loss_complement - g_hat;
    sum_w += d.weight;
    sum_w2 += d.weight * d.weight;
    sum_w2_dev2 += d.weight * d.weight * dev * dev;
  }
  if (!(sum_w > 0.0)) throw Error(ErrorCode::ZeroWeightMass, "no draw carries importance weight");

  const double c = 1.0 - sum_w2 / (sum_w * sum_w);
  if (!(c > 0.0)) throw Error(ErrorCode::DegenerateWeights, "a single draw carries all weight");

  const double nd = static_cast<double>(n);
  VarianceEstimate out;
  out.asymptotic_var = (sum_w2_dev2 / c) / ((sum_w * sum_w) / nd);
  out.estimate_var = out.asymptotic_var / nd;
  return out;
}

namespace {

std::span<const IterationRecord> tail(std::span<const IterationRecord> records, std::size_t window) {
  if (window == 0) throw Error(ErrorCode::InvalidArgument, "averaging window must be at least 1");
  const std::size_t k = std::min(window, records.size());
  return records.subspan(records.size() - k);
}

}  // namespace

CombinedEstimate combine_estimates(std::span<const IterationRecord> records, std::size_t window) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no iteration records to combine");
  const auto last = tail(records, window);

  double mass = 0.0;
  for (const auto& r : last) mass += r.weight_mass;

  CombinedEstimate out;
  if (!(mass > 0.0)) {
    // Nothing informative in the window yet: carry the latest estimate.
    out.g = last.back().g_hat;
    out.var = last.back().estimate_var;
    return out;
  }

  double g = 0.0;
  double var = 0.0;
  bool any_var = false;
  for (const auto& r : last) {
    const double share = r.weight_mass / mass;
    g += share * r.g_hat;
    if (share > 0.0 && r.estimate_var) {
      var += share * share * *r.estimate_var;
      any_var = true;
    }
  }
  out.g = std::clamp(g, 0.0, 1.0);
  if (any_var) out.var = var;
  return out;
}

std::optional<double> worst_case_combined_variance(std::span<const IterationRecord> records,
                                                   std::size_t window) {
  if (records.empty()) return std::nullopt;
  const auto last = tail(records, window);
  double mass = 0.0;
  for (const auto& r : last) mass += r.weight_mass;
  if (!(mass > 0.0)) return std::nullopt;
  double sd = 0.0;
  bool any = false;
  for (const auto& r : last) {
    const double share = r.weight_mass / mass;
    if (share > 0.0 && r.estimate_var) {
      sd += share * std::sqrt(*r.estimate_var);
      any = true;
    }
  }
  if (!any) return std::nullopt;
  return sd * sd;
}

}  // namespace lowshot
