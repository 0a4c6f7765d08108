#include "lowshot/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_set>

#include "lowshot/errors.hpp"
#include "lowshot/estimator.hpp"
#include "lowshot/fscore.hpp"

namespace lowshot {

namespace {

constexpr std::size_t kMaxSawadeDraws = 5'000'000;

void check_oracle(const ScoredPool& pool, std::span<const Label> oracle, std::size_t budget) {
  if (oracle.size() != pool.size()) throw Error(ErrorCode::InvalidArgument, "oracle must cover the pool");
  if (budget == 0) throw Error(ErrorCode::InvalidArgument, "budget must be positive");
  if (budget > pool.size()) throw Error(ErrorCode::InvalidArgument, "budget exceeds pool size");
}

std::vector<std::size_t> top_indices(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  k = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
                    });
  order.resize(k);
  return order;
}

std::vector<std::pair<std::size_t, Label>> label_all(std::span<const std::size_t> indices,
                                                     std::span<const Label> oracle) {
  std::vector<std::pair<std::size_t, Label>> out;
  out.reserve(indices.size());
  for (const std::size_t j : indices) out.emplace_back(j, oracle[j]);
  return out;
}

// Plug-in metric on the labeled subset only.
std::optional<double> subset_fscore(std::span<const Label> predicted,
                                    std::span<const std::pair<std::size_t, Label>> labeled, Alpha alpha) {
  Confusion c;
  for (const auto& [j, y] : labeled) {
    if (y && predicted[j]) c.tp += 1.0;
    else if (!y && predicted[j]) c.fp += 1.0;
    else if (y && !predicted[j]) c.fn += 1.0;
  }
  try {
    return fscore_from_counts(c, alpha);
  } catch (const Error&) {
    return std::nullopt;
  }
}

double gaussian_log_pdf(double x, const GaussianComponent& c) {
  constexpr double kLogTwoPi = 1.8378770664093453;
  const double d = x - c.mean;
  return -0.5 * (kLogTwoPi + std::log(c.var) + d * d / c.var);
}

double log_add(double a, double b) {
  const double hi = std::max(a, b);
  return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
}

GaussianComponent moments(std::span<const double> xs, double weight) {
  GaussianComponent c;
  c.weight = weight;
  c.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (const double x : xs) ss += (x - c.mean) * (x - c.mean);
  c.var = std::max(1e-6, ss / static_cast<double>(xs.size()));
  return c;
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::Acis: return "ACIS";
    case Method::AcisLast: return "ACIS_LAST";
    case Method::TopK: return "TOPK";
    case Method::Gmm: return "GMM";
    case Method::Herding: return "HERDING";
    case Method::Sawade: return "SAWADE";
    case Method::Rand: return "RAND";
    case Method::Iso: return "ISO";
    case Method::Platt: return "PLATT";
  }
  return "UNKNOWN";
}

Method parse_method(std::string_view name) {
  std::string key;
  for (const char ch : name) {
    if (ch == '-' || ch == '_') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  if (key == "acis") return Method::Acis;
  if (key == "acislast") return Method::AcisLast;
  if (key == "topk") return Method::TopK;
  if (key == "gmm") return Method::Gmm;
  if (key == "herding") return Method::Herding;
  if (key == "sawade") return Method::Sawade;
  if (key == "rand") return Method::Rand;
  if (key == "iso") return Method::Iso;
  if (key == "platt") return Method::Platt;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
  if (k > n) throw Error(ErrorCode::InvalidArgument, "cannot sample more items than exist");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

BaselineResult topk_estimate(const ScoredPool& pool, std::span<const Label> oracle, std::size_t budget,
                             Alpha alpha) {
  check_oracle(pool, oracle, budget);
  BaselineResult r{Method::TopK, budget, std::nullopt, std::nullopt, {}};
  r.labels_used = label_all(top_indices(pool.scores(), budget), oracle);

  std::vector<Label> assumed(pool.size(), 0);
  for (const auto& [j, y] : r.labels_used) assumed[j] = y;
  try {
    r.g_hat = exact_fscore(assumed, pool.predicted(), alpha);
  } catch (const Error&) {
  }
  return r;
}

MixtureFit fit_score_mixture(std::span<const double> scores, GaussianComponent negative,
                             GaussianComponent positive) {
  if (scores.empty()) throw Error(ErrorCode::EmptyInput, "mixture fit needs scores");
  MixtureFit fit;
  fit.negative = negative;
  fit.positive = positive;
  fit.negative.var = std::max(fit.negative.var, 1e-6);
  fit.positive.var = std::max(fit.positive.var, 1e-6);

  const std::size_t n = scores.size();
  std::vector<double> resp(n);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 500; ++iter) {
    // E step
    double ll = 0.0;
    const double log_wn = std::log(fit.negative.weight);
    const double log_wp = std::log(fit.positive.weight);
    for (std::size_t i = 0; i < n; ++i) {
      const double ln = log_wn + gaussian_log_pdf(scores[i], fit.negative);
      const double lp = log_wp + gaussian_log_pdf(scores[i], fit.positive);
      const double lt = log_add(ln, lp);
      resp[i] = std::exp(lp - lt);
      ll += lt;
    }
    fit.log_likelihood.push_back(ll);
    if (ll - prev_ll < 1e-9) {
      fit.converged = true;
      break;
    }
    prev_ll = ll;

    // M step
    double rp = 0.0, sp = 0.0, sn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      rp += resp[i];
      sp += resp[i] * scores[i];
      sn += (1.0 - resp[i]) * scores[i];
    }
    const double rn = static_cast<double>(n) - rp;
    if (rp <= 0.0 || rn <= 0.0) break;  // one component swallowed everything
    const double mp = sp / rp;
    const double mn = sn / rn;
    double vp = 0.0, vn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      vp += resp[i] * (scores[i] - mp) * (scores[i] - mp);
      vn += (1.0 - resp[i]) * (scores[i] - mn) * (scores[i] - mn);
    }
    fit.positive = GaussianComponent{rp / static_cast<double>(n), mp, std::max(1e-6, vp / rp)};
    fit.negative = GaussianComponent{rn / static_cast<double>(n), mn, std::max(1e-6, vn / rn)};
  }
  if (fit.positive.mean < fit.negative.mean) std::swap(fit.positive, fit.negative);
  return fit;
}

BaselineResult gmm_estimate(const ScoredPool& pool, std::span<const Label> oracle, std::size_t budget,
                            Alpha alpha) {
  check_oracle(pool, oracle, budget);
  if (budget < 2) throw Error(ErrorCode::InvalidArgument, "GMM needs a budget of at least 2");
  BaselineResult r{Method::Gmm, budget, std::nullopt, std::nullopt, {}};
  r.labels_used = label_all(top_indices(pool.scores(), budget), oracle);

  const auto scores = pool.unit_scores();
  std::vector<double> pos_scores, neg_scores;
  for (const auto& [j, y] : r.labels_used) (y ? pos_scores : neg_scores).push_back(scores[j]);

  const GaussianComponent global = moments(scores, 0.5);
  const double pos_share = std::clamp(static_cast<double>(pos_scores.size()) / static_cast<double>(budget), 0.01, 0.99);
  GaussianComponent pos = pos_scores.empty()
                              ? GaussianComponent{pos_share, *std::max_element(scores.begin(), scores.end()), global.var}
                              : moments(pos_scores, pos_share);
  GaussianComponent neg = neg_scores.empty()
                              ? GaussianComponent{1.0 - pos_share, *std::min_element(scores.begin(), scores.end()),
                                                  global.var}
                              : moments(neg_scores, 1.0 - pos_share);
  pos.weight = pos_share;
  neg.weight = 1.0 - pos_share;

  const MixtureFit fit = fit_score_mixture(scores, neg, pos);

  std::vector<Label> inferred(pool.size());
  for (std::size_t j = 0; j < pool.size(); ++j) {
    const double lp = std::log(fit.positive.weight) + gaussian_log_pdf(scores[j], fit.positive);
    const double ln = std::log(fit.negative.weight) + gaussian_log_pdf(scores[j], fit.negative);
    inferred[j] = lp > ln ? 1 : 0;
  }
  for (const auto& [j, y] : r.labels_used) inferred[j] = y;
  try {
    r.g_hat = exact_fscore(inferred, pool.predicted(), alpha);
  } catch (const Error&) {
  }
  return r;
}

double silverman_bandwidth(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 1.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, n - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  if (!(spread > 0.0)) spread = 1.0;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

std::vector<std::size_t> herding_select(const ScoredPool& pool, std::size_t budget) {
  if (budget == 0) throw Error(ErrorCode::InvalidArgument, "budget must be positive");
  const std::size_t n = pool.size();
  budget = std::min(budget, n);
  const auto unit = pool.unit_scores();

  // Work in sorted order so kernel sums only touch a window of neighbours.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return unit[a] < unit[b]; });
  std::vector<double> xs(n);
  for (std::size_t k = 0; k < n; ++k) xs[k] = unit[order[k]];

  const double h = silverman_bandwidth(xs);
  const double inv_two_h2 = 1.0 / (2.0 * h * h);
  const double reach = 8.6 * h;  // kernel below 1e-16 beyond this

  auto for_neighbours = [&](std::size_t k, auto&& fn) {
    const auto lo = std::lower_bound(xs.begin(), xs.end(), xs[k] - reach) - xs.begin();
    const auto hi = std::upper_bound(xs.begin(), xs.end(), xs[k] + reach) - xs.begin();
    for (auto m = lo; m < hi; ++m) {
      const double d = xs[k] - xs[static_cast<std::size_t>(m)];
      fn(static_cast<std::size_t>(m), std::exp(-d * d * inv_two_h2));
    }
  };

  std::vector<double> embedding(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for_neighbours(k, [&](std::size_t, double kv) { acc += kv; });
    embedding[k] = acc / static_cast<double>(n);
  }

  std::vector<double> selected_sum(n, 0.0);
  std::vector<char> taken(n, 0);
  std::vector<std::size_t> picks;
  picks.reserve(budget);
  for (std::size_t t = 0; t < budget; ++t) {
    const double scale = 1.0 / static_cast<double>(t + 1);
    std::size_t best = n;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      if (taken[k]) continue;
      const double value = embedding[k] - scale * selected_sum[k];
      if (value > best_value || (value == best_value && best < n && order[k] < order[best])) {
        best_value = value;
        best = k;
      }
    }
    taken[best] = 1;
    picks.push_back(order[best]);
    for_neighbours(best, [&](std::size_t m, double kv) { selected_sum[m] += kv; });
  }
  return picks;
}

BaselineResult herding_estimate(const ScoredPool& pool, std::span<const Label> oracle, std::size_t budget,
                                Alpha alpha) {
  check_oracle(pool, oracle, budget);
  BaselineResult r{Method::Herding, budget, std::nullopt, std::nullopt, {}};
  r.labels_used = label_all(herding_select(pool, budget), oracle);
  r.g_hat = subset_fscore(pool.predicted(), r.labels_used, alpha);
  return r;
}

SamplingPlan sawade_plan(const ScoredPool& pool, Alpha alpha, double eps) {
  const auto unit = pool.unit_scores();
  const auto predicted = pool.predicted();
  std::vector<double> probs(pool.size());
  Confusion guess;
  for (std::size_t j = 0; j < pool.size(); ++j) {
    probs[j] = eps + (1.0 - 2.0 * eps) * unit[j];
    if (predicted[j]) {
      guess.tp += probs[j];
      guess.fp += 1.0 - probs[j];
    } else {
      guess.fn += probs[j];
    }
  }
  const double g = fscore_from_counts(guess, alpha);
  return importance_distribution(probs, predicted, g, alpha, full_domain(pool.size()), pool.size());
}

BaselineResult sawade_estimate(const ScoredPool& pool, std::span<const Label> oracle, std::size_t budget,
                               Alpha alpha, Rng& rng, double eps) {
  check_oracle(pool, oracle, budget);
  BaselineResult r{Method::Sawade, budget, std::nullopt, std::nullopt, {}};
  const SamplingPlan plan = sawade_plan(pool, alpha, eps);
  const PlanSampler sampler(plan);

  std::vector<std::size_t> draws;
  std::unordered_set<std::size_t> seen;
  while (seen.size() < budget && draws.size() < kMaxSawadeDraws) {
    const std::size_t j = sampler(rng);
    draws.push_back(j);
    if (seen.insert(j).second) r.labels_used.emplace_back(j, oracle[j]);
  }

  LabelStore store(pool.size());
  for (const auto& [j, y] : r.labels_used) store.set(j, y);
  const auto labeled = make_draws(draws, plan, pool, store, alpha);
  try {
    r.g_hat = is_fscore(labeled);
    r.estimate_var = variance_estimate(labeled, *r.g_hat).estimate_var;
  } catch (const Error&) {
  }
  return r;
}

BaselineResult rand_estimate(const ScoredPool& pool, std::span<const Label> oracle, std::size_t budget, Alpha alpha,
                             Rng& rng) {
  check_oracle(pool, oracle, budget);
  BaselineResult r{Method::Rand, budget, std::nullopt, std::nullopt, {}};
  r.labels_used = label_all(sample_without_replacement(pool.size(), budget, rng), oracle);
  r.g_hat = subset_fscore(pool.predicted(), r.labels_used, alpha);
  return r;
}

double expected_count_fscore(std::span<const Label> predicted, std::span<const double> probs,
                             std::span<const std::pair<std::size_t, Label>> labeled, Alpha alpha) {
  std::vector<double> p(probs.begin(), probs.end());
  for (const auto& [j, y] : labeled) p[j] = y;
  Confusion c;
  for (std::size_t j = 0; j < predicted.size(); ++j) {
    if (predicted[j]) {
      c.tp += p[j];
      c.fp += 1.0 - p[j];
    } else {
      c.fn += p[j];
    }
  }
  return fscore_from_counts(c, alpha);
}

BaselineResult calibrate_infer_estimate(const ScoredPool& pool, std::span<const Label> oracle, std::size_t budget,
                                        Alpha alpha, CalibratorKind kind, Rng& rng, double eps) {
  check_oracle(pool, oracle, budget);
  if (budget < 2) throw Error(ErrorCode::InvalidArgument, "calibration baselines need a budget of at least 2");
  BaselineResult r{kind == CalibratorKind::Platt ? Method::Platt : Method::Iso, budget, std::nullopt, std::nullopt, {}};
  r.labels_used = label_all(sample_without_replacement(pool.size(), budget, rng), oracle);

  const auto unit = pool.unit_scores();
  std::vector<ScoreTarget> pairs;
  pairs.reserve(r.labels_used.size());
  for (const auto& [j, y] : r.labels_used) pairs.push_back(ScoreTarget{unit[j], double(y)});
  const Calibrator fitted = kind == CalibratorKind::Platt ? fit_platt(pairs) : fit_isotonic(pairs);
  const Calibrator calibrator = clamp_rescale(fitted, eps);

  const auto probs = calibrator.evaluate(unit);
  try {
    r.g_hat = expected_count_fscore(pool.predicted(), probs, r.labels_used, alpha);
  } catch (const Error&) {
  }
  return r;
}

}  // namespace lowshot
