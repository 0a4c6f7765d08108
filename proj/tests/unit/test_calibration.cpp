#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "lowshot/calibration.hpp"
#include "lowshot/errors.hpp"
#include "lowshot/rng.hpp"
#include "support.hpp"

using namespace lowshot;
using lowshot::testing::make_pool;

namespace {

std::vector<double> raw_at(const Calibrator& c, const std::vector<double>& scores) {
  std::vector<double> out;
  for (const double s : scores) {
    const auto bps = c.breakpoints();
    auto it = std::upper_bound(bps.begin(), bps.end(), s, [](double v, const Breakpoint& b) { return v < b.score; });
    out.push_back(it == bps.begin() ? bps.front().value : std::prev(it)->value);
  }
  return out;
}

// Minimum squared error over all nondecreasing fits, by enumerating every
// partition of the sorted distinct scores into contiguous blocks. The best
// fit with a given partition uses block means; it is feasible only when the
// means are nondecreasing.
double brute_force_monotone_sse(std::vector<ScoreTarget> pairs) {
  std::map<double, std::pair<double, double>> by_score;  // sum, count
  for (const auto& p : pairs) {
    by_score[p.score].first += p.target;
    by_score[p.score].second += 1.0;
  }
  std::vector<std::pair<double, double>> groups(by_score.size());
  std::size_t k = 0;
  for (const auto& [s, sc] : by_score) groups[k++] = sc;
  const std::size_t m = groups.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t cuts = 0; cuts < (1u << (m - 1)); ++cuts) {
    std::vector<double> means;
    std::vector<std::size_t> start{0};
    for (std::size_t i = 1; i < m; ++i) if (cuts & (1u << (i - 1))) start.push_back(i);
    start.push_back(m);
    bool ok = true;
    double prev = -1.0;
    std::vector<double> value(m);
    for (std::size_t b = 0; b + 1 < start.size(); ++b) {
      double sum = 0, cnt = 0;
      for (std::size_t i = start[b]; i < start[b + 1]; ++i) {
        sum += groups[i].first;
        cnt += groups[i].second;
      }
      const double mean = sum / cnt;
      if (mean < prev - 1e-15) ok = false;
      prev = mean;
      for (std::size_t i = start[b]; i < start[b + 1]; ++i) value[i] = mean;
    }
    if (!ok) continue;
    std::map<double, double> fitted;
    k = 0;
    for (const auto& [s, sc] : by_score) fitted[s] = value[k++];
    double sse = 0;
    for (const auto& p : pairs) sse += (p.target - fitted[p.score]) * (p.target - fitted[p.score]);
    best = std::min(best, sse);
  }
  return best;
}

double sse_of(const Calibrator& c, const std::vector<ScoreTarget>& pairs) {
  double sse = 0;
  std::vector<double> scores;
  for (const auto& p : pairs) scores.push_back(p.score);
  const auto v = raw_at(c, scores);
  for (std::size_t i = 0; i < pairs.size(); ++i) sse += (pairs[i].target - v[i]) * (pairs[i].target - v[i]);
  return sse;
}

// Independent PAVA over (score, target) sorted by score with tie pooling,
// written as the textbook repeated-merge loop.
std::vector<double> reference_pava(std::vector<ScoreTarget> pairs) {
  std::sort(pairs.begin(), pairs.end(), [](auto& a, auto& b) { return a.score < b.score; });
  std::vector<double> level, weight;
  std::vector<double> uniq;
  for (const auto& p : pairs) {
    if (!uniq.empty() && uniq.back() == p.score) {
      level.back() = (level.back() * weight.back() + p.target) / (weight.back() + 1);
      weight.back() += 1;
    } else {
      uniq.push_back(p.score);
      level.push_back(p.target);
      weight.push_back(1);
    }
  }
  std::vector<std::vector<std::size_t>> members(level.size());
  for (std::size_t i = 0; i < level.size(); ++i) members[i] = {i};
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i + 1 < level.size(); ++i) {
      if (level[i] > level[i + 1]) {
        level[i] = (level[i] * weight[i] + level[i + 1] * weight[i + 1]) / (weight[i] + weight[i + 1]);
        weight[i] += weight[i + 1];
        members[i].insert(members[i].end(), members[i + 1].begin(), members[i + 1].end());
        level.erase(level.begin() + i + 1);
        weight.erase(weight.begin() + i + 1);
        members.erase(members.begin() + i + 1);
        merged = true;
        break;
      }
    }
  }
  std::vector<double> out(uniq.size());
  for (std::size_t b = 0; b < level.size(); ++b) for (const auto i : members[b]) out[i] = level[b];
  return out;
}

}  // namespace

TEST(FitIsotonic, AlreadyMonotoneIsUnchanged) {
  std::vector<ScoreTarget> pairs{{0.1, 0}, {0.2, 0}, {0.8, 1}, {0.9, 1}};
  const auto c = fit_isotonic(pairs);
  EXPECT_EQ(raw_at(c, {0.1, 0.2, 0.8, 0.9}), (std::vector<double>{0, 0, 1, 1}));
}

TEST(FitIsotonic, ViolatingPairIsPooled) {
  std::vector<ScoreTarget> pairs{{0.2, 1}, {0.4, 0}};
  const auto c = fit_isotonic(pairs);
  EXPECT_EQ(raw_at(c, {0.2, 0.4}), (std::vector<double>{0.5, 0.5}));
  EXPECT_DOUBLE_EQ(sse_of(c, pairs), brute_force_monotone_sse(pairs));
}

TEST(FitIsotonic, SinglePairIsConstant) {
  std::vector<ScoreTarget> pairs{{0.5, 1}};
  const auto c = fit_isotonic(pairs);
  EXPECT_EQ(raw_at(c, {-3.0, 0.5, 9.0}), (std::vector<double>{1, 1, 1}));
}

TEST(FitIsotonic, TiesAreAveragedFirst) {
  std::vector<ScoreTarget> pairs{{0.3, 1}, {0.3, 0}, {0.3, 1}, {0.7, 1}};
  const auto c = fit_isotonic(pairs);
  EXPECT_NEAR(raw_at(c, {0.3})[0], 2.0 / 3.0, 1e-15);
  EXPECT_EQ(c.breakpoints().size(), 2u);
}

TEST(FitIsotonic, QueriesUseBreakpointAtOrBelow) {
  std::vector<ScoreTarget> pairs{{0.1, 0}, {0.5, 0.5}, {0.9, 1}};
  const auto c = clamp_rescale(fit_isotonic(pairs), 0.25);
  EXPECT_DOUBLE_EQ(c(0.0), 0.25);        // below first: extrapolate
  EXPECT_DOUBLE_EQ(c(0.49), 0.25);       // still the 0.1 step
  EXPECT_DOUBLE_EQ(c(0.5), 0.5);
  EXPECT_DOUBLE_EQ(c(0.95), 0.75);
}

TEST(FitIsotonic, EmptyInputThrows) {
  try {
    fit_isotonic({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
}

TEST(FitIsotonic, MatchesBruteForceOnSmallInstances) {
  Rng rng(11);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 1 + uniform_index(rng, 8);
    std::vector<ScoreTarget> pairs(n);
    for (auto& p : pairs) {
      p.score = static_cast<double>(uniform_index(rng, 6)) / 5.0;  // ties likely
      p.target = uniform_index(rng, 3) == 0 ? unit_uniform(rng) : double(uniform_index(rng, 2));
    }
    const auto c = fit_isotonic(pairs);
    EXPECT_NEAR(sse_of(c, pairs), brute_force_monotone_sse(pairs), 1e-10) << "rep " << rep;
  }
}

TEST(FitIsotonic, AgreesWithReferencePava) {
  Rng rng(12);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 1 + uniform_index(rng, 200);
    std::vector<ScoreTarget> pairs(n);
    for (auto& p : pairs) {
      p.score = std::round(unit_uniform(rng) * 50) / 50;
      p.target = unit_uniform(rng) < p.score ? 1.0 : 0.0;
    }
    const auto c = fit_isotonic(pairs);
    const auto ref = reference_pava(pairs);
    const auto bps = c.breakpoints();
    ASSERT_EQ(bps.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(bps[i].value, ref[i], 1e-12);
  }
}

TEST(Calibrators, MonotoneOnDenseGrid) {
  Rng rng(13);
  std::vector<ScoreTarget> pairs(300);
  for (auto& p : pairs) {
    p.score = unit_uniform(rng);
    p.target = unit_uniform(rng) < p.score * p.score ? 1.0 : 0.0;
  }
  const auto iso = clamp_rescale(fit_isotonic(pairs), 1e-4);
  const auto platt = clamp_rescale(fit_platt(pairs), 1e-4);
  const auto blend = blend_calibrators(iso, platt, 0.3);
  for (const Calibrator* c : {&iso, &platt, &blend}) {
    double prev = -1.0;
    for (int k = 0; k < 1000; ++k) {
      const double v = (*c)(k / 999.0);
      EXPECT_GE(v, prev);
      EXPECT_GE(v, 1e-4);
      EXPECT_LE(v, 1 - 1e-4);
      prev = v;
    }
  }
}

TEST(FitPlatt, AllPositiveFallsBackToClampedOne) {
  std::vector<ScoreTarget> pairs{{0.1, 1}, {0.5, 1}, {0.9, 1}};
  const auto raw = fit_platt(pairs);
  EXPECT_TRUE(raw.degenerate());
  const auto c = clamp_rescale(raw, 1e-4);
  EXPECT_DOUBLE_EQ(c(0.3), 1 - 1e-4);
}

TEST(FitPlatt, SymmetricPairsGiveMidpoint) {
  std::vector<ScoreTarget> pairs{{-1, 0}, {1, 1}};
  const auto c = clamp_rescale(fit_platt(pairs), 1e-4);
  EXPECT_NEAR(c(0.0), 0.5, 1e-9);
}

TEST(FitPlatt, RecoversSlopeAndMatchesGridSearchMle) {
  Rng rng(2024);
  std::vector<ScoreTarget> pairs(200);
  for (auto& p : pairs) {
    p.score = 2.0 * unit_uniform(rng) - 1.0;
    p.target = unit_uniform(rng) < 1.0 / (1.0 + std::exp(-3.0 * p.score)) ? 1.0 : 0.0;
  }
  const auto c = fit_platt(pairs);
  EXPECT_NEAR(c.sigmoid_a(), -3.0, 0.5);

  auto nll = [&](double a, double b) {
    double f = 0;
    for (const auto& p : pairs) {
      const double q = 1.0 / (1.0 + std::exp(a * p.score + b));
      f -= p.target * std::log(q) + (1 - p.target) * std::log(1 - q);
    }
    return f;
  };
  double best_a = 0, best_b = 0, best = std::numeric_limits<double>::infinity();
  for (double a = -6; a <= 0; a += 0.01) {
    for (double b = -1; b <= 1; b += 0.01) {
      const double f = nll(a, b);
      if (f < best) best = f, best_a = a, best_b = b;
    }
  }
  EXPECT_NEAR(c.sigmoid_a(), best_a, 0.02);
  EXPECT_NEAR(c.sigmoid_b(), best_b, 0.02);
  EXPECT_LE(nll(c.sigmoid_a(), c.sigmoid_b()), best + 1e-9);
}

TEST(ClampRescale, MapsEndpointsAndFixesMidpoint) {
  const double eps = 1e-4;
  EXPECT_DOUBLE_EQ(clamp_rescale(Calibrator::constant(0.0, CalibratorKind::Isotonic), eps)(0.3), eps);
  EXPECT_DOUBLE_EQ(clamp_rescale(Calibrator::constant(1.0, CalibratorKind::Isotonic), eps)(0.3), 1 - eps);
  for (const double e : {1e-6, 0.1, 0.49}) {
    EXPECT_DOUBLE_EQ(clamp_rescale(Calibrator::constant(0.5, CalibratorKind::Isotonic), e)(0.3), 0.5);
  }
  EXPECT_THROW(clamp_rescale(Calibrator::constant(0.5, CalibratorKind::Isotonic), 0.5), Error);
  EXPECT_THROW(clamp_rescale(Calibrator::constant(0.5, CalibratorKind::Isotonic), 0.0), Error);
}

TEST(CalibrationPrior, ThresholdedPredictionsGiveStep) {
  const auto pool = make_pool({0.1, 0.2, 0.3, 0.6, 0.7, 0.9}, {0, 0, 0, 1, 1, 1});
  const auto c = fit_calibration_prior(pool, 1e-4);
  for (const auto& b : c.breakpoints()) EXPECT_EQ(b.value, b.score < 0.5 ? 0.0 : 1.0);
  EXPECT_DOUBLE_EQ(c(0.0), 1e-4);
  EXPECT_DOUBLE_EQ(c(1.0), 1 - 1e-4);
}

TEST(CalibrationPrior, AllNegativeIsConstantEps) {
  const auto pool = make_pool({0.1, 0.5, 0.9}, {0, 0, 0});
  const auto c = fit_calibration_prior(pool, 1e-3);
  for (const double s : {0.0, 0.5, 1.0}) EXPECT_DOUBLE_EQ(c(s), 1e-3);
}

TEST(CalibrationPrior, ReproducesReferencePavaOnRandomPool) {
  Rng rng(5);
  std::vector<double> scores(500);
  std::vector<int> pred(500);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = unit_uniform(rng) * 10 - 3;
    pred[i] = unit_uniform(rng) < 0.3 + 0.05 * scores[i] ? 1 : 0;
  }
  const auto pool = make_pool(scores, pred);
  const double eps = 1e-4;
  const auto c = fit_calibration_prior(pool, eps);
  std::vector<ScoreTarget> pairs;
  for (std::size_t i = 0; i < pool.size(); ++i) pairs.push_back({pool.unit_scores()[i], double(pred[i])});
  const auto ref = reference_pava(pairs);
  std::vector<double> uniq;
  for (const auto& p : pairs) uniq.push_back(p.score);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  for (std::size_t i = 0; i < uniq.size(); ++i) EXPECT_NEAR(c(uniq[i]), eps + (1 - 2 * eps) * ref[i], 1e-12);
}

TEST(BlendCalibrators, EndpointsAndMidpoint) {
  const double eps = 1e-4;
  const auto c0 = clamp_rescale(Calibrator::constant(0.2, CalibratorKind::Isotonic), eps);
  const auto ci = clamp_rescale(Calibrator::constant(0.6, CalibratorKind::Isotonic), eps);
  EXPECT_DOUBLE_EQ(blend_calibrators(c0, ci, 1.0)(0.4), c0(0.4));
  EXPECT_DOUBLE_EQ(blend_calibrators(c0, ci, 0.0)(0.4), ci(0.4));
  EXPECT_NEAR(blend_calibrators(c0, ci, 0.5)(0.4), eps + (1 - 2 * eps) * 0.4, 1e-12);
}

TEST(BlendCalibrators, RejectsMismatchedEpsAndBadBeta) {
  const auto a = clamp_rescale(Calibrator::constant(0.2, CalibratorKind::Isotonic), 1e-4);
  const auto b = clamp_rescale(Calibrator::constant(0.2, CalibratorKind::Isotonic), 1e-3);
  EXPECT_THROW(blend_calibrators(a, b, 0.5), Error);
  EXPECT_THROW(blend_calibrators(a, a, 1.5), Error);
}
