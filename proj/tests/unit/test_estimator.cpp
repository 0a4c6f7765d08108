#include <gtest/gtest.h>

#include <cmath>

#include "lowshot/errors.hpp"
#include "lowshot/estimator.hpp"
#include "lowshot/rng.hpp"

using namespace lowshot;

namespace {

std::vector<LabeledDraw> draws_of(const std::vector<double>& w, const std::vector<int>& l) {
  std::vector<LabeledDraw> out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    LabeledDraw d;
    d.index = i;
    d.weight = w[i];
    d.loss_complement = static_cast<Label>(l[i]);
    out.push_back(d);
  }
  return out;
}

IterationRecord record(double g, double mass, std::optional<double> var) {
  IterationRecord r;
  r.g_hat = g;
  r.weight_mass = mass;
  r.estimate_var = var;
  return r;
}

}  // namespace

TEST(IsFscore, AllHitsGiveOne) { EXPECT_DOUBLE_EQ(is_fscore(draws_of({0.3, 2.0, 1.0}, {1, 1, 1})), 1.0); }

TEST(IsFscore, EqualWeightsHalf) { EXPECT_DOUBLE_EQ(is_fscore(draws_of({1, 1}, {1, 0})), 0.5); }

TEST(IsFscore, ZeroWeightMassThrows) {
  try {
    is_fscore(draws_of({0, 0}, {1, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroWeightMass);
  }
}

TEST(VarianceEstimate, UnitWeightsReduceToBesselVariance) {
  Rng rng(8);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + uniform_index(rng, 50);
    std::vector<double> w(n, 1.0);
    std::vector<int> l(n);
    for (auto& x : l) x = uniform_index(rng, 2);
    const auto d = draws_of(w, l);
    const double g = is_fscore(d);
    double s2 = 0;
    for (const int x : l) s2 += (x - g) * (x - g);
    s2 /= (n - 1);
    const auto v = variance_estimate(d, g);
    EXPECT_NEAR(v.asymptotic_var, s2, 1e-12);
    EXPECT_NEAR(v.estimate_var, s2 / n, 1e-12);
  }
}

TEST(VarianceEstimate, EqualLossesGiveZero) {
  const auto d = draws_of({0.5, 2, 3}, {1, 1, 1});
  EXPECT_DOUBLE_EQ(variance_estimate(d, 1.0).asymptotic_var, 0.0);
}

TEST(VarianceEstimate, HandEvaluatedThreeDrawCase) {
  // w = (1,1,2), l = (1,0,1): G = 3/4. Sum w^2 (l-G)^2 = 1/16 + 9/16 + 4/16 = 14/16.
  // (1/n)(Sum w)^2 = 16/3. C = 1 - 6/16 = 5/8. S^2 = (8/5)(14/16)(3/16) = 21/80.
  const auto d = draws_of({1, 1, 2}, {1, 0, 1});
  const double g = is_fscore(d);
  EXPECT_DOUBLE_EQ(g, 0.75);
  const auto v = variance_estimate(d, g);
  EXPECT_NEAR(v.asymptotic_var, 21.0 / 80.0, 1e-15);
  EXPECT_NEAR(v.estimate_var, 21.0 / 240.0, 1e-15);
}

TEST(VarianceEstimate, ZeroWeightDrawsStillCountInN) {
  const auto base = draws_of({1, 1, 2}, {1, 0, 1});
  auto padded = base;
  padded.push_back(draws_of({0}, {1})[0]);
  const double g = is_fscore(base);
  const auto a = variance_estimate(base, g);
  const auto b = variance_estimate(padded, g);
  EXPECT_NEAR(b.asymptotic_var, a.asymptotic_var * 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(b.estimate_var, b.asymptotic_var / 4.0, 1e-15);
}

TEST(VarianceEstimate, ErrorCases) {
  auto code_of = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::EmptyInput;
  };
  EXPECT_EQ(code_of([] { variance_estimate(draws_of({1}, {1}), 1.0); }), ErrorCode::InsufficientDraws);
  EXPECT_EQ(code_of([] { variance_estimate(draws_of({0, 0}, {1, 0}), 0.5); }), ErrorCode::ZeroWeightMass);
  EXPECT_EQ(code_of([] { variance_estimate(draws_of({5, 0, 0}, {1, 0, 0}), 1.0); }), ErrorCode::DegenerateWeights);
}

TEST(CombineEstimates, SingleRecordPassesThrough) {
  const std::vector<IterationRecord> rs{record(0.3, 2.0, 0.01)};
  const auto c = combine_estimates(rs, 3);
  EXPECT_DOUBLE_EQ(c.g, 0.3);
  EXPECT_DOUBLE_EQ(*c.var, 0.01);
}

TEST(CombineEstimates, EqualMassAverages) {
  const std::vector<IterationRecord> rs{record(0.4, 1.0, 0.02), record(0.6, 1.0, 0.02)};
  const auto c = combine_estimates(rs, 3);
  EXPECT_DOUBLE_EQ(c.g, 0.5);
  EXPECT_DOUBLE_EQ(*c.var, 0.25 * 0.02 + 0.25 * 0.02);
}

TEST(CombineEstimates, MassWeighted) {
  const std::vector<IterationRecord> rs{record(0.4, 1.0, 0.04), record(0.8, 3.0, 0.08)};
  const auto c = combine_estimates(rs, 3);
  EXPECT_DOUBLE_EQ(c.g, 0.7);
  EXPECT_DOUBLE_EQ(*c.var, 0.0625 * 0.04 + 0.5625 * 0.08);
}

TEST(CombineEstimates, OnlyTheWindowCounts) {
  const std::vector<IterationRecord> rs{record(0.0, 100.0, 1.0), record(0.4, 1.0, 0.04), record(0.8, 3.0, 0.08)};
  EXPECT_DOUBLE_EQ(combine_estimates(rs, 2).g, 0.7);
  EXPECT_DOUBLE_EQ(combine_estimates(rs, 1).g, 0.8);
}

TEST(CombineEstimates, NoVarianceAnywhereIsUnavailable) {
  const std::vector<IterationRecord> rs{record(0.4, 1.0, std::nullopt), record(0.6, 1.0, std::nullopt)};
  EXPECT_FALSE(combine_estimates(rs, 3).var.has_value());
}

TEST(CombineEstimates, ZeroCovarianceNeverExceedsWorstCase) {
  Rng rng(4);
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<IterationRecord> rs;
    const std::size_t k = 1 + uniform_index(rng, 6);
    for (std::size_t i = 0; i < k; ++i) {
      rs.push_back(record(unit_uniform(rng), 0.01 + 10 * unit_uniform(rng), 0.05 * unit_uniform(rng)));
    }
    const std::size_t window = 1 + uniform_index(rng, 4);
    const auto zero_cov = *combine_estimates(rs, window).var;
    const auto worst = *worst_case_combined_variance(rs, window);
    EXPECT_LE(zero_cov, worst + 1e-15);
  }
}
