#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "lowshot/pool.hpp"

namespace lowshot {

struct BetaParams {
  double a = 1.0;
  double b = 1.0;
};

enum class WarpKind { Identity, Sharpen, Flatten };

// Monotone score distortion: sharpen(k) maps logit(s) -> k logit(s),
// flatten(k) maps logit(s) -> logit(s) / k.
struct Warp {
  WarpKind kind = WarpKind::Identity;
  double k = 1.0;

  double operator()(double s) const;
};

std::string warp_name(const Warp& w);
// "identity", "sharpen(2)", "flatten(1.5)". Throws InvalidArgument.
Warp parse_warp(const std::string& text);

struct SynthConfig {
  std::size_t pool_size = 20000;
  double prevalence = 0.005;
  BetaParams pos_scores{2.0, 3.0};
  BetaParams neg_scores{1.0, 25.0};
  Warp miscalibration{WarpKind::Sharpen, 2.0};
  double threshold = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthPool {
  ScoredPool pool;
  std::uint64_t seed_used = 0;   // seed after any regeneration
  std::size_t regenerations = 0;
};

// Bernoulli(prevalence) labels, class-conditional Beta scores, warp, then
// predicted = 1[warped score > threshold]. Reseeds (seed + 1, ...) until the
// pool has a positive and a predicted positive; throws RegenerationLimit
// after 100 reseeds.
SynthPool synth_generate(const SynthConfig& cfg);

// Same items and scores with predictions re-thresholded.
ScoredPool with_threshold(const ScoredPool& pool, double threshold);

}  // namespace lowshot
