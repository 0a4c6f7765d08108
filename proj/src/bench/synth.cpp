#include "lowshot/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <regex>

#include "lowshot/errors.hpp"
#include "lowshot/rng.hpp"

namespace lowshot {

double Warp::operator()(double s) const {
  if (kind == WarpKind::Identity || s <= 0.0 || s >= 1.0) return s;
  const double logit = std::log(s) - std::log1p(-s);
  const double z = kind == WarpKind::Sharpen ? logit * k : logit / k;
  return 1.0 / (1.0 + std::exp(-z));
}

std::string warp_name(const Warp& w) {
  if (w.kind == WarpKind::Identity) return "identity";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s(%.17g)", w.kind == WarpKind::Sharpen ? "sharpen" : "flatten", w.k);
  return buf;
}

Warp parse_warp(const std::string& text) {
  if (text == "identity") return Warp{};
  static const std::regex pattern(R"(^\s*(sharpen|flatten)\s*\(\s*([0-9.eE+-]+)\s*\)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) throw Error(ErrorCode::InvalidArgument, "unknown warp '" + text + "'");
  Warp w;
  w.kind = m[1] == "sharpen" ? WarpKind::Sharpen : WarpKind::Flatten;
  w.k = std::stod(m[2]);
  if (!(w.k > 0.0)) throw Error(ErrorCode::InvalidArgument, "warp strength must be positive");
  return w;
}

void SynthConfig::validate() const {
  auto fail = [](const char* what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (pool_size == 0) fail("pool_size must be positive");
  if (!(prevalence > 0.0 && prevalence <= 1.0)) fail("prevalence must lie in (0,1]");
  if (!(pos_scores.a > 0.0 && pos_scores.b > 0.0 && neg_scores.a > 0.0 && neg_scores.b > 0.0)) {
    fail("Beta parameters must be positive");
  }
}

namespace {

double draw_beta(Rng& rng, const BetaParams& p) {
  std::gamma_distribution<double> ga(p.a, 1.0);
  std::gamma_distribution<double> gb(p.b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

ScoredPool generate_once(const SynthConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<PoolItem> items(cfg.pool_size);
  char id[32];
  for (std::size_t i = 0; i < cfg.pool_size; ++i) {
    const Label y = unit_uniform(rng) < cfg.prevalence ? 1 : 0;
    const double raw = draw_beta(rng, y ? cfg.pos_scores : cfg.neg_scores);
    const double s = cfg.miscalibration(raw);
    std::snprintf(id, sizeof id, "item-%07zu", i);
    items[i].id = id;
    items[i].score = s;
    items[i].predicted = s > cfg.threshold ? 1 : 0;
    items[i].label = y;
  }
  return ScoredPool(std::move(items));
}

}  // namespace

SynthPool synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  for (std::size_t attempt = 0; attempt <= 100; ++attempt) {
    const std::uint64_t seed = cfg.seed + attempt;
    ScoredPool pool = generate_once(cfg, seed);
    const auto labels = pool.oracle_labels();
    const bool any_pos = std::any_of(labels.begin(), labels.end(), [](Label y) { return y == 1; });
    if (any_pos && pool.predicted_positive_count() > 0) return SynthPool{std::move(pool), seed, attempt};
  }
  throw Error(ErrorCode::RegenerationLimit, "no usable pool after 100 reseeds");
}

ScoredPool with_threshold(const ScoredPool& pool, double threshold) {
  std::vector<PoolItem> items(pool.items().begin(), pool.items().end());
  for (auto& item : items) item.predicted = item.score > threshold ? 1 : 0;
  return ScoredPool(std::move(items));
}

}  // namespace lowshot
