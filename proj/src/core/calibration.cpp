#include "lowshot/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lowshot/errors.hpp"

namespace lowshot {

namespace {

struct Block {
  double sum = 0.0;
  double weight = 0.0;
  std::size_t first = 0;  // index of first unique score in block
  std::size_t last = 0;   // one past the last

  double mean() const { return sum / weight; }
};

double stable_log1p_exp(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// p = 1 / (1 + exp(z)) without overflow.
double sigmoid_neg(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

}  // namespace

Calibrator Calibrator::step(std::vector<Breakpoint> breakpoints) {
  Calibrator c;
  c.shape_ = Shape::Step;
  c.kind_ = CalibratorKind::Isotonic;
  c.breakpoints_ = std::move(breakpoints);
  return c;
}

Calibrator Calibrator::sigmoid(double a, double b) {
  Calibrator c;
  c.shape_ = Shape::Sigmoid;
  c.kind_ = CalibratorKind::Platt;
  c.a_ = a;
  c.b_ = b;
  return c;
}

Calibrator Calibrator::constant(double value, CalibratorKind kind) {
  Calibrator c;
  c.shape_ = Shape::Constant;
  c.kind_ = kind;
  c.constant_ = value;
  return c;
}

double Calibrator::raw(double score) const {
  switch (shape_) {
    case Shape::Constant:
      return constant_;
    case Shape::Sigmoid:
      return sigmoid_neg(a_ * score + b_);
    case Shape::Step: {
      // last breakpoint with breakpoint.score <= score
      auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), score,
                                 [](double s, const Breakpoint& b) { return s < b.score; });
      if (it == breakpoints_.begin()) return breakpoints_.front().value;
      return std::prev(it)->value;
    }
    case Shape::Blend:
      break;
  }
  return 0.0;
}

double Calibrator::operator()(double score) const {
  if (shape_ == Shape::Blend) {
    return beta_ * (*prior_)(score) + (1.0 - beta_) * (*learned_)(score);
  }
  return eps_ + (1.0 - 2.0 * eps_) * raw(score);
}

std::vector<double> Calibrator::evaluate(std::span<const double> scores) const {
  std::vector<double> out(scores.size());
  std::transform(scores.begin(), scores.end(), out.begin(), [this](double s) { return (*this)(s); });
  return out;
}

Calibrator fit_isotonic(std::span<const ScoreTarget> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "isotonic fit needs at least one pair");

  std::vector<ScoreTarget> sorted(pairs.begin(), pairs.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoreTarget& a, const ScoreTarget& b) { return a.score < b.score; });

  // Pool ties: one weighted observation per unique score.
  std::vector<double> unique_scores;
  std::vector<Block> blocks;
  for (const auto& p : sorted) {
    if (!unique_scores.empty() && unique_scores.back() == p.score) {
      blocks.back().sum += p.target;
      blocks.back().weight += 1.0;
      continue;
    }
    const std::size_t k = unique_scores.size();
    unique_scores.push_back(p.score);
    blocks.push_back(Block{p.target, 1.0, k, k + 1});
  }

  // Pool adjacent violators with a stack of merged blocks.
  std::vector<Block> stack;
  stack.reserve(blocks.size());
  for (const auto& b : blocks) {
    stack.push_back(b);
    while (stack.size() > 1 && stack[stack.size() - 2].mean() > stack.back().mean()) {
      Block top = stack.back();
      stack.pop_back();
      Block& prev = stack.back();
      prev.sum += top.sum;
      prev.weight += top.weight;
      prev.last = top.last;
    }
  }

  std::vector<Breakpoint> breakpoints(unique_scores.size());
  for (const auto& b : stack) {
    const double v = b.mean();
    for (std::size_t k = b.first; k < b.last; ++k) breakpoints[k] = Breakpoint{unique_scores[k], v};
  }
  return Calibrator::step(std::move(breakpoints));
}

Calibrator fit_platt(std::span<const ScoreTarget> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "Platt fit needs at least one pair");

  const double first = pairs.front().target;
  const bool all_same = std::all_of(pairs.begin(), pairs.end(),
                                    [first](const ScoreTarget& p) { return p.target == first; });
  if (all_same) {
    Calibrator c = Calibrator::constant(first, CalibratorKind::Platt);
    c.degenerate_ = true;
    return c;
  }

  const double n_pos = std::accumulate(pairs.begin(), pairs.end(), 0.0,
                                       [](double acc, const ScoreTarget& p) { return acc + p.target; });
  const double n_neg = static_cast<double>(pairs.size()) - n_pos;

  auto nll = [&](double a, double b) {
    double f = 0.0;
    for (const auto& p : pairs) {
      const double z = a * p.score + b;
      f += stable_log1p_exp(z) - (1.0 - p.target) * z;
    }
    return f;
  };

  double a = 0.0;
  double b = std::log((n_neg + 1.0) / (n_pos + 1.0));
  double f = nll(a, b);
  for (int iter = 0; iter < 100; ++iter) {
    double ga = 0.0, gb = 0.0, haa = 1e-12, hab = 0.0, hbb = 1e-12;
    for (const auto& p : pairs) {
      const double prob = sigmoid_neg(a * p.score + b);
      const double d = p.target - prob;  // d nll / dz
      const double h = prob * (1.0 - prob);
      ga += d * p.score;
      gb += d;
      haa += h * p.score * p.score;
      hab += h * p.score;
      hbb += h;
    }
    if (std::hypot(ga, gb) < 1e-8) break;

    const double det = haa * hbb - hab * hab;
    const double da = -(hbb * ga - hab * gb) / det;
    const double db = -(-hab * ga + haa * gb) / det;

    // Backtrack until the step decreases the objective (Armijo condition).
    double step = 1.0;
    bool moved = false;
    while (step >= 1e-10) {
      const double na = a + step * da;
      const double nb = b + step * db;
      const double nf = nll(na, nb);
      if (nf < f + 1e-4 * step * (ga * da + gb * db)) {
        a = na;
        b = nb;
        f = nf;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return Calibrator::sigmoid(a, b);
}

Calibrator clamp_rescale(const Calibrator& c, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw Error(ErrorCode::InvalidArgument, "eps must lie in (0, 0.5)");
  if (c.shape_ == Calibrator::Shape::Blend) {
    throw Error(ErrorCode::InvalidArgument, "blends inherit eps from their parents");
  }
  Calibrator out = c;
  out.eps_ = eps;
  return out;
}

Calibrator fit_calibration_prior(const ScoredPool& pool, double eps) {
  if (pool.empty()) throw Error(ErrorCode::EmptyInput, "calibration prior needs a nonempty pool");
  const auto scores = pool.unit_scores();
  const auto predicted = pool.predicted();
  std::vector<ScoreTarget> pairs(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pairs[i] = ScoreTarget{scores[i], double(predicted[i])};
  return clamp_rescale(fit_isotonic(pairs), eps);
}

Calibrator blend_calibrators(const Calibrator& c0, const Calibrator& ci, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw Error(ErrorCode::InvalidArgument, "beta must lie in [0,1]");
  if (c0.eps() != ci.eps()) throw Error(ErrorCode::InvalidArgument, "blended calibrators must share eps");
  Calibrator out;
  out.shape_ = Calibrator::Shape::Blend;
  out.kind_ = CalibratorKind::PriorBlend;
  out.eps_ = c0.eps();
  out.beta_ = beta;
  out.prior_ = std::make_shared<const Calibrator>(c0);
  out.learned_ = std::make_shared<const Calibrator>(ci);
  return out;
}

}  // namespace lowshot
