#pragma once

#include <memory>
#include <span>
#include <vector>

#include "lowshot/pool.hpp"

namespace lowshot {

enum class CalibratorKind { Isotonic, Platt, PriorBlend };

struct Breakpoint {
  double score = 0.0;
  double value = 0.0;
};

struct ScoreTarget {
  double score = 0.0;
  double target = 0.0;
};

// Monotone map from score to an estimate of p(y=1 | score).
//
// Fits produce values in [0,1]; clamp_rescale() attaches an eps so that every
// evaluation lands in [eps, 1-eps]. A blend evaluates its two parents lazily
// at the query score.
class Calibrator {
 public:
  static Calibrator step(std::vector<Breakpoint> breakpoints);
  static Calibrator sigmoid(double a, double b);
  static Calibrator constant(double value, CalibratorKind kind);

  double operator()(double score) const;
  std::vector<double> evaluate(std::span<const double> scores) const;

  CalibratorKind kind() const noexcept { return kind_; }
  double eps() const noexcept { return eps_; }

  // Fitted step values before the eps rescale. Empty for sigmoid fits.
  std::span<const Breakpoint> breakpoints() const noexcept { return breakpoints_; }

  // Sigmoid parameters: value(s) = 1 / (1 + exp(a s + b)).
  double sigmoid_a() const noexcept { return a_; }
  double sigmoid_b() const noexcept { return b_; }

  // True when a Platt fit fell back to the mean target.
  bool degenerate() const noexcept { return degenerate_; }

 private:
  friend Calibrator clamp_rescale(const Calibrator& c, double eps);
  friend Calibrator blend_calibrators(const Calibrator& c0, const Calibrator& ci, double beta);
  friend Calibrator fit_platt(std::span<const ScoreTarget> pairs);

  enum class Shape { Step, Sigmoid, Constant, Blend };

  double raw(double score) const;

  Shape shape_ = Shape::Constant;
  CalibratorKind kind_ = CalibratorKind::Isotonic;
  double eps_ = 0.0;
  std::vector<Breakpoint> breakpoints_;
  double a_ = 0.0;
  double b_ = 0.0;
  double constant_ = 0.0;
  bool degenerate_ = false;
  double beta_ = 0.0;
  std::shared_ptr<const Calibrator> prior_;
  std::shared_ptr<const Calibrator> learned_;
};

// Pool-adjacent-violators least-squares monotone fit. Equal scores are pooled
// before fitting; queries take the value of the nearest breakpoint at or below
// them, with constant extrapolation at both ends. Throws EmptyInput.
Calibrator fit_isotonic(std::span<const ScoreTarget> pairs);

// Maximum-likelihood sigmoid fit by damped Newton iterations. Identical
// targets fall back to a constant equal to their mean. Throws EmptyInput.
Calibrator fit_platt(std::span<const ScoreTarget> pairs);

// value -> eps + (1 - 2 eps) value. Throws InvalidArgument unless eps in (0, 0.5).
Calibrator clamp_rescale(const Calibrator& c, double eps);

// Isotonic fit of unit scores against the model's own predicted labels,
// clamp-rescaled. Used before any true labels exist.
Calibrator fit_calibration_prior(const ScoredPool& pool, double eps);

// beta * c0(s) + (1 - beta) * ci(s). Both parents must share eps.
Calibrator blend_calibrators(const Calibrator& c0, const Calibrator& ci, double beta);

}  // namespace lowshot
