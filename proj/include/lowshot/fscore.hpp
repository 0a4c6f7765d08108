#pragma once

#include <span>

#include "lowshot/pool.hpp"

namespace lowshot {

// Confusion counts; real-valued so expected (soft) counts share the type.
struct Confusion {
  double tp = 0.0;
  double fp = 0.0;
  double fn = 0.0;
};

// tp / (alpha (tp + fp) + (1 - alpha)(tp + fn)).
// Throws DegenerateMetric when the denominator vanishes.
double fscore_from_counts(const Confusion& counts, Alpha alpha);

Confusion count_confusion(std::span<const Label> truth, std::span<const Label> predicted);

// Throws InvalidArgument on length mismatch and DegenerateMetric when there
// are neither predicted nor true positives.
double exact_fscore(std::span<const Label> truth, std::span<const Label> predicted, Alpha alpha);

}  // namespace lowshot
