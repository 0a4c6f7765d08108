#include "lowshot/fscore.hpp"

#include "lowshot/errors.hpp"

namespace lowshot {

double fscore_from_counts(const Confusion& c, Alpha alpha) {
  const double a = alpha.value;
  const double denom = a * (c.tp + c.fp) + (1.0 - a) * (c.tp + c.fn);
  if (!(denom > 0.0)) {
    // alpha = 1 with no predicted positives (or alpha = 0 with no true
    // positives) also lands here.
    throw Error(ErrorCode::DegenerateMetric, "F-score denominator is zero");
  }
  return c.tp / denom;
}

Confusion count_confusion(std::span<const Label> truth, std::span<const Label> predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::InvalidArgument, "label vectors differ in length");
  }
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool y = truth[i] != 0;
    const bool yhat = predicted[i] != 0;
    if (y && yhat) c.tp += 1.0;
    else if (!y && yhat) c.fp += 1.0;
    else if (y && !yhat) c.fn += 1.0;
  }
  return c;
}

double exact_fscore(std::span<const Label> truth, std::span<const Label> predicted, Alpha alpha) {
  return fscore_from_counts(count_confusion(truth, predicted), alpha);
}

}  // namespace lowshot
