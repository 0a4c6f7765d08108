#include "lowshot/pool.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "lowshot/errors.hpp"

namespace lowshot {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateMetric: return "DegenerateMetric";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::AllZeroMass: return "AllZeroMass";
    case ErrorCode::ZeroWeightMass: return "ZeroWeightMass";
    case ErrorCode::InsufficientDraws: return "InsufficientDraws";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::MissingLabel: return "MissingLabel";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::RegenerationLimit: return "RegenerationLimit";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::StorageError: return "StorageError";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::SessionComplete: return "SessionComplete";
    case ErrorCode::UnknownItem: return "UnknownItem";
    case ErrorCode::AlreadyLabeled: return "AlreadyLabeled";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::NoEstimateYet: return "NoEstimateYet";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
  }
  return "Unknown";
}

ScoredPool::ScoredPool(std::vector<PoolItem> items) : items_(std::move(items)) {
  std::unordered_set<std::string> seen;
  seen.reserve(items_.size());
  scores_.reserve(items_.size());
  predicted_.reserve(items_.size());
  has_oracle_ = !items_.empty();
  for (const auto& item : items_) {
    if (!seen.insert(item.id).second) {
      throw Error(ErrorCode::ValidationError, "duplicate item id '" + item.id + "'");
    }
    if (!std::isfinite(item.score)) {
      throw Error(ErrorCode::ValidationError, "non-finite score for item '" + item.id + "'");
    }
    if (item.predicted > 1) {
      throw Error(ErrorCode::ValidationError, "predicted label must be 0 or 1 for item '" + item.id + "'");
    }
    if (item.label && *item.label > 1) {
      throw Error(ErrorCode::ValidationError, "label must be 0 or 1 for item '" + item.id + "'");
    }
    if (!item.label) has_oracle_ = false;
    scores_.push_back(item.score);
    predicted_.push_back(item.predicted);
    n_pred_pos_ += item.predicted;
  }

  unit_scores_.assign(items_.size(), 0.0);
  if (!items_.empty()) {
    const auto [lo, hi] = std::minmax_element(scores_.begin(), scores_.end());
    const double range = *hi - *lo;
    if (range > 0.0) {
      for (std::size_t i = 0; i < scores_.size(); ++i) {
        unit_scores_[i] = (scores_[i] - *lo) / range;
      }
    }
  }
}

std::vector<Label> ScoredPool::oracle_labels() const {
  std::vector<Label> out;
  out.reserve(items_.size());
  for (const auto& item : items_) {
    if (!item.label) throw Error(ErrorCode::MissingLabel, "item '" + item.id + "' has no label");
    out.push_back(*item.label);
  }
  return out;
}

ScoredPool ScoredPool::without_labels() const {
  std::vector<PoolItem> copy = items_;
  for (auto& item : copy) item.label.reset();
  return ScoredPool(std::move(copy));
}

Alpha::Alpha(double v) : value(v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0,1]");
  }
}

}  // namespace lowshot
