#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lowshot {

using Label = std::uint8_t;

struct PoolItem {
  std::string id;
  double score = 0.0;
  Label predicted = 0;
  std::optional<Label> label;  // hidden ground truth, oracle mode only
  std::optional<std::string> asset_url;
};

// The unlabeled evaluation pool. Items keep their input order; that order is
// the tie-breaker everywhere a ranking is needed.
class ScoredPool {
 public:
  ScoredPool() = default;
  explicit ScoredPool(std::vector<PoolItem> items);

  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  const PoolItem& operator[](std::size_t i) const { return items_[i]; }
  std::span<const PoolItem> items() const noexcept { return items_; }

  std::span<const double> scores() const noexcept { return scores_; }
  std::span<const Label> predicted() const noexcept { return predicted_; }

  // Scores min-max rescaled to [0,1]; all zeros when the range is empty.
  std::span<const double> unit_scores() const noexcept { return unit_scores_; }

  bool has_oracle() const noexcept { return has_oracle_; }
  // Throws MissingLabel when any item lacks a hidden label.
  std::vector<Label> oracle_labels() const;

  std::size_t predicted_positive_count() const noexcept { return n_pred_pos_; }

  // Copy of the pool with every hidden label removed.
  ScoredPool without_labels() const;

 private:
  std::vector<PoolItem> items_;
  std::vector<double> scores_;
  std::vector<double> unit_scores_;
  std::vector<Label> predicted_;
  std::size_t n_pred_pos_ = 0;
  bool has_oracle_ = false;
};

struct Alpha {
  double value = 0.5;

  Alpha() = default;
  // Throws InvalidArgument outside [0,1].
  explicit Alpha(double v);

  static Alpha f1() { return Alpha(0.5); }
  static Alpha precision() { return Alpha(1.0); }
  static Alpha recall() { return Alpha(0.0); }
};

}  // namespace lowshot
