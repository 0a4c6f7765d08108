#pragma once

#include <string>
#include <vector>

#include "lowshot/pool.hpp"

namespace lowshot::testing {

inline ScoredPool make_pool(const std::vector<double>& scores, const std::vector<int>& predicted,
                            const std::vector<int>& labels = {}) {
  std::vector<PoolItem> items;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    PoolItem it;
    it.id = "x" + std::to_string(i);
    it.score = scores[i];
    it.predicted = static_cast<Label>(predicted[i]);
    if (!labels.empty()) it.label = static_cast<Label>(labels[i]);
    items.push_back(std::move(it));
  }
  return ScoredPool(std::move(items));
}

inline std::vector<Label> to_labels(const std::vector<int>& v) { return std::vector<Label>(v.begin(), v.end()); }

}  // namespace lowshot::testing
