#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lowshot/calibration.hpp"
#include "lowshot/estimator.hpp"
#include "lowshot/pool.hpp"
#include "lowshot/rng.hpp"
#include "lowshot/sampling.hpp"

namespace lowshot {

struct AcisConfig {
  Alpha alpha = Alpha::f1();
  std::size_t budget = 100;
  std::size_t first_batch = 10;
  double batch_growth = 2.0;
  double eps = 1e-4;
  double g0 = 0.5;
  std::size_t blend_iters = 3;
  std::size_t avg_window = 3;
  std::size_t topk_multiplier = 3;
  bool restrict_domain = true;
  std::uint64_t seed = 0;

  // Throws InvalidArgument on out-of-range fields.
  void validate() const;
};

// Items awaiting labels for the current iteration.
struct PendingBatch {
  std::size_t iteration = 0;
  std::vector<std::size_t> draw_indices;  // i.i.d. draws, with multiplicity
  std::vector<double> draw_ratios;        // p(x)/q(x) for each draw
  std::vector<std::size_t> fresh;         // distinct unlabeled items, first-draw order
  std::vector<LabeledDraw> reused;        // previously labeled items at |L|/|X|
  std::vector<std::string> warnings;
};

// Everything needed to resume an engine exactly where it stopped.
struct AcisEngineState {
  LabelStore labels;
  std::vector<IterationRecord> records;
  std::optional<PendingBatch> pending;
  std::string rng_state;
  bool complete = false;
};

// Active calibration + importance sampling as a resumable state machine:
// each iteration proposes a batch, waits for its labels, then estimates,
// recalibrates and proposes the next batch. acis_run() and the labeling
// service both drive this class, so they produce identical records.
class AcisEngine {
 public:
  AcisEngine(std::shared_ptr<const ScoredPool> pool, AcisConfig config);
  AcisEngine(std::shared_ptr<const ScoredPool> pool, AcisConfig config, AcisEngineState state);

  bool complete() const noexcept { return complete_; }
  const AcisConfig& config() const noexcept { return config_; }
  const ScoredPool& pool() const noexcept { return *pool_; }
  const LabelStore& labels() const noexcept { return labels_; }
  const std::vector<IterationRecord>& records() const noexcept { return records_; }

  // Throws SessionComplete once the budget is spent.
  const PendingBatch& pending() const;
  // Sampling plan behind the pending batch; empty for a restored engine until
  // the next batch is proposed.
  const std::optional<SamplingPlan>& current_plan() const noexcept { return plan_; }

  bool batch_ready() const;
  // Throws UnknownItem, AlreadyLabeled, InvalidLabel.
  void submit_label(std::size_t index, Label label);
  // Finishes the iteration once every pending item is labeled.
  const IterationRecord& advance();

  std::optional<CombinedEstimate> estimate() const;
  AcisEngineState state() const;

 private:
  void propose_batch();
  std::size_t nominal_batch(std::size_t iteration) const;

  std::shared_ptr<const ScoredPool> pool_;
  AcisConfig config_;
  Calibrator prior_;
  LabelStore labels_;
  std::vector<IterationRecord> records_;
  std::optional<PendingBatch> pending_;
  std::optional<SamplingPlan> plan_;
  Rng rng_;
  bool complete_ = false;
};

struct AcisResult {
  std::vector<IterationRecord> records;
  std::vector<SamplingPlan> plans;
  double g_final = 0.0;
  std::optional<double> var_final;
  double g_last = 0.0;  // last-iteration estimate alone
};

using LabelSource = std::function<Label(std::size_t index)>;

AcisResult acis_run(const ScoredPool& pool, const LabelSource& label_source, const AcisConfig& config);

// Re-scores labels curated for one model against another model's predictions
// on the same items, keeping the original proposal densities.
// Throws IdMismatch when the pools do not list the same ids in the same order.
CombinedEstimate reuse_validation_set(const ScoredPool& original, std::span<const IterationRecord> records,
                                      const ScoredPool& other, Alpha alpha, std::size_t window,
                                      double g0 = 0.5);

}  // namespace lowshot
