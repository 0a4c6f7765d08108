#include "lowshot/acis.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "lowshot/errors.hpp"

namespace lowshot {

namespace {

constexpr std::size_t kMaxDrawsPerIteration = 5'000'000;

Calibrator learned_calibrator(const ScoredPool& pool, const LabelStore& labels, double eps) {
  const auto scores = pool.unit_scores();
  std::vector<ScoreTarget> pairs;
  pairs.reserve(labels.count());
  for (const auto& [j, y] : labels.entries()) pairs.push_back(ScoreTarget{scores[j], double(y)});
  return clamp_rescale(fit_isotonic(pairs), eps);
}

}  // namespace

void AcisConfig::validate() const {
  auto fail = [](const char* what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (budget == 0) fail("budget must be positive");
  if (first_batch == 0) fail("first_batch must be at least 1");
  if (!(batch_growth >= 1.0)) fail("batch_growth must be at least 1");
  if (!(eps > 0.0 && eps < 0.5)) fail("eps must lie in (0, 0.5)");
  if (!(g0 >= 0.0 && g0 <= 1.0)) fail("g0 must lie in [0,1]");
  if (avg_window == 0) fail("avg_window must be at least 1");
  if (topk_multiplier == 0) fail("topk_multiplier must be at least 1");
}

AcisEngine::AcisEngine(std::shared_ptr<const ScoredPool> pool, AcisConfig config)
    : pool_(std::move(pool)), config_(config), rng_(config.seed) {
  config_.validate();
  if (!pool_ || pool_->empty()) throw Error(ErrorCode::EmptyInput, "ACIS needs a nonempty pool");
  if (config_.budget > pool_->size()) throw Error(ErrorCode::ValidationError, "budget exceeds pool size");
  prior_ = fit_calibration_prior(*pool_, config_.eps);
  labels_ = LabelStore(pool_->size());
  propose_batch();
}

AcisEngine::AcisEngine(std::shared_ptr<const ScoredPool> pool, AcisConfig config, AcisEngineState state)
    : pool_(std::move(pool)),
      config_(config),
      labels_(std::move(state.labels)),
      records_(std::move(state.records)),
      pending_(std::move(state.pending)),
      rng_(deserialize_rng(state.rng_state)),
      complete_(state.complete) {
  config_.validate();
  if (!pool_ || pool_->empty()) throw Error(ErrorCode::EmptyInput, "ACIS needs a nonempty pool");
  if (labels_.pool_size() != pool_->size()) throw Error(ErrorCode::SchemaMismatch, "label store does not match pool");
  if (!complete_ && !pending_) throw Error(ErrorCode::SchemaMismatch, "running engine state without a pending batch");
  prior_ = fit_calibration_prior(*pool_, config_.eps);
}

std::size_t AcisEngine::nominal_batch(std::size_t iteration) const {
  const double b = static_cast<double>(config_.first_batch) *
                   std::pow(config_.batch_growth, static_cast<double>(iteration - 1));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(b)));
}

void AcisEngine::propose_batch() {
  const ScoredPool& pool = *pool_;
  const std::size_t iteration = records_.size() + 1;
  PendingBatch batch;
  batch.iteration = iteration;

  // Calibration: c0 blended with the latest learned fit; beta reaches zero
  // after blend_iters learned calibrators.
  const std::size_t learned_index = iteration - 1;
  double beta = 0.0;
  if (config_.blend_iters > 0) {
    beta = std::max(0.0, 1.0 - static_cast<double>(learned_index) / static_cast<double>(config_.blend_iters));
  }
  const Calibrator learned = labels_.count() == 0 ? prior_ : learned_calibrator(pool, labels_, config_.eps);
  const Calibrator calibrator = blend_calibrators(prior_, learned, beta);

  const std::vector<std::size_t> domain = config_.restrict_domain
                                              ? restrict_domain(pool, iteration - 1, config_.topk_multiplier)
                                              : full_domain(pool.size());
  const auto unit = pool.unit_scores();
  std::vector<double> probs(pool.size(), 0.0);
  for (const std::size_t j : domain) probs[j] = calibrator(unit[j]);

  const double g_prev = records_.empty() ? config_.g0 : records_.back().g_hat;
  SamplingPlan plan;
  try {
    plan = importance_distribution(probs, pool.predicted(), g_prev, config_.alpha, domain, pool.size());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AllZeroMass) throw;
    plan = uniform_plan(domain, pool.size());
    plan.uniform_fallback = true;
    batch.warnings.emplace_back("AllZeroMass: sampled uniformly over the domain");
  }

  std::size_t want = std::min(nominal_batch(iteration), config_.budget - labels_.count());
  std::size_t available = 0;
  for (const std::size_t j : plan.domain) {
    if (plan.mass[j] > 0.0 && !labels_.has(j)) ++available;
  }
  if (available < want) {
    batch.warnings.emplace_back("BudgetExhaustedEarly: domain holds only " + std::to_string(available) +
                                " unlabeled items");
    want = available;
  }

  batch.reused = reuse_draws(labels_, pool, config_.alpha);

  if (want > 0) {
    const PlanSampler sampler(plan);
    std::unordered_set<std::size_t> fresh_set;
    while (batch.fresh.size() < want) {
      if (batch.draw_indices.size() >= kMaxDrawsPerIteration) {
        batch.warnings.emplace_back("DrawLimit: stopped after " + std::to_string(kMaxDrawsPerIteration) +
                                    " draws");
        break;
      }
      const std::size_t j = sampler(rng_);
      batch.draw_indices.push_back(j);
      batch.draw_ratios.push_back(plan.p_x / plan.mass[j]);
      if (!labels_.has(j) && fresh_set.insert(j).second) batch.fresh.push_back(j);
    }
  }

  plan_ = std::move(plan);
  pending_ = std::move(batch);
}

const PendingBatch& AcisEngine::pending() const {
  if (complete_ || !pending_) throw Error(ErrorCode::SessionComplete, "labeling budget is spent");
  return *pending_;
}

bool AcisEngine::batch_ready() const {
  const auto& batch = pending();
  return std::all_of(batch.fresh.begin(), batch.fresh.end(), [this](std::size_t j) { return labels_.has(j); });
}

void AcisEngine::submit_label(std::size_t index, Label label) {
  const auto& batch = pending();
  if (std::find(batch.fresh.begin(), batch.fresh.end(), index) == batch.fresh.end()) {
    throw Error(ErrorCode::UnknownItem, "item is not in the pending batch");
  }
  if (labels_.has(index)) throw Error(ErrorCode::AlreadyLabeled, "item is already labeled");
  if (label > 1) throw Error(ErrorCode::InvalidLabel, "label must be 0 or 1");
  labels_.set(index, label);
}

const IterationRecord& AcisEngine::advance() {
  const auto& batch = pending();
  if (!batch_ready()) throw Error(ErrorCode::ValidationError, "pending batch is not fully labeled");

  const ScoredPool& pool = *pool_;
  const auto predicted = pool.predicted();
  const double a = config_.alpha.value;

  IterationRecord record;
  record.iteration = batch.iteration;
  record.batch_size = batch.fresh.size();
  record.warnings = batch.warnings;
  record.draws.reserve(batch.draw_indices.size() + batch.reused.size());
  for (std::size_t k = 0; k < batch.draw_indices.size(); ++k) {
    const std::size_t j = batch.draw_indices[k];
    const Label y = *labels_.get(j);
    LabeledDraw d;
    d.index = j;
    d.true_label = y;
    d.density_ratio = batch.draw_ratios[k];
    d.weight = d.density_ratio * fscore_weight_factor(y, predicted[j], a);
    d.loss_complement = predicted[j] == y ? 1 : 0;
    d.provenance = Provenance::Fresh;
    record.draws.push_back(d);
  }
  record.draws.insert(record.draws.end(), batch.reused.begin(), batch.reused.end());

  for (const auto& d : record.draws) record.weight_mass += d.weight;

  const double g_prev = records_.empty() ? config_.g0 : records_.back().g_hat;
  try {
    record.g_hat = is_fscore(record.draws);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ZeroWeightMass) throw;
    record.g_hat = g_prev;
    record.warnings.emplace_back("ZeroWeightMass: kept the previous estimate");
  }
  if (record.weight_mass > 0.0) {
    try {
      const auto v = variance_estimate(record.draws, record.g_hat);
      record.asymptotic_var = v.asymptotic_var;
      record.estimate_var = v.estimate_var;
    } catch (const Error& e) {
      record.warnings.emplace_back(std::string(error_code_name(e.code())) + ": variance unavailable");
    }
  }

  records_.push_back(std::move(record));
  pending_.reset();
  plan_.reset();

  const bool domain_exhausted =
      records_.back().batch_size == 0 &&
      (!config_.restrict_domain ||
       restrict_domain(pool, records_.back().iteration - 1, config_.topk_multiplier).size() == pool.size());
  if (labels_.count() >= config_.budget || domain_exhausted) {
    complete_ = true;
  } else {
    propose_batch();
  }
  return records_.back();
}

std::optional<CombinedEstimate> AcisEngine::estimate() const {
  if (records_.empty()) return std::nullopt;
  return combine_estimates(records_, config_.avg_window);
}

AcisEngineState AcisEngine::state() const {
  AcisEngineState s;
  s.labels = labels_;
  s.records = records_;
  s.pending = pending_;
  s.rng_state = serialize_rng(rng_);
  s.complete = complete_;
  return s;
}

AcisResult acis_run(const ScoredPool& pool, const LabelSource& label_source, const AcisConfig& config) {
  auto shared = std::make_shared<const ScoredPool>(pool);
  AcisEngine engine(shared, config);
  AcisResult result;
  while (!engine.complete()) {
    result.plans.push_back(*engine.current_plan());
    const auto fresh = engine.pending().fresh;
    for (const std::size_t j : fresh) engine.submit_label(j, label_source(j));
    engine.advance();
  }
  result.records = engine.records();
  const auto combined = combine_estimates(result.records, config.avg_window);
  result.g_final = combined.g;
  result.var_final = combined.var;
  result.g_last = result.records.back().g_hat;
  return result;
}

CombinedEstimate reuse_validation_set(const ScoredPool& original, std::span<const IterationRecord> records,
                                      const ScoredPool& other, Alpha alpha, std::size_t window, double g0) {
  if (original.size() != other.size()) throw Error(ErrorCode::IdMismatch, "pools differ in size");
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (original[i].id != other[i].id) throw Error(ErrorCode::IdMismatch, "pools list different item ids");
  }
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no records to reuse");

  const auto predicted = other.predicted();
  std::vector<IterationRecord> rescored;
  rescored.reserve(records.size());
  double g_prev = g0;
  for (const auto& r : records) {
    IterationRecord out;
    out.iteration = r.iteration;
    out.batch_size = r.batch_size;
    out.draws = r.draws;
    for (auto& d : out.draws) {
      d.weight = d.density_ratio * fscore_weight_factor(d.true_label, predicted[d.index], alpha.value);
      d.loss_complement = predicted[d.index] == d.true_label ? 1 : 0;
      out.weight_mass += d.weight;
    }
    try {
      out.g_hat = is_fscore(out.draws);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroWeightMass) throw;
      out.g_hat = g_prev;
    }
    if (out.weight_mass > 0.0) {
      try {
        const auto v = variance_estimate(out.draws, out.g_hat);
        out.asymptotic_var = v.asymptotic_var;
        out.estimate_var = v.estimate_var;
      } catch (const Error&) {
      }
    }
    g_prev = out.g_hat;
    rescored.push_back(std::move(out));
  }
  return combine_estimates(rescored, window);
}

}  // namespace lowshot
