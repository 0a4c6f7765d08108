#include "lowshot/session.hpp"

#include <algorithm>
#include <unordered_set>

#include "lowshot/errors.hpp"

namespace lowshot {

std::string session_state_name(SessionState s) {
  switch (s) {
    case SessionState::AwaitingLabels: return "awaiting_labels";
    case SessionState::ReadyToAdvance: return "ready_to_advance";
    case SessionState::Complete: return "complete";
  }
  return "complete";
}

SessionState parse_session_state(const std::string& name) {
  if (name == "awaiting_labels") return SessionState::AwaitingLabels;
  if (name == "ready_to_advance") return SessionState::ReadyToAdvance;
  if (name == "complete") return SessionState::Complete;
  throw Error(ErrorCode::SchemaMismatch, "unknown session state '" + name + "'");
}

Session::Session(std::string id, std::shared_ptr<const ScoredPool> pool, std::unique_ptr<AcisEngine> engine,
                 std::string created_at, std::string updated_at)
    : id_(std::move(id)),
      pool_(std::move(pool)),
      engine_(std::move(engine)),
      created_at_(std::move(created_at)),
      updated_at_(std::move(updated_at)) {
  index_ids();
}

void Session::index_ids() {
  index_of_.clear();
  index_of_.reserve(pool_->size());
  for (std::size_t i = 0; i < pool_->size(); ++i) index_of_.emplace((*pool_)[i].id, i);
}

Session Session::create(std::string id, ScoredPool pool, AcisConfig config, std::string now) {
  try {
    config.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ValidationError, e.what());
  }
  if (pool.empty()) throw Error(ErrorCode::ValidationError, "pool has no items");
  if (config.budget > pool.size()) throw Error(ErrorCode::ValidationError, "budget exceeds pool size");
  auto shared = std::make_shared<const ScoredPool>(pool.without_labels());
  auto engine = std::make_unique<AcisEngine>(shared, config);
  // An empty first batch (nothing sampleable) is advanced right away.
  while (!engine->complete() && engine->batch_ready()) engine->advance();
  return Session(std::move(id), std::move(shared), std::move(engine), now, now);
}

SessionState Session::state() const {
  if (engine_->complete()) return SessionState::Complete;
  return engine_->batch_ready() ? SessionState::ReadyToAdvance : SessionState::AwaitingLabels;
}

SessionProgress Session::progress() const {
  SessionProgress p;
  p.labels_used = engine_->labels().count();
  p.budget = engine_->config().budget;
  p.iterations = engine_->records().size();
  p.state = state();
  if (const auto est = engine_->estimate()) {
    p.g = est->g;
    p.var = est->var;
  }
  return p;
}

SessionBatch Session::batch() const {
  const PendingBatch& pending = engine_->pending();
  SessionBatch out;
  out.iteration = pending.iteration;
  out.items.reserve(pending.fresh.size());
  for (const std::size_t j : pending.fresh) {
    const PoolItem& item = (*pool_)[j];
    out.items.push_back(BatchItem{item.id, item.score, item.predicted, item.asset_url, engine_->labels().has(j)});
  }
  out.progress = progress();
  return out;
}

SessionProgress Session::submit_labels(const std::vector<std::pair<std::string, int>>& labels, std::string now) {
  const PendingBatch& pending = engine_->pending();
  const std::unordered_set<std::size_t> in_batch(pending.fresh.begin(), pending.fresh.end());

  std::vector<std::pair<std::size_t, Label>> resolved;
  std::unordered_set<std::size_t> seen;
  resolved.reserve(labels.size());
  for (const auto& [item_id, label] : labels) {
    const auto it = index_of_.find(item_id);
    if (it == index_of_.end() || !in_batch.count(it->second)) {
      throw Error(ErrorCode::UnknownItem, "item '" + item_id + "' is not in the pending batch");
    }
    if (engine_->labels().has(it->second) || !seen.insert(it->second).second) {
      throw Error(ErrorCode::AlreadyLabeled, "item '" + item_id + "' is already labeled");
    }
    if (label != 0 && label != 1) throw Error(ErrorCode::InvalidLabel, "label must be 0 or 1");
    resolved.emplace_back(it->second, static_cast<Label>(label));
  }

  auto next = std::make_unique<AcisEngine>(*engine_);
  for (const auto& [j, y] : resolved) next->submit_label(j, y);
  while (!next->complete() && next->batch_ready()) next->advance();

  engine_ = std::move(next);
  updated_at_ = std::move(now);
  return progress();
}

SessionEstimate Session::estimate() const {
  const auto& records = engine_->records();
  if (records.empty()) throw Error(ErrorCode::NoEstimateYet, "no iteration has completed yet");
  const CombinedEstimate c = *engine_->estimate();
  SessionEstimate out;
  out.g_combined = c.g;
  out.var_combined = c.var;
  for (const auto& r : records) out.per_iteration.push_back(IterationSummary{r.iteration, r.g_hat, r.estimate_var, r.batch_size});
  return out;
}

Session Session::with_id(std::string id) const {
  Session copy = *this;
  copy.id_ = std::move(id);
  return copy;
}

}  // namespace lowshot
