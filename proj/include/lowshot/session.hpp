#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lowshot/acis.hpp"
#include "lowshot/pool.hpp"

namespace lowshot {

// ReadyToAdvance only exists inside a request: a completed batch is advanced
// before the request returns.
enum class SessionState { AwaitingLabels, ReadyToAdvance, Complete };

std::string session_state_name(SessionState s);
SessionState parse_session_state(const std::string& name);

struct BatchItem {
  std::string id;
  double score = 0.0;
  Label predicted = 0;
  std::optional<std::string> asset_url;
  bool labeled = false;
};

struct SessionProgress {
  std::size_t labels_used = 0;
  std::size_t budget = 0;
  std::size_t iterations = 0;  // completed
  SessionState state = SessionState::AwaitingLabels;
  std::optional<double> g;
  std::optional<double> var;
};

struct SessionBatch {
  std::size_t iteration = 0;
  std::vector<BatchItem> items;
  SessionProgress progress;
};

struct IterationSummary {
  std::size_t iteration = 0;
  double g = 0.0;
  std::optional<double> var;
  std::size_t batch_size = 0;
};

struct SessionEstimate {
  double g_combined = 0.0;
  std::optional<double> var_combined;
  std::vector<IterationSummary> per_iteration;
};

class Session {
 public:
  // Oracle labels in the pool are dropped. Throws ValidationError when the
  // config is out of range or the budget exceeds the pool.
  static Session create(std::string id, ScoredPool pool, AcisConfig config, std::string now);

  const std::string& id() const noexcept { return id_; }
  const std::string& created_at() const noexcept { return created_at_; }
  const std::string& updated_at() const noexcept { return updated_at_; }
  const AcisEngine& engine() const noexcept { return *engine_; }
  SessionState state() const;

  SessionProgress progress() const;
  // Same result until the batch is fully labeled. Throws SessionComplete.
  SessionBatch batch() const;
  // All-or-nothing: any rejected entry leaves the session unchanged.
  // Throws UnknownItem, AlreadyLabeled, InvalidLabel, SessionComplete.
  SessionProgress submit_labels(const std::vector<std::pair<std::string, int>>& labels, std::string now);
  // Throws NoEstimateYet.
  SessionEstimate estimate() const;

  // Fresh id, same state; used when an imported id is taken.
  Session with_id(std::string id) const;

  nlohmann::json to_json() const;
  // Throws SchemaMismatch.
  static Session from_json(const nlohmann::json& j);

 private:
  Session(std::string id, std::shared_ptr<const ScoredPool> pool, std::unique_ptr<AcisEngine> engine,
          std::string created_at, std::string updated_at);
  void index_ids();

  std::string id_;
  std::shared_ptr<const ScoredPool> pool_;
  std::shared_ptr<const AcisEngine> engine_;
  std::unordered_map<std::string, std::size_t> index_of_;
  std::string created_at_;
  std::string updated_at_;
};

inline constexpr int kSessionSchemaVersion = 1;

nlohmann::json acis_config_to_json(const AcisConfig& c);
// Missing fields keep their defaults. Throws ValidationError.
AcisConfig acis_config_from_json(const nlohmann::json& j);

nlohmann::json records_to_json(const std::vector<IterationRecord>& records);
std::vector<IterationRecord> records_from_json(const nlohmann::json& j);

}  // namespace lowshot
