#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "lowshot/session.hpp"

namespace lowshot {

// One canonical-JSON file per session under a data directory. Sessions are
// loaded on first use, so a restarted service picks up where it stopped.
// Calls on different sessions run concurrently; calls on one session are
// serialized.
class SessionStore {
 public:
  // Throws StorageError when the directory cannot be created.
  explicit SessionStore(std::filesystem::path data_dir);

  std::string create(const ScoredPool& pool, const AcisConfig& config);
  // Keeps the stored id unless it is taken or unsafe as a file name.
  std::string import(const nlohmann::json& exported);

  // Read-only access. Throws NotFound.
  void read(const std::string& id, const std::function<void(const Session&)>& fn);
  // fn returns the replacement session; it is persisted before it becomes
  // visible. An exception from fn or from storage leaves the session as it was.
  void update(const std::string& id, const std::function<Session(const Session&)>& fn);

  const std::filesystem::path& data_dir() const noexcept { return dir_; }

 private:
  struct Slot {
    std::mutex mutex;
    std::unique_ptr<Session> session;
  };

  std::shared_ptr<Slot> slot(const std::string& id);
  std::string new_id();
  std::filesystem::path file_for(const std::string& id) const;
  void persist(const Session& s) const;
  void insert(Session s);

  std::filesystem::path dir_;
  std::mutex map_mutex_;
  std::unordered_map<std::string, std::shared_ptr<Slot>> slots_;
};

// Current UTC time as an ISO-8601 string with millisecond resolution.
std::string utc_timestamp();

// Safe session ids: 1-64 characters from [A-Za-z0-9_-].
bool valid_session_id(const std::string& id);

}  // namespace lowshot
