#include "lowshot/session_store.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include "lowshot/errors.hpp"

namespace lowshot {

namespace fs = std::filesystem;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[80];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

bool valid_session_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (const char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
    if (!ok) return false;
  }
  return true;
}

SessionStore::SessionStore(fs::path data_dir) : dir_(std::move(data_dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) {
    throw Error(ErrorCode::StorageError, "cannot use data directory " + dir_.string());
  }
}

fs::path SessionStore::file_for(const std::string& id) const { return dir_ / (id + ".json"); }

std::string SessionStore::new_id() {
  static thread_local std::mt19937_64 gen{std::random_device{}()};
  char buf[17];
  for (;;) {
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(gen()));
    std::string id(buf);
    std::lock_guard lock(map_mutex_);
    if (!slots_.count(id) && !fs::exists(file_for(id))) return id;
  }
}

void SessionStore::persist(const Session& s) const {
  const fs::path target = file_for(s.id());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::StorageError, "cannot write " + tmp.string());
    out << s.to_json().dump();
    out.flush();
    if (!out) throw Error(ErrorCode::StorageError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::StorageError, "cannot replace " + target.string());
  }
}

void SessionStore::insert(Session s) {
  persist(s);
  auto slot = std::make_shared<Slot>();
  const std::string id = s.id();
  slot->session = std::make_unique<Session>(std::move(s));
  std::lock_guard lock(map_mutex_);
  slots_[id] = std::move(slot);
}

std::string SessionStore::create(const ScoredPool& pool, const AcisConfig& config) {
  const std::string id = new_id();
  insert(Session::create(id, pool, config, utc_timestamp()));
  return id;
}

std::string SessionStore::import(const nlohmann::json& exported) {
  Session s = Session::from_json(exported);
  bool taken = !valid_session_id(s.id());
  if (!taken) {
    std::lock_guard lock(map_mutex_);
    taken = slots_.count(s.id()) > 0 || fs::exists(file_for(s.id()));
  }
  if (taken) s = s.with_id(new_id());
  const std::string id = s.id();
  insert(std::move(s));
  return id;
}

std::shared_ptr<SessionStore::Slot> SessionStore::slot(const std::string& id) {
  if (!valid_session_id(id)) throw Error(ErrorCode::NotFound, "no session '" + id + "'");
  std::lock_guard lock(map_mutex_);
  if (const auto it = slots_.find(id); it != slots_.end()) return it->second;

  const fs::path path = file_for(id);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "no session '" + id + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::StorageError, "corrupt session file " + path.string());
  }
  auto s = std::make_shared<Slot>();
  s->session = std::make_unique<Session>(Session::from_json(j));
  slots_[id] = s;
  return s;
}

void SessionStore::read(const std::string& id, const std::function<void(const Session&)>& fn) {
  const auto s = slot(id);
  std::lock_guard lock(s->mutex);
  fn(*s->session);
}

void SessionStore::update(const std::string& id, const std::function<Session(const Session&)>& fn) {
  const auto s = slot(id);
  std::lock_guard lock(s->mutex);
  Session next = fn(*s->session);
  persist(next);
  *s->session = std::move(next);
}

}  // namespace lowshot
