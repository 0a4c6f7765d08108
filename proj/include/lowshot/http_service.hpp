#pragma once

#include <memory>
#include <string>

#include "lowshot/errors.hpp"
#include "lowshot/session_store.hpp"

namespace httplib {
class Server;
}

namespace lowshot {

// 404 NotFound; 409 SessionComplete, AlreadyLabeled, NoEstimateYet;
// 500 StorageError; 400 otherwise.
int http_status_for(ErrorCode code);

// JSON API over a SessionStore:
//   POST /sessions            {pool, config}       -> {session_id}
//   GET  /sessions/{id}/batch
//   POST /sessions/{id}/labels {labels: [{id, label}]}
//   GET  /sessions/{id}/estimate
//   GET  /sessions/{id}/export
//   POST /sessions/import     <exported session>   -> {session_id}
//   GET  /healthz
// Errors are {error: <code name>, message}.
class LabelService {
 public:
  explicit LabelService(std::shared_ptr<SessionStore> store);
  ~LabelService();

  LabelService(const LabelService&) = delete;
  LabelService& operator=(const LabelService&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws IoError
  // when the socket cannot be bound.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  std::shared_ptr<SessionStore> store_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace lowshot
