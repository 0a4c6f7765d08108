#include "lowshot/http_service.hpp"

#include <httplib.h>

#include "lowshot/pool_io.hpp"

namespace lowshot {

namespace {

using nlohmann::json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json progress_json(const SessionProgress& p) {
  return json{{"labels_used", p.labels_used}, {"budget", p.budget},   {"iterations", p.iterations},
              {"state", session_state_name(p.state)}, {"g", optional_number(p.g)}, {"var", optional_number(p.var)}};
}

json batch_json(const std::string& id, const SessionBatch& b) {
  json items = json::array();
  for (const auto& it : b.items) {
    json j{{"id", it.id}, {"score", it.score}, {"predicted", int(it.predicted)}, {"labeled", it.labeled}};
    if (it.asset_url) j["asset_url"] = *it.asset_url;
    items.push_back(std::move(j));
  }
  return json{{"session_id", id}, {"iteration", b.iteration}, {"items", items}, {"progress", progress_json(b.progress)}};
}

json estimate_json(const SessionEstimate& e) {
  json rows = json::array();
  for (const auto& r : e.per_iteration) {
    rows.push_back(json{{"i", r.iteration}, {"g", r.g}, {"var", optional_number(r.var)}, {"batch_size", r.batch_size}});
  }
  return json{{"g_combined", e.g_combined}, {"var_combined", optional_number(e.var_combined)}, {"per_iteration", rows}};
}

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send(res, http_status_for(code), json{{"error", std::string(error_code_name(code))}, {"message", message}});
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ValidationError, std::string("request body is not JSON: ") + e.what());
  }
}

// Runs a handler and turns library errors into the JSON error payload.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const json::exception& e) {
      send_error(res, ErrorCode::ValidationError, e.what());
    } catch (const std::exception& e) {
      send(res, 500, json{{"error", "InternalError"}, {"message", e.what()}});
    }
  };
}

std::vector<std::pair<std::string, int>> parse_labels(const json& body) {
  if (!body.is_object() || !body.contains("labels") || !body["labels"].is_array()) {
    throw Error(ErrorCode::ValidationError, "body needs a 'labels' array");
  }
  std::vector<std::pair<std::string, int>> out;
  for (const auto& entry : body["labels"]) {
    if (!entry.is_object() || !entry.contains("id") || !entry["id"].is_string()) {
      throw Error(ErrorCode::ValidationError, "each label needs a string 'id'");
    }
    const auto& l = entry.contains("label") ? entry["label"] : json();
    if (!l.is_number_integer()) throw Error(ErrorCode::InvalidLabel, "label must be 0 or 1");
    const auto v = l.get<std::int64_t>();
    out.emplace_back(entry["id"].get<std::string>(), (v == 0 || v == 1) ? int(v) : 2);
  }
  return out;
}

}  // namespace

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::SessionComplete:
    case ErrorCode::AlreadyLabeled:
    case ErrorCode::NoEstimateYet: return 409;
    case ErrorCode::StorageError:
    case ErrorCode::IoError: return 500;
    default: return 400;
  }
}

LabelService::LabelService(std::shared_ptr<SessionStore> store)
    : store_(std::move(store)), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;
  auto store_ptr = store_;

  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { send(res, 200, json{{"status", "ok"}}); });

  srv.Post("/sessions", guarded([store_ptr](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             if (!body.is_object() || !body.contains("pool")) throw Error(ErrorCode::ValidationError, "body needs 'pool'");
             const ScoredPool pool = pool_from_json(body["pool"]);
             const AcisConfig config = acis_config_from_json(body.value("config", json::object()));
             send(res, 201, json{{"session_id", store_ptr->create(pool, config)}});
           }));

  srv.Post("/sessions/import", guarded([store_ptr](const httplib::Request& req, httplib::Response& res) {
             send(res, 201, json{{"session_id", store_ptr->import(parse_body(req))}});
           }));

  srv.Get(R"(/sessions/([^/]+)/batch)", guarded([store_ptr](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            store_ptr->read(id, [&](const Session& s) { send(res, 200, batch_json(id, s.batch())); });
          }));

  srv.Post(R"(/sessions/([^/]+)/labels)", guarded([store_ptr](const httplib::Request& req, httplib::Response& res) {
             const std::string id = req.matches[1];
             const auto labels = parse_labels(parse_body(req));
             SessionProgress progress;
             store_ptr->update(id, [&](const Session& s) {
               Session next = s;
               progress = next.submit_labels(labels, utc_timestamp());
               return next;
             });
             send(res, 200, json{{"session_id", id}, {"progress", progress_json(progress)}});
           }));

  srv.Get(R"(/sessions/([^/]+)/estimate)", guarded([store_ptr](const httplib::Request& req, httplib::Response& res) {
            store_ptr->read(req.matches[1], [&](const Session& s) { send(res, 200, estimate_json(s.estimate())); });
          }));

  srv.Get(R"(/sessions/([^/]+)/export)", guarded([store_ptr](const httplib::Request& req, httplib::Response& res) {
            store_ptr->read(req.matches[1], [&](const Session& s) { send(res, 200, s.to_json()); });
          }));
}

LabelService::~LabelService() { stop(); }

int LabelService::bind(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void LabelService::listen() { server_->listen_after_bind(); }

void LabelService::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

}  // namespace lowshot
