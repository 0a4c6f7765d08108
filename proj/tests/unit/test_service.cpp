#include <gtest/gtest.h>

#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <thread>
#include <unordered_map>

#include <unistd.h>

#include "lowshot/acis.hpp"
#include "lowshot/errors.hpp"
#include "lowshot/http_service.hpp"
#include "lowshot/pool_io.hpp"
#include "lowshot/session.hpp"
#include "lowshot/session_store.hpp"
#include "lowshot/synth.hpp"

using namespace lowshot;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ScoredPool labeled_pool(std::uint64_t seed) {
  SynthConfig c;
  c.pool_size = 1500;
  c.prevalence = 0.03;
  c.seed = seed;
  return synth_generate(c).pool;
}

AcisConfig small_config(std::size_t budget, std::uint64_t seed) {
  AcisConfig c;
  c.budget = budget;
  c.seed = seed;
  return c;
}

std::unordered_map<std::string, Label> truth_by_id(const ScoredPool& pool) {
  std::unordered_map<std::string, Label> out;
  for (const auto& it : pool.items()) out[it.id] = *it.label;
  return out;
}

std::vector<std::pair<std::string, int>> answer(const SessionBatch& b,
                                                const std::unordered_map<std::string, Label>& truth) {
  std::vector<std::pair<std::string, int>> out;
  for (const auto& it : b.items) {
    if (!it.labeled) out.emplace_back(it.id, truth.at(it.id));
  }
  return out;
}

void run_to_completion(Session& s, const std::unordered_map<std::string, Label>& truth) {
  while (s.state() != SessionState::Complete) s.submit_labels(answer(s.batch(), truth), "t");
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::EmptyInput;
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("lowshot_svc_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Session, CreateValidatesInput) {
  const auto pool = labeled_pool(1);
  EXPECT_EQ(code_of([&] { Session::create("s", pool, small_config(pool.size() + 1, 0), "t"); }),
            ErrorCode::ValidationError);
  auto bad = small_config(10, 0);
  bad.batch_growth = 0.5;
  EXPECT_EQ(code_of([&] { Session::create("s", pool, bad, "t"); }), ErrorCode::ValidationError);
  const auto s = Session::create("s", pool, small_config(50, 0), "t");
  EXPECT_FALSE(s.engine().pool().has_oracle());
  EXPECT_EQ(s.state(), SessionState::AwaitingLabels);
  EXPECT_EQ(s.created_at(), "t");
}

TEST(Session, BatchIsStableUntilLabeled) {
  const auto pool = labeled_pool(2);
  auto s = Session::create("s", pool, small_config(60, 3), "t");
  const auto a = s.batch();
  const auto b = s.batch();
  ASSERT_EQ(a.items.size(), b.items.size());
  for (std::size_t i = 0; i < a.items.size(); ++i) EXPECT_EQ(a.items[i].id, b.items[i].id);
  EXPECT_EQ(a.iteration, 1u);
  EXPECT_EQ(a.progress.labels_used, 0u);
  EXPECT_EQ(a.progress.budget, 60u);
}

TEST(Session, SubmittingBatchesAdvancesAndCompletes) {
  const auto pool = labeled_pool(3);
  const auto truth = truth_by_id(pool);
  auto s = Session::create("s", pool, small_config(60, 4), "t");
  std::size_t last_iterations = 0;
  while (s.state() != SessionState::Complete) {
    const auto b = s.batch();
    const auto p = s.submit_labels(answer(b, truth), "t2");
    EXPECT_GT(p.iterations, last_iterations);
    last_iterations = p.iterations;
    EXPECT_EQ(s.engine().records().size(), p.iterations);
  }
  EXPECT_LE(s.progress().labels_used, 60u);
  EXPECT_EQ(s.updated_at(), "t2");
  EXPECT_EQ(code_of([&] { s.batch(); }), ErrorCode::SessionComplete);
  EXPECT_EQ(code_of([&] { s.submit_labels({{pool[0].id, 1}}, "t"); }), ErrorCode::SessionComplete);
}

TEST(Session, PartialSubmissionKeepsBatchOpen) {
  const auto pool = labeled_pool(4);
  const auto truth = truth_by_id(pool);
  auto s = Session::create("s", pool, small_config(60, 5), "t");
  const auto b = s.batch();
  ASSERT_GE(b.items.size(), 2u);
  auto labels = answer(b, truth);
  labels.resize(1);
  const auto p = s.submit_labels(labels, "t");
  EXPECT_EQ(p.labels_used, 1u);
  EXPECT_EQ(p.iterations, 0u);
  const auto again = s.batch();
  EXPECT_EQ(again.items.size(), b.items.size());
  EXPECT_TRUE(again.items[0].labeled);
  EXPECT_EQ(code_of([&] { s.estimate(); }), ErrorCode::NoEstimateYet);
}

TEST(Session, RejectedSubmissionChangesNothing) {
  const auto pool = labeled_pool(5);
  const auto truth = truth_by_id(pool);
  auto s = Session::create("s", pool, small_config(60, 6), "t");
  const auto b = s.batch();
  const auto before = s.to_json().dump();
  auto good = answer(b, truth);

  auto with_unknown = good;
  with_unknown.emplace_back("no-such-item", 1);
  EXPECT_EQ(code_of([&] { s.submit_labels(with_unknown, "t9"); }), ErrorCode::UnknownItem);

  auto with_dup = good;
  with_dup.push_back(good.front());
  EXPECT_EQ(code_of([&] { s.submit_labels(with_dup, "t9"); }), ErrorCode::AlreadyLabeled);

  auto with_bad = good;
  with_bad.back().second = 7;
  EXPECT_EQ(code_of([&] { s.submit_labels(with_bad, "t9"); }), ErrorCode::InvalidLabel);
  EXPECT_EQ(s.to_json().dump(), before);

  s.submit_labels({good.front()}, "t");
  EXPECT_EQ(code_of([&] { s.submit_labels({good.front()}, "t"); }), ErrorCode::AlreadyLabeled);
}

TEST(Session, EstimateMatchesOfflineCombination) {
  const auto pool = labeled_pool(6);
  const auto truth = truth_by_id(pool);
  auto s = Session::create("s", pool, small_config(80, 7), "t");
  s.submit_labels(answer(s.batch(), truth), "t");
  const auto one = s.estimate();
  ASSERT_EQ(one.per_iteration.size(), 1u);
  EXPECT_EQ(one.g_combined, s.engine().records()[0].g_hat);

  run_to_completion(s, truth);
  const auto e = s.estimate();
  const auto offline = combine_estimates(s.engine().records(), 3);
  EXPECT_EQ(e.g_combined, offline.g);
  EXPECT_EQ(e.var_combined, offline.var);
  EXPECT_EQ(e.per_iteration.size(), s.engine().records().size());
}

TEST(Session, ServiceRunReproducesOfflineRun) {
  const auto pool = labeled_pool(7);
  const auto truth = truth_by_id(pool);
  const auto cfg = small_config(100, 8);
  auto s = Session::create("s", pool, cfg, "t");
  run_to_completion(s, truth);
  const auto oracle = pool.oracle_labels();
  const auto offline = acis_run(pool, [&](std::size_t j) { return oracle[j]; }, cfg);
  const auto& online = s.engine().records();
  ASSERT_EQ(online.size(), offline.records.size());
  for (std::size_t i = 0; i < online.size(); ++i) {
    EXPECT_EQ(online[i].g_hat, offline.records[i].g_hat);
    EXPECT_EQ(online[i].estimate_var, offline.records[i].estimate_var);
  }
  EXPECT_EQ(s.estimate().g_combined, offline.g_final);
}

TEST(SessionJson, ExportImportIsByteIdenticalAndResumable) {
  const auto pool = labeled_pool(8);
  const auto truth = truth_by_id(pool);
  auto s = Session::create("abc", pool, small_config(90, 9), "t");
  s.submit_labels(answer(s.batch(), truth), "t");
  auto partial = answer(s.batch(), truth);
  partial.resize(partial.size() / 2);
  s.submit_labels(partial, "t");

  const auto exported = s.to_json();
  EXPECT_EQ(exported["schema_version"], kSessionSchemaVersion);
  auto restored = Session::from_json(json::parse(exported.dump()));
  EXPECT_EQ(restored.to_json().dump(), exported.dump());

  run_to_completion(s, truth);
  run_to_completion(restored, truth);
  EXPECT_EQ(restored.to_json().dump(), s.to_json().dump());
}

TEST(SessionJson, SchemaProblemsRejected) {
  const auto pool = labeled_pool(9);
  const auto s = Session::create("abc", pool, small_config(40, 1), "t");
  auto j = s.to_json();
  j["schema_version"] = 99;
  EXPECT_EQ(code_of([&] { Session::from_json(j); }), ErrorCode::SchemaMismatch);
  j = s.to_json();
  j.erase("rng_state");
  EXPECT_EQ(code_of([&] { Session::from_json(j); }), ErrorCode::SchemaMismatch);
  EXPECT_EQ(code_of([] { Session::from_json(json::array()); }), ErrorCode::SchemaMismatch);
}

TEST(SessionStore, SessionsSurviveARestart) {
  const auto dir = scratch_dir("restart");
  const auto pool = labeled_pool(10);
  const auto truth = truth_by_id(pool);
  std::string id;
  std::string snapshot;
  {
    SessionStore store(dir);
    id = store.create(pool, small_config(60, 2));
    store.update(id, [&](const Session& s) {
      Session next = s;
      next.submit_labels(answer(s.batch(), truth), "t");
      return next;
    });
    store.read(id, [&](const Session& s) { snapshot = s.to_json().dump(); });
  }
  EXPECT_TRUE(fs::exists(dir / (id + ".json")));
  EXPECT_FALSE(fs::exists(dir / (id + ".json.tmp")));
  SessionStore reopened(dir);
  reopened.read(id, [&](const Session& s) { EXPECT_EQ(s.to_json().dump(), snapshot); });
  EXPECT_EQ(code_of([&] { reopened.read("missing", [](const Session&) {}); }), ErrorCode::NotFound);
  EXPECT_EQ(code_of([&] { reopened.read("../etc", [](const Session&) {}); }), ErrorCode::NotFound);
  fs::remove_all(dir);
}

TEST(SessionStore, FailedUpdateLeavesSessionUntouched) {
  const auto dir = scratch_dir("failed");
  SessionStore store(dir);
  const auto id = store.create(labeled_pool(11), small_config(40, 2));
  std::string before, after;
  store.read(id, [&](const Session& s) { before = s.to_json().dump(); });
  EXPECT_EQ(code_of([&] {
              store.update(id, [](const Session& s) {
                Session next = s;
                next.submit_labels({{"nope", 1}}, "t");
                return next;
              });
            }),
            ErrorCode::UnknownItem);
  store.read(id, [&](const Session& s) { after = s.to_json().dump(); });
  EXPECT_EQ(before, after);
  fs::remove_all(dir);
}

TEST(SessionStore, ImportKeepsFreeIdsAndRenamesTakenOnes) {
  const auto dir = scratch_dir("import");
  SessionStore store(dir);
  const auto s = Session::create("keepme", labeled_pool(12), small_config(40, 2), "t");
  EXPECT_EQ(store.import(s.to_json()), "keepme");
  const auto second = store.import(s.to_json());
  EXPECT_NE(second, "keepme");
  EXPECT_TRUE(valid_session_id(second));
  EXPECT_FALSE(valid_session_id("a/b"));
  EXPECT_FALSE(valid_session_id(""));
  fs::remove_all(dir);
}

TEST(HttpStatus, ErrorCodeMapping) {
  EXPECT_EQ(http_status_for(ErrorCode::NotFound), 404);
  EXPECT_EQ(http_status_for(ErrorCode::SessionComplete), 409);
  EXPECT_EQ(http_status_for(ErrorCode::AlreadyLabeled), 409);
  EXPECT_EQ(http_status_for(ErrorCode::NoEstimateYet), 409);
  EXPECT_EQ(http_status_for(ErrorCode::StorageError), 500);
  EXPECT_EQ(http_status_for(ErrorCode::UnknownItem), 400);
  EXPECT_EQ(http_status_for(ErrorCode::ValidationError), 400);
}

class HttpServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = scratch_dir("http");
    service_ = std::make_unique<LabelService>(std::make_shared<SessionStore>(dir_));
    port_ = service_->bind("127.0.0.1", 0);
    thread_ = std::thread([this] { service_->listen(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    for (int i = 0; i < 200 && !client_->Get("/healthz"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  void TearDown() override {
    service_->stop();
    thread_.join();
    fs::remove_all(dir_);
  }
  json post(const std::string& path, const json& body, int expected) {
    const auto res = client_->Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    if (!res) return json();
    EXPECT_EQ(res->status, expected) << path << " " << res->body;
    return json::parse(res->body);
  }
  json get(const std::string& path, int expected) {
    const auto res = client_->Get(path);
    EXPECT_TRUE(res);
    if (!res) return json();
    EXPECT_EQ(res->status, expected) << path << " " << res->body;
    return json::parse(res->body);
  }

  fs::path dir_;
  std::unique_ptr<LabelService> service_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(HttpServiceTest, OracleClientReproducesOfflineRun) {
  const auto pool = labeled_pool(13);
  const auto truth = truth_by_id(pool);
  const auto cfg = small_config(80, 21);
  const auto created = post("/sessions", json{{"pool", pool_to_json(pool.without_labels())}, {"config", acis_config_to_json(cfg)}}, 201);
  const std::string id = created["session_id"];
  const std::string base = "/sessions/" + id;

  get(base + "/estimate", 409);
  for (int guard = 0; guard < 100; ++guard) {
    const auto res = client_->Get(base + "/batch");
    ASSERT_TRUE(res);
    if (res->status == 409) {
      EXPECT_EQ(json::parse(res->body)["error"], "SessionComplete");
      break;
    }
    ASSERT_EQ(res->status, 200);
    const auto batch = json::parse(res->body);
    json labels = json::array();
    for (const auto& item : batch["items"]) {
      if (!item["labeled"].get<bool>()) labels.push_back(json{{"id", item["id"]}, {"label", truth.at(item["id"])}});
    }
    const auto progress = post(base + "/labels", json{{"labels", labels}}, 200);
    EXPECT_EQ(progress["session_id"], id);
  }

  const auto oracle = pool.oracle_labels();
  const auto offline = acis_run(pool, [&](std::size_t j) { return oracle[j]; }, cfg);
  const auto est = get(base + "/estimate", 200);
  ASSERT_EQ(est["per_iteration"].size(), offline.records.size());
  for (std::size_t i = 0; i < offline.records.size(); ++i) {
    EXPECT_EQ(est["per_iteration"][i]["g"].get<double>(), offline.records[i].g_hat);
    EXPECT_EQ(est["per_iteration"][i]["i"].get<std::size_t>(), i + 1);
  }
  EXPECT_EQ(est["g_combined"].get<double>(), offline.g_final);

  const auto exported = get(base + "/export", 200);
  const auto imported = post("/sessions/import", exported, 201);
  EXPECT_NE(imported["session_id"], id);
  const auto re_exported = get("/sessions/" + imported["session_id"].get<std::string>() + "/export", 200);
  auto a = exported, b = re_exported;
  a.erase("session_id");
  b.erase("session_id");
  EXPECT_EQ(a.dump(), b.dump());
}

TEST_F(HttpServiceTest, ErrorsCarryCodeAndStatus) {
  const auto missing = get("/sessions/nope/batch", 404);
  EXPECT_EQ(missing["error"], "NotFound");
  EXPECT_TRUE(missing.contains("message"));

  EXPECT_EQ(post("/sessions", json{{"config", json::object()}}, 400)["error"], "ValidationError");
  const auto res = client_->Post("/sessions", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);

  const auto pool = labeled_pool(14);
  const std::string id =
      post("/sessions", json{{"pool", pool_to_json(pool)}, {"config", json{{"budget", 30}, {"seed", 1}}}}, 201)["session_id"];
  const auto batch = get("/sessions/" + id + "/batch", 200);
  const std::string first = batch["items"][0]["id"];
  EXPECT_FALSE(batch["items"][0].contains("label"));
  EXPECT_EQ(post("/sessions/" + id + "/labels", json{{"labels", {{{"id", first}, {"label", "yes"}}}}}, 400)["error"],
            "InvalidLabel");
  EXPECT_EQ(post("/sessions/" + id + "/labels", json{{"labels", {{{"id", "ghost"}, {"label", 1}}}}}, 400)["error"],
            "UnknownItem");
  post("/sessions/" + id + "/labels", json{{"labels", {{{"id", first}, {"label", 1}}}}}, 200);
  EXPECT_EQ(post("/sessions/" + id + "/labels", json{{"labels", {{{"id", first}, {"label", 0}}}}}, 409)["error"],
            "AlreadyLabeled");
  EXPECT_EQ(post("/sessions", json{{"pool", pool_to_json(pool)}, {"config", json{{"budget", 1e9}}}}, 400)["error"],
            "ValidationError");
}

TEST_F(HttpServiceTest, CorsHeadersAndPreflight) {
  const auto res = client_->Get("/healthz");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
  const auto pre = client_->Options("/sessions");
  ASSERT_TRUE(pre);
  EXPECT_EQ(pre->status, 204);
  EXPECT_EQ(pre->get_header_value("Access-Control-Allow-Origin"), "*");
}
