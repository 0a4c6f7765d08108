#include <string>
#include <unordered_map>

#include "lowshot/errors.hpp"
#include "lowshot/pool_io.hpp"
#include "lowshot/session.hpp"

namespace lowshot {

namespace {

using nlohmann::json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

// Draw lists are stored column-wise to keep large sessions compact.
json draws_to_json(const std::vector<LabeledDraw>& draws) {
  json index = json::array(), label = json::array(), ratio = json::array(), weight = json::array(),
       lc = json::array(), reused = json::array();
  for (const auto& d : draws) {
    index.push_back(d.index);
    label.push_back(int(d.true_label));
    ratio.push_back(d.density_ratio);
    weight.push_back(d.weight);
    lc.push_back(int(d.loss_complement));
    reused.push_back(d.provenance == Provenance::Reused ? 1 : 0);
  }
  return json{{"index", index}, {"label", label},         {"density_ratio", ratio},
              {"weight", weight}, {"loss_complement", lc}, {"reused", reused}};
}

std::vector<LabeledDraw> draws_from_json(const json& j) {
  const auto& index = j.at("index");
  const std::size_t n = index.size();
  for (const char* key : {"label", "density_ratio", "weight", "loss_complement", "reused"}) {
    if (j.at(key).size() != n) throw Error(ErrorCode::SchemaMismatch, "draw columns differ in length");
  }
  std::vector<LabeledDraw> draws(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto& d = draws[k];
    d.index = index[k].get<std::size_t>();
    d.true_label = static_cast<Label>(j["label"][k].get<int>());
    d.density_ratio = j["density_ratio"][k].get<double>();
    d.weight = j["weight"][k].get<double>();
    d.loss_complement = static_cast<Label>(j["loss_complement"][k].get<int>());
    d.provenance = j["reused"][k].get<int>() ? Provenance::Reused : Provenance::Fresh;
  }
  return draws;
}

json pending_to_json(const PendingBatch& p) {
  return json{{"iteration", p.iteration},   {"draw_indices", p.draw_indices}, {"draw_ratios", p.draw_ratios},
              {"fresh", p.fresh},           {"reused", draws_to_json(p.reused)},
              {"warnings", p.warnings}};
}

PendingBatch pending_from_json(const json& j) {
  PendingBatch p;
  p.iteration = j.at("iteration").get<std::size_t>();
  p.draw_indices = j.at("draw_indices").get<std::vector<std::size_t>>();
  p.draw_ratios = j.at("draw_ratios").get<std::vector<double>>();
  p.fresh = j.at("fresh").get<std::vector<std::size_t>>();
  p.reused = draws_from_json(j.at("reused"));
  p.warnings = j.at("warnings").get<std::vector<std::string>>();
  if (p.draw_indices.size() != p.draw_ratios.size()) {
    throw Error(ErrorCode::SchemaMismatch, "pending draws and ratios differ in length");
  }
  return p;
}

}  // namespace

json acis_config_to_json(const AcisConfig& c) {
  return json{{"alpha", c.alpha.value},
              {"budget", c.budget},
              {"first_batch", c.first_batch},
              {"batch_growth", c.batch_growth},
              {"eps", c.eps},
              {"g0", c.g0},
              {"blend_iters", c.blend_iters},
              {"avg_window", c.avg_window},
              {"topk_multiplier", c.topk_multiplier},
              {"restrict_domain", c.restrict_domain},
              {"seed", c.seed}};
}

AcisConfig acis_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ValidationError, "config must be an object");
  AcisConfig c;
  try {
    if (j.contains("alpha")) c.alpha = Alpha(j["alpha"].get<double>());
    if (j.contains("budget")) c.budget = j["budget"].get<std::size_t>();
    if (j.contains("first_batch")) c.first_batch = j["first_batch"].get<std::size_t>();
    if (j.contains("batch_growth")) c.batch_growth = j["batch_growth"].get<double>();
    if (j.contains("eps")) c.eps = j["eps"].get<double>();
    if (j.contains("g0")) c.g0 = j["g0"].get<double>();
    if (j.contains("blend_iters")) c.blend_iters = j["blend_iters"].get<std::size_t>();
    if (j.contains("avg_window")) c.avg_window = j["avg_window"].get<std::size_t>();
    if (j.contains("topk_multiplier")) c.topk_multiplier = j["topk_multiplier"].get<std::size_t>();
    if (j.contains("restrict_domain")) c.restrict_domain = j["restrict_domain"].get<bool>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    c.validate();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ValidationError, std::string("bad config: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::ValidationError, e.what());
  }
  return c;
}

json records_to_json(const std::vector<IterationRecord>& records) {
  json out = json::array();
  for (const auto& r : records) {
    out.push_back(json{{"iteration", r.iteration},
                       {"batch_size", r.batch_size},
                       {"draws", draws_to_json(r.draws)},
                       {"g_hat", r.g_hat},
                       {"asymptotic_var", optional_number(r.asymptotic_var)},
                       {"estimate_var", optional_number(r.estimate_var)},
                       {"weight_mass", r.weight_mass},
                       {"warnings", r.warnings}});
  }
  return out;
}

std::vector<IterationRecord> records_from_json(const json& j) {
  std::vector<IterationRecord> out;
  for (const auto& r : j) {
    IterationRecord rec;
    rec.iteration = r.at("iteration").get<std::size_t>();
    rec.batch_size = r.at("batch_size").get<std::size_t>();
    rec.draws = draws_from_json(r.at("draws"));
    rec.g_hat = r.at("g_hat").get<double>();
    rec.asymptotic_var = read_optional(r.at("asymptotic_var"));
    rec.estimate_var = read_optional(r.at("estimate_var"));
    rec.weight_mass = r.at("weight_mass").get<double>();
    rec.warnings = r.at("warnings").get<std::vector<std::string>>();
    out.push_back(std::move(rec));
  }
  return out;
}

json Session::to_json() const {
  const AcisEngineState s = engine_->state();
  json labels = json::array();
  for (const auto& [j, y] : s.labels.entries()) labels.push_back(json{{"id", (*pool_)[j].id}, {"label", int(y)}});
  return json{{"schema_version", kSessionSchemaVersion},
              {"session_id", id_},
              {"created_at", created_at_},
              {"updated_at", updated_at_},
              {"state", session_state_name(state())},
              {"config", acis_config_to_json(engine_->config())},
              {"pool", pool_to_json(*pool_)},
              {"labels", labels},
              {"records", records_to_json(s.records)},
              {"pending", s.pending ? pending_to_json(*s.pending) : json(nullptr)},
              {"rng_state", s.rng_state},
              {"complete", s.complete}};
}

Session Session::from_json(const json& j) {
  if (!j.is_object() || !j.contains("schema_version") || !j["schema_version"].is_number_integer() ||
      j["schema_version"].get<int>() != kSessionSchemaVersion) {
    throw Error(ErrorCode::SchemaMismatch,
                "expected session schema_version " + std::to_string(kSessionSchemaVersion));
  }
  try {
    auto pool = std::make_shared<const ScoredPool>(pool_from_json(j.at("pool")));
    const AcisConfig config = acis_config_from_json(j.at("config"));

    AcisEngineState state;
    state.labels = LabelStore(pool->size());
    std::unordered_map<std::string, std::size_t> index_of;
    for (std::size_t i = 0; i < pool->size(); ++i) index_of.emplace((*pool)[i].id, i);
    for (const auto& entry : j.at("labels")) {
      const auto it = index_of.find(entry.at("id").get<std::string>());
      if (it == index_of.end()) throw Error(ErrorCode::SchemaMismatch, "label for an unknown item");
      const int y = entry.at("label").get<int>();
      if (y != 0 && y != 1) throw Error(ErrorCode::SchemaMismatch, "stored label must be 0 or 1");
      state.labels.set(it->second, static_cast<Label>(y));
    }
    state.records = records_from_json(j.at("records"));
    if (!j.at("pending").is_null()) state.pending = pending_from_json(j["pending"]);
    state.rng_state = j.at("rng_state").get<std::string>();
    state.complete = j.at("complete").get<bool>();

    for (const auto& r : state.records) {
      for (const auto& d : r.draws) {
        if (d.index >= pool->size() || state.labels.get(d.index) != d.true_label) {
          throw Error(ErrorCode::SchemaMismatch, "records reference labels missing from the store");
        }
      }
    }
    if (state.pending) {
      for (const std::size_t k : state.pending->draw_indices) {
        if (k >= pool->size()) throw Error(ErrorCode::SchemaMismatch, "pending draw outside the pool");
      }
    }

    auto engine = std::make_unique<AcisEngine>(pool, config, std::move(state));
    Session s(j.at("session_id").get<std::string>(), pool, std::move(engine), j.at("created_at").get<std::string>(),
              j.at("updated_at").get<std::string>());
    if (session_state_name(s.state()) != j.at("state").get<std::string>()) {
      throw Error(ErrorCode::SchemaMismatch, "stored state disagrees with the engine");
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("malformed session: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaMismatch) throw;
    throw Error(ErrorCode::SchemaMismatch, std::string("invalid session: ") + e.what());
  }
}

}  // namespace lowshot
