#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "lowshot/pool.hpp"

namespace lowshot {

// {"items": [{"id", "score", "predicted", "label"?, "asset_url"?}]}
nlohmann::json pool_to_json(const ScoredPool& pool);
// Throws ValidationError on malformed payloads.
ScoredPool pool_from_json(const nlohmann::json& payload);

// CSV with header id,score,predicted,label; label may be empty.
std::string pool_to_csv(const ScoredPool& pool);
ScoredPool pool_from_csv(const std::string& text);

// Format chosen by extension (.csv, otherwise JSON). Throws IoError.
ScoredPool read_pool(const std::filesystem::path& path);
void write_pool(const ScoredPool& pool, const std::filesystem::path& path);

}  // namespace lowshot
