#include "lowshot/pool_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "lowshot/errors.hpp"

namespace lowshot {

namespace {

Label parse_label(const nlohmann::json& v, const char* field) {
  if (!v.is_number_integer() && !v.is_boolean()) {
    throw Error(ErrorCode::ValidationError, std::string(field) + " must be 0 or 1");
  }
  const int x = v.is_boolean() ? int(v.get<bool>()) : v.get<int>();
  if (x != 0 && x != 1) throw Error(ErrorCode::ValidationError, std::string(field) + " must be 0 or 1");
  return static_cast<Label>(x);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char ch : s) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  return out + "\"";
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

nlohmann::json pool_to_json(const ScoredPool& pool) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : pool.items()) {
    nlohmann::json j{{"id", item.id}, {"score", item.score}, {"predicted", int(item.predicted)}};
    if (item.label) j["label"] = int(*item.label);
    if (item.asset_url) j["asset_url"] = *item.asset_url;
    items.push_back(std::move(j));
  }
  return nlohmann::json{{"items", std::move(items)}};
}

ScoredPool pool_from_json(const nlohmann::json& payload) {
  if (!payload.is_object() || !payload.contains("items") || !payload["items"].is_array()) {
    throw Error(ErrorCode::ValidationError, "pool payload needs an 'items' array");
  }
  std::vector<PoolItem> items;
  items.reserve(payload["items"].size());
  for (const auto& j : payload["items"]) {
    if (!j.is_object()) throw Error(ErrorCode::ValidationError, "pool items must be objects");
    if (!j.contains("id") || !j["id"].is_string()) throw Error(ErrorCode::ValidationError, "item id must be a string");
    if (!j.contains("score") || !j["score"].is_number()) {
      throw Error(ErrorCode::ValidationError, "item score must be a number");
    }
    if (!j.contains("predicted")) throw Error(ErrorCode::ValidationError, "item needs a predicted label");
    PoolItem item;
    item.id = j["id"].get<std::string>();
    item.score = j["score"].get<double>();
    item.predicted = parse_label(j["predicted"], "predicted");
    if (j.contains("label") && !j["label"].is_null()) item.label = parse_label(j["label"], "label");
    if (j.contains("asset_url") && j["asset_url"].is_string()) item.asset_url = j["asset_url"].get<std::string>();
    items.push_back(std::move(item));
  }
  return ScoredPool(std::move(items));
}

std::string pool_to_csv(const ScoredPool& pool) {
  std::ostringstream os;
  os << "id,score,predicted,label\n";
  for (const auto& item : pool.items()) {
    os << csv_field(item.id) << ',' << format_double(item.score) << ',' << int(item.predicted) << ',';
    if (item.label) os << int(*item.label);
    os << '\n';
  }
  return os.str();
}

ScoredPool pool_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::ValidationError, "empty CSV pool");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "score" || header[2] != "predicted") {
    throw Error(ErrorCode::ValidationError, "CSV pool header must start with id,score,predicted");
  }
  const bool has_label = header.size() >= 4 && header[3] == "label";
  std::vector<PoolItem> items;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() < 3) throw Error(ErrorCode::ValidationError, "short CSV row at line " + std::to_string(line_no));
    PoolItem item;
    item.id = f[0];
    try {
      std::size_t used = 0;
      item.score = std::stod(f[1], &used);
      if (used != f[1].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw Error(ErrorCode::ValidationError, "bad score at line " + std::to_string(line_no));
    }
    if (f[2] != "0" && f[2] != "1") throw Error(ErrorCode::ValidationError, "bad predicted label at line " + std::to_string(line_no));
    item.predicted = f[2] == "1";
    if (has_label && f.size() >= 4 && !f[3].empty()) {
      if (f[3] != "0" && f[3] != "1") throw Error(ErrorCode::ValidationError, "bad label at line " + std::to_string(line_no));
      item.label = f[3] == "1";
    }
    items.push_back(std::move(item));
  }
  return ScoredPool(std::move(items));
}

ScoredPool read_pool(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (path.extension() == ".csv") return pool_from_csv(buf.str());
  nlohmann::json payload;
  try {
    payload = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ValidationError, std::string("malformed pool JSON: ") + e.what());
  }
  return pool_from_json(payload);
}

void write_pool(const ScoredPool& pool, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  if (path.extension() == ".csv") out << pool_to_csv(pool);
  else out << pool_to_json(pool).dump() << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace lowshot
