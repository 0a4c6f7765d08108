#include "lowshot/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lowshot/errors.hpp"

namespace lowshot {

namespace {

constexpr const char* kHeader = "method,budget,trials,mse,bias,empirical_var,mean_predicted_var,runtime_ms";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("trailing characters");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  throw Error(ErrorCode::InvalidArgument, "report format must be csv or json");
}

std::string report_to_csv(std::span<const TrialReport> reports) {
  std::ostringstream os;
  os << kHeader << '\n';
  for (const auto& r : reports) {
    os << r.method << ',' << r.budget << ',' << r.trials << ',' << fmt(r.mse) << ',' << fmt(r.bias) << ','
       << fmt(r.empirical_var) << ',' << (r.mean_predicted_var ? fmt(*r.mean_predicted_var) : "") << ','
       << fmt(r.runtime_ms) << '\n';
  }
  return os.str();
}

std::vector<TrialReport> report_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line.rfind(kHeader, 0) != 0) {
    throw Error(ErrorCode::ValidationError, "unexpected report header");
  }
  std::vector<TrialReport> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 8) throw Error(ErrorCode::ValidationError, "report rows need 8 columns");
    try {
      TrialReport r;
      r.method = f[0];
      r.budget = std::stoull(f[1]);
      r.trials = std::stoull(f[2]);
      r.mse = parse_double(f[3]);
      r.bias = parse_double(f[4]);
      r.empirical_var = parse_double(f[5]);
      if (!f[6].empty()) r.mean_predicted_var = parse_double(f[6]);
      r.runtime_ms = parse_double(f[7]);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ValidationError, "malformed report row: " + line);
    }
  }
  return out;
}

nlohmann::json report_to_json(std::span<const TrialReport> reports) {
  auto rows = nlohmann::json::array();
  for (const auto& r : reports) {
    rows.push_back(nlohmann::json{{"method", r.method},
                                  {"budget", r.budget},
                                  {"trials", r.trials},
                                  {"mse", r.mse},
                                  {"bias", r.bias},
                                  {"empirical_var", r.empirical_var},
                                  {"mean_predicted_var", r.mean_predicted_var ? nlohmann::json(*r.mean_predicted_var)
                                                                              : nlohmann::json(nullptr)},
                                  {"runtime_ms", r.runtime_ms}});
  }
  return rows;
}

std::vector<TrialReport> report_from_json(const nlohmann::json& rows) {
  if (!rows.is_array()) throw Error(ErrorCode::ValidationError, "report JSON must be an array");
  std::vector<TrialReport> out;
  try {
    for (const auto& j : rows) {
      TrialReport r;
      r.method = j.at("method").get<std::string>();
      r.budget = j.at("budget").get<std::size_t>();
      r.trials = j.at("trials").get<std::size_t>();
      r.mse = j.at("mse").get<double>();
      r.bias = j.at("bias").get<double>();
      r.empirical_var = j.at("empirical_var").get<double>();
      if (!j.at("mean_predicted_var").is_null()) r.mean_predicted_var = j.at("mean_predicted_var").get<double>();
      r.runtime_ms = j.at("runtime_ms").get<double>();
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ValidationError, std::string("malformed report JSON: ") + e.what());
  }
  return out;
}

void emit_report(std::span<const TrialReport> reports, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  if (format == ReportFormat::Csv) out << report_to_csv(reports);
  else out << report_to_json(reports).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<TrialReport> read_report(const std::filesystem::path& path, ReportFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (format == ReportFormat::Csv) return report_from_csv(buf.str());
  try {
    return report_from_json(nlohmann::json::parse(buf.str()));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ValidationError, std::string("malformed report JSON: ") + e.what());
  }
}

nlohmann::json synth_config_to_json(const SynthConfig& cfg) {
  return nlohmann::json{{"pool_size", cfg.pool_size},
                        {"prevalence", cfg.prevalence},
                        {"pos_score_dist", {cfg.pos_scores.a, cfg.pos_scores.b}},
                        {"neg_score_dist", {cfg.neg_scores.a, cfg.neg_scores.b}},
                        {"miscalibration", warp_name(cfg.miscalibration)},
                        {"threshold", cfg.threshold},
                        {"seed", cfg.seed}};
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig cfg;
  try {
    if (j.contains("pool_size")) cfg.pool_size = j["pool_size"].get<std::size_t>();
    if (j.contains("prevalence")) cfg.prevalence = j["prevalence"].get<double>();
    if (j.contains("pos_score_dist")) cfg.pos_scores = {j["pos_score_dist"].at(0).get<double>(), j["pos_score_dist"].at(1).get<double>()};
    if (j.contains("neg_score_dist")) cfg.neg_scores = {j["neg_score_dist"].at(0).get<double>(), j["neg_score_dist"].at(1).get<double>()};
    if (j.contains("miscalibration")) cfg.miscalibration = parse_warp(j["miscalibration"].get<std::string>());
    if (j.contains("threshold")) cfg.threshold = j["threshold"].get<double>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad synthetic config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

BenchPlan bench_plan_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "bench config must be a JSON object");
  BenchPlan plan;
  plan.methods = {Method::Acis, Method::TopK, Method::Gmm, Method::Herding,
                  Method::Sawade, Method::Rand, Method::Iso, Method::Platt};
  plan.budgets = {10, 20, 40, 100, 300, 600};
  try {
    if (j.contains("pool")) plan.pool_path = j["pool"].get<std::string>();
    else plan.synthetic = synth_config_from_json(j.value("synthetic", j));
    if (j.contains("methods")) {
      plan.methods.clear();
      for (const auto& m : j["methods"]) plan.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (j.contains("budgets")) plan.budgets = j["budgets"].get<std::vector<std::size_t>>();
    if (j.contains("trials")) plan.trials = j["trials"].get<std::size_t>();
    if (j.contains("alpha")) plan.alpha = j["alpha"].get<double>();
    if (j.contains("seed")) plan.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad bench config: ") + e.what());
  }
  if (plan.methods.empty() || plan.budgets.empty() || plan.trials == 0) {
    throw Error(ErrorCode::InvalidArgument, "bench config needs methods, budgets and trials");
  }
  return plan;
}

}  // namespace lowshot
