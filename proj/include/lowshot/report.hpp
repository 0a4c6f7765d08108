#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lowshot/synth.hpp"
#include "lowshot/trials.hpp"

namespace lowshot {

enum class ReportFormat { Csv, Json };

ReportFormat parse_report_format(const std::string& name);

// Columns: method,budget,trials,mse,bias,empirical_var,mean_predicted_var,runtime_ms.
// Reals are written with 17 significant digits so a read-back is exact.
std::string report_to_csv(std::span<const TrialReport> reports);
std::vector<TrialReport> report_from_csv(const std::string& text);

nlohmann::json report_to_json(std::span<const TrialReport> reports);
std::vector<TrialReport> report_from_json(const nlohmann::json& rows);

// Throws IoError.
void emit_report(std::span<const TrialReport> reports, ReportFormat format, const std::filesystem::path& path);
std::vector<TrialReport> read_report(const std::filesystem::path& path, ReportFormat format);

// A benchmark run: either a synthetic config or a pool file with labels.
struct BenchPlan {
  std::optional<SynthConfig> synthetic;
  std::optional<std::string> pool_path;
  std::vector<Method> methods;
  std::vector<std::size_t> budgets;
  std::size_t trials = 100;
  double alpha = 0.5;
  std::uint64_t seed = 0;
};

// Keys: synthetic | pool, methods, budgets, trials, alpha, seed. A file with
// no "synthetic" or "pool" key is read as a synthetic config itself.
// Throws InvalidArgument.
BenchPlan bench_plan_from_json(const nlohmann::json& j);

nlohmann::json synth_config_to_json(const SynthConfig& cfg);
// Missing fields keep their defaults. Throws InvalidArgument.
SynthConfig synth_config_from_json(const nlohmann::json& j);

}  // namespace lowshot
