#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lowshot/acis.hpp"
#include "lowshot/errors.hpp"
#include "lowshot/http_service.hpp"
#include "lowshot/pool_io.hpp"
#include "lowshot/report.hpp"
#include "lowshot/trials.hpp"

using namespace lowshot;
using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, path + ": " + e.what());
  }
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

int run_bench(const std::string& config_path, const std::string& out_path, const std::string& format,
              std::optional<std::uint64_t> seed) {
  BenchPlan plan = bench_plan_from_json(read_json_file(config_path));
  if (seed) plan.seed = *seed;
  const ReportFormat fmt = parse_report_format(format);
  BenchOptions options;
  options.alpha = Alpha(plan.alpha);
  options.master_seed = plan.seed;
  const auto reports = plan.pool_path
                           ? run_trials(read_pool(*plan.pool_path), plan.methods, plan.budgets, plan.trials, options)
                           : run_trials(*plan.synthetic, plan.methods, plan.budgets, plan.trials, options);
  emit_report(reports, fmt, out_path);
  return 0;
}

int run_gen(const std::string& config_path, const std::string& out_path) {
  const json j = read_json_file(config_path);
  const SynthConfig cfg = synth_config_from_json(j.value("synthetic", j));
  const SynthPool generated = synth_generate(cfg);
  if (generated.regenerations > 0) {
    std::fprintf(stderr, "regenerated %zu times; seed used %llu\n", generated.regenerations,
                 static_cast<unsigned long long>(generated.seed_used));
  }
  write_pool(generated.pool, out_path);
  return 0;
}

int run_estimate(const std::string& pool_path, const std::string& method_name, std::size_t budget, double alpha,
                 std::uint64_t seed) {
  const ScoredPool pool = read_pool(pool_path);
  const auto oracle = pool.oracle_labels();
  const Method method = parse_method(method_name);
  json out{{"method", std::string(lowshot::method_name(method))}, {"budget", budget}, {"alpha", alpha}, {"seed", seed}};

  if (method == Method::Acis || method == Method::AcisLast) {
    AcisConfig cfg;
    cfg.alpha = Alpha(alpha);
    cfg.budget = budget;
    cfg.seed = seed;
    const AcisResult r = acis_run(pool, [&](std::size_t j) { return oracle[j]; }, cfg);
    json trajectory = json::array();
    std::size_t labels = 0;
    for (const auto& rec : r.records) {
      labels += rec.batch_size;
      trajectory.push_back(json{{"i", rec.iteration},
                                {"g", rec.g_hat},
                                {"var", optional_number(rec.estimate_var)},
                                {"batch_size", rec.batch_size},
                                {"labels_used", labels},
                                {"warnings", rec.warnings}});
    }
    const bool last = method == Method::AcisLast;
    out["g"] = last ? r.g_last : r.g_final;
    out["var"] = optional_number(last ? r.records.back().estimate_var : r.var_final);
    out["trajectory"] = trajectory;
  } else {
    BenchOptions options;
    options.alpha = Alpha(alpha);
    const TrialOutcome o = run_method(method, pool, oracle, budget, options, seed);
    out["g"] = optional_number(o.g_hat);
    out["var"] = optional_number(o.predicted_var);
    out["trajectory"] = json::array();
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int run_serve(int port, const std::string& data_dir) {
  auto store = std::make_shared<SessionStore>(data_dir);
  LabelService service(store);
  const int bound = service.bind("0.0.0.0", port);
  std::fprintf(stderr, "listening on port %d, data in %s\n", bound, data_dir.c_str());
  service.listen();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-shot F-score estimation"};
  app.require_subcommand(1);

  std::string config, out, format = "csv", pool, method = "acis", data_dir = "./lowshot-data";
  std::optional<std::uint64_t> bench_seed;
  std::uint64_t seed = 0;
  std::size_t budget = 100;
  double alpha = 0.5;
  int port = 8080;

  auto* bench = app.add_subcommand("bench", "Run seeded trials and write an MSE/bias/variance report");
  bench->add_option("--config", config, "Bench config JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("--out", out, "Report path")->required();
  bench->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  bench->add_option("--seed", bench_seed, "Master seed (overrides the config)");

  auto* gen = app.add_subcommand("gen", "Generate a synthetic pool with hidden labels");
  gen->add_option("--config", config, "Synthetic config JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Pool path (.json or .csv)")->required();

  auto* est = app.add_subcommand("estimate", "Estimate the F-score of a labeled pool with one method");
  est->add_option("--pool", pool, "Pool file with a label column")->required()->check(CLI::ExistingFile);
  est->add_option("--method", method, "acis|acis_last|topk|gmm|herding|sawade|rand|iso|platt");
  est->add_option("--budget", budget, "Label budget")->check(CLI::PositiveNumber);
  est->add_option("--alpha", alpha, "F-score weight, 0.5 for F1")->check(CLI::Range(0.0, 1.0));
  est->add_option("--seed", seed, "Random seed");

  auto* serve = app.add_subcommand("serve", "Run the labeling HTTP service");
  serve->add_option("--port", port, "Listen port")->envname("LOWSHOT_PORT")->check(CLI::Range(0, 65535));
  serve->add_option("--data-dir", data_dir, "Session storage directory")->envname("LOWSHOT_DATA_DIR");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bench) return run_bench(config, out, format, bench_seed);
    if (*gen) return run_gen(config, out);
    if (*est) return run_estimate(pool, method, budget, alpha, seed);
    if (*serve) return run_serve(port, data_dir);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", std::string(error_code_name(e.code())).c_str(), e.what());
    return 1;
  }
  return 0;
}
