// tampsim: run, sweep, validate, fit and oracle entry points.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tampsim/config.hpp"
#include "tampsim/errors.hpp"
#include "tampsim/oracles.hpp"
#include "tampsim/penalty_fit.hpp"
#include "tampsim/sim_engine.hpp"

namespace fs = std::filesystem;
using namespace tampsim;

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kRuntime = 3 };

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> assignments;
  std::optional<long> seed;
  std::optional<long> horizon;
  std::optional<long> warmup;
  std::optional<std::string> scheduler;
  std::string out_dir;
};

void add_common(CLI::App* app, CommonOptions& o, bool with_out) {
  app->add_option("--config", o.config_path, "YAML configuration file")->check(CLI::ExistingFile);
  app->add_option("--set", o.assignments, "key=value override (repeatable, last wins)");
  app->add_option("--seed", o.seed, "base random seed");
  app->add_option("--horizon", o.horizon, "slots per run");
  app->add_option("--warmup", o.warmup, "slots excluded from averages");
  app->add_option("--scheduler", o.scheduler, "tamp | age_prio | rate_prio | gea | max_weight");
  if (with_out) app->add_option("--out", o.out_dir, "output directory");
}

ConfigMap overrides_from(const CommonOptions& o, const ConfigMap& base = {}) {
  ConfigMap m = o.config_path.empty() ? ConfigMap{} : load_config_file(o.config_path);
  for (const auto& [k, v] : base) m[k] = v;
  for (const auto& a : o.assignments) apply_assignment(m, a);
  if (o.seed) m["seed"] = std::to_string(*o.seed);
  if (o.horizon) m["horizon"] = std::to_string(*o.horizon);
  if (o.warmup) m["warmup"] = std::to_string(*o.warmup);
  if (o.scheduler) m["scheduler"] = *o.scheduler;
  return m;
}

// --out, then the config's output key, then TAMPSIM_OUTPUT_DIR, then ".".
fs::path output_dir(const CommonOptions& o, const std::string& config_output) {
  fs::path dir = ".";
  if (!o.out_dir.empty()) {
    dir = o.out_dir;
  } else if (!config_output.empty()) {
    dir = config_output;
  } else if (const char* env = std::getenv("TAMPSIM_OUTPUT_DIR"); env && *env) {
    dir = env;
  }
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

int cmd_run(const CommonOptions& o) {
  ScenarioConfig cfg = parse_and_validate(overrides_from(o));
  fs::path dir = output_dir(o, cfg.output);

  auto slots = open_output(dir / "slots.csv");
  SlotCsvWriter writer(slots, cfg);
  RunSummary summary = run(cfg, [&](const SlotRecord& r) { writer(r); });

  auto summary_out = open_output(dir / "summary.csv");
  write_summary_csv(summary_out, cfg, {summary});

  std::cout << to_string(cfg.scheduler) << " seed=" << cfg.seed() << " mean_ap="
            << format_number(summary.mean_ap) << " mean_penalty=" << format_number(summary.mean_penalty)
            << " budget_violation=" << format_number(summary.budget_violation)
            << " wall_time_s=" << format_number(summary.wall_time_s) << "\n"
            << "wrote " << (dir / "slots.csv").string() << " and " << (dir / "summary.csv").string()
            << "\n";
  return kOk;
}

int cmd_sweep(const CommonOptions& o, const std::string& spec_path, std::optional<int> jobs) {
  SweepSpec spec = load_sweep_spec(spec_path);
  spec.base = overrides_from(o, spec.base);
  if (jobs) spec.jobs = *jobs;
  spec.validate();
  ScenarioConfig base = parse_and_validate(spec.base);
  fs::path dir = output_dir(o, base.output);

  SweepResult result = sweep(spec);
  auto table = open_output(dir / "sweep.csv");
  write_sweep_csv(table, spec, result);
  std::cout << result.runs.size() << " runs in " << format_number(result.wall_time_s) << " s\n"
            << "wrote " << (dir / "sweep.csv").string() << "\n";
  if (spec.keep_series) {
    auto traj = open_output(dir / "trajectories.csv");
    write_trajectory_csv(traj, spec, result);
    std::cout << "wrote " << (dir / "trajectories.csv").string() << "\n";
  }
  return kOk;
}

int cmd_validate(const CommonOptions& o) {
  ScenarioConfig cfg = parse_and_validate(overrides_from(o));
  std::cout << "# config_hash=" << cfg.hash() << "\n" << dump_config(cfg.canonical);
  return kOk;
}

int cmd_fit(const std::string& samples_path, const std::string& kind_name) {
  ScenarioKind kind = scenario_kind_from_string(kind_name);
  std::ifstream in(samples_path);
  if (!in) throw ConfigError("", "cannot read " + samples_path);
  std::vector<FitSample> samples = read_fit_samples(in);
  FitResult fit = fit_model(samples, kind);

  PenaltyModel model(fit.params, 1.0, 10.0);
  auto block = model.to_block();
  std::cout << "# rmse=" << format_number(fit.rmse) << " starts=" << fit.starts_tried
            << " samples=" << samples.size() << "\n"
            << "penalty:\n  " << kind_name << ":\n";
  for (const char* key : {"alpha", "beta", "gamma", "delta", "epsilon", "kappa", "lambda", "lambda0",
                          "nu", "mu"}) {
    auto it = block.find(key);
    if (it != block.end()) std::cout << "    " << key << ": " << it->second << "\n";
  }
  return kOk;
}

int cmd_oracle(const CommonOptions& o) {
  ScenarioConfig cfg = parse_and_validate(overrides_from(o));
  bool all = true;
  for (const OracleCheck& c : run_oracle_suite(cfg, cfg.seed())) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    all = all && c.passed;
  }
  return all ? kOk : kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slot-level scheduling simulator for multi-region collaborative perception"};
  app.require_subcommand(1);

  CommonOptions run_opts, sweep_opts, validate_opts, oracle_opts;
  auto* run_cmd = app.add_subcommand("run", "simulate one scenario and write slots.csv and summary.csv");
  add_common(run_cmd, run_opts, true);

  std::string spec_path;
  std::optional<int> jobs;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep described by a YAML file");
  sweep_cmd->add_option("spec", spec_path, "sweep description")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  add_common(sweep_cmd, sweep_opts, true);

  auto* validate_cmd = app.add_subcommand("validate", "check a configuration and print its effective keys");
  add_common(validate_cmd, validate_opts, false);

  std::string samples_path;
  std::string kind = "corridor";
  auto* fit_cmd = app.add_subcommand("fit", "fit an AP surface to h_s,b_log,ap samples");
  fit_cmd->add_option("samples", samples_path, "sample CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--kind", kind, "intersection | corridor")
      ->check(CLI::IsMember({"intersection", "corridor"}));

  auto* oracle_cmd = app.add_subcommand("oracle", "run the analytical cross-checks");
  add_common(oracle_cmd, oracle_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run_opts);
    if (*sweep_cmd) return cmd_sweep(sweep_opts, spec_path, jobs);
    if (*validate_cmd) return cmd_validate(validate_opts);
    if (*fit_cmd) return cmd_fit(samples_path, kind);
    if (*oracle_cmd) return cmd_oracle(oracle_opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
