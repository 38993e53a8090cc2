#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dressguard/bridge.hpp"
#include "dressguard/harness.hpp"

namespace fs = std::filesystem;
using namespace dressguard;

namespace {

constexpr int kOk = 0;
constexpr int kDivergence = 1;
constexpr int kIoError = 2;

fs::path default_out_dir(const TrialPlan& plan) {
  if (const char* env = std::getenv("DRESSGUARD_OUT"); env && *env) return fs::path(env) / plan.name;
  return fs::path("runs") / plan.name;
}

int cmd_run(const std::string& plan_path, std::optional<std::uint64_t> seed, std::string out,
            std::string dialect) {
  TrialPlan plan = load_plan(plan_path);
  if (seed) {
    for (int i = 0; i < plan.repetitions; ++i) plan.seeds[i] = *seed + i;
  }
  if (dialect.empty()) dialect = plan.dialect;
  const Dialect d = dialect_from_string(dialect);
  const fs::path dir = out.empty() ? default_out_dir(plan) : fs::path(out);

  const BatchResult batch = run_batch(plan, default_corpus());
  write_artifacts(plan, batch, dir, d);
  std::cout << export_csv(batch.summary);
  std::cout << breakdown_csv(batch.summary);
  fmt::print(stderr, "wrote {} trial(s) to {}\n", batch.trials.size(), dir.string());
  return kOk;
}

int cmd_replay(const std::string& data, std::optional<double> dt, bool print) {
  const fs::path dir = data.empty() ? default_data_dir() : fs::path(data);
  const GoldenVerdict v = replay_golden(dir, dt);
  if (print) std::cout << v.rendered;
  fmt::print("{} {}\n", v.pass ? "PASS" : "FAIL", v.report);
  return v.pass ? kOk : kDivergence;
}

int cmd_summarize(const std::string& in_dir, bool csv) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(in_dir, ec)) {
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  if (ec) throw ConfigError(fmt::format("cannot read '{}': {}", in_dir, ec.message()));
  if (files.empty()) throw ConfigError(fmt::format("no .jsonl logs in '{}'", in_dir));
  std::sort(files.begin(), files.end());

  std::vector<std::vector<ControlEvent>> logs;
  for (const fs::path& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    logs.push_back(import_jsonl(ss.str()));
  }
  const TrialSummary s = summarize(logs);
  if (csv) {
    std::cout << export_csv(s);
  } else {
    std::cout << summary_to_json(s).dump(2) << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hazard-aware robot-assisted dressing: simulation, control and trial harness"};
  app.require_subcommand(1);

  std::string plan_path, out_dir, dialect;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Run every trial of a plan and write artifacts");
  run->add_option("--plan", plan_path, "Plan JSON file")->required();
  run->add_option("--seed", seed, "Base seed; trial i uses seed + i");
  run->add_option("--out", out_dir, "Artifact directory (default $DRESSGUARD_OUT/<plan> or runs/<plan>)");
  run->add_option("--dialect", dialect, "Text log dialect")->check(CLI::IsMember({"human", "auto"}));

  std::string data_dir;
  std::optional<double> dt;
  bool print = false;
  auto* replay = app.add_subcommand("replay-golden", "Check the golden autonomous trace");
  replay->add_option("--data", data_dir, "Data directory (default $DRESSGUARD_DATA_DIR)");
  replay->add_option("--dt", dt, "Override the simulation tick");
  replay->add_flag("--print", print, "Print the rendered log");

  std::string in_dir;
  bool csv = false;
  auto* summ = app.add_subcommand("summarize", "Summarize a directory of JSONL trial logs");
  summ->add_option("--in", in_dir, "Directory with trial_*.jsonl")->required();
  summ->add_flag("--csv", csv, "CSV instead of JSON");

  BridgeConfig bridge;
  auto* serve = app.add_subcommand("serve", "Serve live sessions over HTTP and WebSocket");
  serve->add_option("--port", bridge.port, "TCP port");
  serve->add_option("--address", bridge.address, "Bind address");
  serve->add_option("--rt-ratio", bridge.realtime_ratio, "Sim seconds per wall second");
  serve->add_option("--plan", bridge.default_plan, "Plan used when a session starts without one");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kIoError;
  }

  try {
    if (*run) return cmd_run(plan_path, seed, out_dir, dialect);
    if (*replay) return cmd_replay(data_dir, dt, print);
    if (*summ) return cmd_summarize(in_dir, csv);
    if (*serve) {
      run_bridge(bridge);
      return kOk;
    }
  } catch (const std::exception& ex) {
    fmt::print(stderr, "error: {}\n", ex.what());
    return kIoError;
  }
  return kOk;
}
