#include <fstream>
#include <regex>
#include <sstream>

#include <fmt/format.h>

#include "dressguard/harness.hpp"

namespace dressguard {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw HarnessError(fmt::format("cannot write '{}'", path.string()));
  out << content;
  if (!out) throw HarnessError(fmt::format("write to '{}' failed", path.string()));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Last "with recovery duration: [...]" list in a rendered autonomous log.
std::vector<double> fixture_durations(const std::string& text) {
  static const std::regex list(R"(with recovery duration: \[([^\]]*)\])");
  std::vector<double> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), list); it != std::sregex_iterator();
       ++it) {
    out.clear();
    std::stringstream items((*it)[1].str());
    std::string item;
    while (std::getline(items, item, ',')) out.push_back(std::stod(item));
  }
  return out;
}

}  // namespace

std::string force_trace_csv(const std::vector<TraceSample>& trace) {
  std::string out = "t,force,velocity,speed_scale,mode\n";
  for (const TraceSample& s : trace) {
    out += fmt::format("{:.4f},{:.6f},{:.6f},{},{}\n", s.t, s.force, s.velocity, s.speed_scale,
                       to_string(s.mode));
  }
  return out;
}

void write_artifacts(const TrialPlan& plan, const BatchResult& batch,
                     const std::filesystem::path& dir, Dialect dialect) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw HarnessError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));

  std::string per_trial = summary_csv_header() + "\n";
  for (std::size_t i = 0; i < batch.trials.size(); ++i) {
    const TrialResult& r = batch.trials[i];
    const std::string stem = fmt::format("trial_{:02}", i + 1);
    write_file(dir / (stem + ".jsonl"), export_jsonl(r.events));
    write_file(dir / (stem + ".txt"), render_log(r.events, dialect, Clock{r.scenario.epoch_us}));
    write_file(dir / (stem + "_force.csv"), force_trace_csv(r.trace));
    per_trial += summary_csv_row(r.summary) + "\n";
  }
  write_file(dir / "trials.csv", per_trial);
  write_file(dir / "summary.csv", export_csv(batch.summary));
  write_file(dir / "breakdown.csv", breakdown_csv(batch.summary));

  nlohmann::json meta = summary_to_json(batch.summary);
  meta["plan"] = plan.name;
  meta["variant"] = std::string(to_string(plan.scenario.strategy.variant));
  meta["seeds"] = plan.seeds;
  meta["note"] =
      "Snag counts come from scripted injection; force and time ranges reflect the simulated "
      "world, not human or cloth variability.";
  write_file(dir / "summary.json", meta.dump(2) + "\n");
}

GoldenVerdict replay_golden(const Scenario& scenario, const std::string& fixture_text,
                            double tolerance) {
  GoldenVerdict v;
  const TrialResult r = run_scenario(scenario, nullptr, Corpus{});
  v.rendered = render_log(r.events, Dialect::Autonomous, Clock{scenario.epoch_us});
  for (const ControlEvent& e : r.events) {
    if (e.kind == EventKind::SnagResolved) v.durations.push_back(e.duration.value_or(0.0));
  }

  const auto got = normalize_rendered(v.rendered);
  const auto want = normalize_rendered(fixture_text);
  const std::size_t n = std::max(got.size(), want.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::string g = i < got.size() ? got[i] : "<end of log>";
    const std::string w = i < want.size() ? want[i] : "<end of fixture>";
    if (g != w) {
      v.report = fmt::format("line {}: expected '{}', got '{}'", i + 1, w, g);
      return v;
    }
  }

  const std::vector<double> expected = fixture_durations(fixture_text);
  if (expected.size() != v.durations.size()) {
    v.report = fmt::format("expected {} episodes, got {}", expected.size(), v.durations.size());
    return v;
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (std::abs(expected[i] - v.durations[i]) > tolerance) {
      v.report = fmt::format("episode {} duration {:.6f}s, expected {:.6f}s +- {}s", i + 1,
                             v.durations[i], expected[i], tolerance);
      return v;
    }
  }
  v.pass = true;
  std::string list;
  for (double d : v.durations) list += fmt::format("{}{:.4f}", list.empty() ? "" : ", ", d);
  v.report = fmt::format("{} lines match; durations [{}] within {}s", want.size(), list, tolerance);
  return v;
}

GoldenVerdict replay_golden(const std::filesystem::path& data_dir, std::optional<double> dt) {
  Scenario s = load_scenario(data_dir / "scenarios" / "golden_autonomous.json");
  if (dt) s.world.dt = *dt;
  const std::string fixture = read_file(data_dir / "golden" / "autonomous_reference.txt");
  return replay_golden(s, fixture, 2.0 * s.world.dt);
}

}  // namespace dressguard
