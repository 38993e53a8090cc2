#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dressguard/hazard_control.hpp"
#include "dressguard/sim_env.hpp"

namespace dressguard {

inline constexpr int kScenarioSchemaVersion = 1;

/// Bad scenario or plan file. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Scenario {
  std::string name;
  WorldConfig world;
  StrategyConfig strategy;
  std::vector<SnagSpec> snags;
  std::int64_t epoch_us = 0;   // wall clock of sim time zero
  double max_time = 600.0;     // s; a trial still running past this is an error
  double prompt_timeout = 60.0;
};

Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);
nlohmann::json scenario_to_json(const Scenario& s);

SnagSpec parse_snag(const nlohmann::json& j);
nlohmann::json snag_to_json(const SnagSpec& s);

struct PainReport {
  WaypointLabel segment = WaypointLabel::LeftElbow;
  double progress = 0.0;
  int gentle = 1;  // more_gentle requests made for this report
};

enum class AgentKind { Assistive, NonAssistive, PainReporter, SpeedAccepter, EStopper };

std::string_view to_string(AgentKind kind);

struct AgentSpec {
  AgentKind kind = AgentKind::Assistive;
  double delay_s = 1.0;        // reaction time to anything the robot says
  double assist_wait = 1.5;    // s spent on the garment before judging the result
  bool escalate_to_auto = false;  // answer to "abort or autonomous?"
  std::vector<PainReport> pain;
  double estop_threshold = 45.0;
};

AgentSpec parse_agent(const nlohmann::json& j);

/// Randomized snag layout for batch plans: counts per category spread over
/// the trials, shapes drawn from per-category templates.
struct Injection {
  int potential = 0;
  int escalated = 0;  // freed by the user or by retraction
  int aborting = 0;   // never freed; ends its trial
  SnagSpec potential_template;
  SnagSpec escalated_template;
  SnagSpec aborting_template;
  double hold_jitter = 0.0;  // +- N on hold_force
  double start_fraction = 0.15;
  double end_fraction = 0.75;
};

struct TrialPlan {
  std::string name;
  std::filesystem::path scenario_path;
  Scenario scenario;
  AgentSpec agent;
  int repetitions = 1;
  std::vector<std::uint64_t> seeds;
  std::optional<Injection> injection;
  std::string dialect = "human";
};

TrialPlan parse_plan(const nlohmann::json& j, const std::filesystem::path& base_dir);
TrialPlan load_plan(const std::filesystem::path& path);

/// Snags for trial `index`, deterministic in (plan, seed).
std::vector<SnagSpec> inject_snags(const Injection& inj, int trials, int index,
                                   std::uint64_t seed, const std::vector<Waypoint>& waypoints,
                                   const Vec3& home);

/// Scenario with the trial's seed and injected snags applied.
Scenario trial_scenario(const TrialPlan& plan, int index);

}  // namespace dressguard
