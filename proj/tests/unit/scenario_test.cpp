#include <gtest/gtest.h>

#include <cmath>

#include "dressguard/harness.hpp"
#include "dressguard/scenario.hpp"

using namespace dressguard;
using nlohmann::json;

namespace {

std::filesystem::path data() { return default_data_dir(); }

json minimal_scenario() {
  return json::parse(R"({
    "schema_version": 1,
    "name": "mini",
    "world": {"seed": 3},
    "strategy": {"variant": "autonomous"},
    "snags": [{"id": "a", "segment": "LWRS", "progress": 0.4}]
  })");
}

// Path fraction of a trigger, measured from home along the default waypoints.
double path_fraction(const SnagTrigger& at, const std::vector<Waypoint>& wps, const Vec3& home) {
  std::vector<double> lengths;
  Vec3 prev = home;
  for (const auto& wp : wps) {
    lengths.push_back(norm(wp.position - prev));
    prev = wp.position;
  }
  double total = 0.0, before = 0.0;
  for (double l : lengths) total += l;
  for (std::size_t i = 0; i < wps.size(); ++i) {
    if (wps[i].label == at.segment) return (before + at.progress * lengths[i]) / total;
    before += lengths[i];
  }
  return -1.0;
}

}  // namespace

TEST(ScenarioFiles, EveryShippedFileLoads) {
  int scenarios = 0, plans = 0;
  for (const auto& e : std::filesystem::directory_iterator(data() / "scenarios")) {
    EXPECT_NO_THROW(load_scenario(e.path())) << e.path();
    ++scenarios;
  }
  for (const auto& e : std::filesystem::directory_iterator(data() / "plans")) {
    EXPECT_NO_THROW(load_plan(e.path())) << e.path();
    ++plans;
  }
  EXPECT_GT(scenarios, 0);
  EXPECT_GT(plans, 0);
}

TEST(ScenarioParse, DefaultsFillGaps) {
  const Scenario s = parse_scenario(minimal_scenario());
  EXPECT_EQ(s.name, "mini");
  EXPECT_EQ(s.world.seed, 3u);
  EXPECT_EQ(s.world.dt, 0.01);
  EXPECT_EQ(s.strategy.variant, Variant::Autonomous);
  EXPECT_EQ(s.strategy.t35, 35.0);
  ASSERT_EQ(s.snags.size(), 1u);
  EXPECT_EQ(s.snags[0].trigger.segment, WaypointLabel::LeftWrist);
  EXPECT_EQ(s.snags[0].trigger.progress, 0.4);
}

TEST(ScenarioParse, JsonRoundTrip) {
  for (const char* name : {"golden_autonomous.json", "pain.json", "human_intervention.json"}) {
    const Scenario s = load_scenario(data() / "scenarios" / name);
    const json once = scenario_to_json(s);
    EXPECT_EQ(scenario_to_json(parse_scenario(once)), once) << name;
    EXPECT_EQ(parse_scenario(once).snags, s.snags) << name;
  }
}

TEST(ScenarioParse, RejectsUnknownKeys) {
  json j = minimal_scenario();
  j["world"]["sede"] = 4;
  EXPECT_THROW(parse_scenario(j), ConfigError);
}

TEST(ScenarioParse, RejectsVersionProblems) {
  json j = minimal_scenario();
  j.erase("schema_version");
  EXPECT_THROW(parse_scenario(j), ConfigError);
  j["schema_version"] = 7;
  EXPECT_THROW(parse_scenario(j), ConfigError);
}

TEST(ScenarioParse, RejectsBadValues) {
  json j = minimal_scenario();
  j["strategy"]["variant"] = "optimistic";
  EXPECT_THROW(parse_scenario(j), ConfigError);
  j = minimal_scenario();
  j["snags"][0]["segment"] = "KNEE";
  EXPECT_THROW(parse_scenario(j), ConfigError);
  j = minimal_scenario();
  j["max_time"] = -1;
  EXPECT_THROW(parse_scenario(j), ConfigError);
  j = minimal_scenario();
  j["strategy"]["speed_levels"] = {1.0, 1.2};
  EXPECT_THROW(parse_scenario(j), ConfigError);
  j = minimal_scenario();
  j["world"]["dt"] = "fast";
  EXPECT_THROW(parse_scenario(j), ConfigError);
}

TEST(AgentParse, KindsAndLimits) {
  EXPECT_EQ(parse_agent(json{{"kind", "estopper"}, {"estop_threshold", 42}}).kind,
            AgentKind::EStopper);
  EXPECT_THROW(parse_agent(json{{"kind", "estopper"}, {"estop_threshold", 20}}), ConfigError);
  EXPECT_THROW(parse_agent(json{{"kind", "telepath"}}), ConfigError);
  EXPECT_THROW(parse_agent(json{{"kind", "assistive"}, {"delay_s", -1}}), ConfigError);
}

TEST(PlanParse, MissingFileAndMismatchedSeeds) {
  EXPECT_THROW(load_plan(data() / "plans" / "no_such_plan.json"), ConfigError);
  const json plan = {{"schema_version", 1},
                     {"name", "p"},
                     {"scenario", "../scenarios/pain.json"},
                     {"repetitions", 2},
                     {"seeds", {1, 2, 3}}};
  EXPECT_THROW(parse_plan(plan, data() / "plans"), ConfigError);
}

TEST(PlanParse, TrialIndexChecked) {
  const TrialPlan plan = load_plan(data() / "plans" / "pain_trial_1.json");
  EXPECT_NO_THROW(trial_scenario(plan, 0));
  EXPECT_THROW(trial_scenario(plan, 1), ConfigError);
  EXPECT_THROW(trial_scenario(plan, -1), ConfigError);
  EXPECT_EQ(trial_scenario(plan, 0).world.seed, plan.seeds[0]);
}

TEST(Injection, TotalsAcrossTrialsMatchCounts) {
  const std::vector<Waypoint> wps = default_waypoints();
  const Vec3 home{-0.10, 0.0, 0.05};
  for (int trials : {1, 5, 9, 12}) {
    Injection inj;
    inj.potential = 16;
    inj.escalated = 20;
    inj.aborting = std::min(3, trials);
    inj.hold_jitter = 4.0;
    inj.potential_template.hold_force = 20.0;
    inj.escalated_template.hold_force = 45.0;
    inj.aborting_template.hold_force = 45.0;
    int potential = 0, escalated = 0, aborting = 0;
    for (int i = 0; i < trials; ++i) {
      const auto snags = inject_snags(inj, trials, i, 1000 + i, wps, home);
      int here = 0;
      for (const SnagSpec& s : snags) {
        if (s.id.ends_with("abort")) {
          ++aborting;
          ++here;
          EXPECT_EQ(s.hold_force, 45.0);
          continue;
        }
        const bool is_potential = std::abs(s.hold_force - 20.0) <= 4.0;
        potential += is_potential;
        escalated += !is_potential;
        EXPECT_LE(std::abs(s.hold_force - (is_potential ? 20.0 : 45.0)), 4.0);
        const double f = path_fraction(s.trigger, wps, home);
        EXPECT_GE(f, inj.start_fraction - 1e-9);
        EXPECT_LE(f, inj.end_fraction + 1e-9);
      }
      EXPECT_LE(here, 1);
      EXPECT_EQ(inject_snags(inj, trials, i, 1000 + i, wps, home), snags);
    }
    EXPECT_EQ(potential, 16) << trials;
    EXPECT_EQ(escalated, 20) << trials;
    EXPECT_EQ(aborting, inj.aborting) << trials;
  }
}

TEST(Injection, AbortingSnagComesLast) {
  const std::vector<Waypoint> wps = default_waypoints();
  const Vec3 home{-0.10, 0.0, 0.05};
  Injection inj;
  inj.potential = 3;
  inj.escalated = 3;
  inj.aborting = 1;
  const auto snags = inject_snags(inj, 1, 0, 9, wps, home);
  ASSERT_EQ(snags.size(), 7u);
  const double abort_at = path_fraction(snags.back().trigger, wps, home);
  for (std::size_t i = 0; i + 1 < snags.size(); ++i) {
    EXPECT_LT(path_fraction(snags[i].trigger, wps, home), abort_at);
  }
}
