#include <gtest/gtest.h>

#include <fstream>

#include "dressguard/harness.hpp"
#include "support/fixture_events.hpp"

using namespace dressguard;

namespace {

std::filesystem::path data() { return default_data_dir(); }

const Corpus& corpus() {
  static const Corpus c = default_corpus();
  return c;
}

Scenario assist_scenario() { return load_scenario(data() / "scenarios" / "assist_single.json"); }

template <class Pred>
std::optional<TickReport> tick_until(TrialRunner& r, Pred pred, double limit_s = 120.0) {
  while (!r.terminal() && r.time() < limit_s) {
    TickReport rep = r.tick();
    if (pred(rep)) return rep;
  }
  return std::nullopt;
}

bool said(const TickReport& rep, PromptKind kind) {
  for (const auto& s : rep.robot_said) {
    if (prompt_kind_from_text(s) == kind) return true;
  }
  return false;
}

}  // namespace

TEST(ScriptedUserTest, AnswersAfterItsDelay) {
  AgentSpec spec;
  spec.delay_s = 1.0;
  ScriptedUser u(spec);
  AgentView v{.t = 2.0, .force = 36.0};
  v.robot_said.push_back(render_prompt(PromptKind::SnagAssist).text);
  EXPECT_TRUE(u.observe(v).empty());
  v.robot_said.clear();
  v.t = 2.99;
  EXPECT_TRUE(u.observe(v).empty());
  v.t = 3.0;
  const auto acts = u.observe(v);
  ASSERT_EQ(acts.size(), 1u);
  EXPECT_EQ(classify(acts[0].text, corpus()).intent, Intent::SnagAssist);
}

TEST(ScriptedUserTest, EveryScriptedLineClassifiesAsMeant) {
  // Replies are drawn from the corpus so they survive the classifier.
  struct Case {
    AgentKind kind;
    PromptKind prompt;
    bool to_auto;
    Intent want;
  };
  const Case cases[] = {
      {AgentKind::Assistive, PromptKind::SnagAssist, false, Intent::SnagAssist},
      {AgentKind::NonAssistive, PromptKind::SnagAssist, false, Intent::CannotResolve},
      {AgentKind::Assistive, PromptKind::SnagEscalate, false, Intent::AbortTask},
      {AgentKind::Assistive, PromptKind::SnagEscalate, true, Intent::AutoRecover},
      {AgentKind::PainReporter, PromptKind::PainChoice, false, Intent::SpeedOk},
      {AgentKind::Assistive, PromptKind::Paused, false, Intent::ResumeDressing},
  };
  for (const Case& c : cases) {
    AgentSpec spec;
    spec.kind = c.kind;
    spec.delay_s = 0.0;
    spec.escalate_to_auto = c.to_auto;
    ScriptedUser u(spec);
    AgentView v{.t = 1.0};
    v.robot_said.push_back(render_prompt(c.prompt).text);
    const auto acts = u.observe(v);
    ASSERT_EQ(acts.size(), 1u) << to_string(c.prompt);
    EXPECT_EQ(classify(acts[0].text, corpus()).intent, c.want) << acts[0].text;
  }
}

TEST(ScriptedUserTest, EStopperFiresOnceAboveThreshold) {
  AgentSpec spec;
  spec.kind = AgentKind::EStopper;
  spec.delay_s = 0.5;
  spec.estop_threshold = 42.0;
  ScriptedUser u(spec);
  EXPECT_TRUE(u.observe({.t = 1.0, .force = 41.9}).empty());
  EXPECT_TRUE(u.observe({.t = 1.1, .force = 42.0}).empty());
  const auto acts = u.observe({.t = 1.6, .force = 50.0});
  ASSERT_EQ(acts.size(), 1u);
  EXPECT_TRUE(acts[0].estop);
  EXPECT_TRUE(u.observe({.t = 5.0, .force = 60.0}).empty());
}

TEST(TrialRunnerTest, ChatDrivesTheAssistFlow) {
  TrialRunner r(assist_scenario(), corpus());
  auto asked = tick_until(r, [](const TickReport& rep) { return said(rep, PromptKind::SnagAssist); });
  ASSERT_TRUE(asked);
  EXPECT_EQ(r.controller().mode(), ControllerMode::ComplianceMode);

  r.post_chat("I can help with the snag");
  TickReport rep = r.tick();
  EXPECT_TRUE(said(rep, PromptKind::AssistConfirm));
  // The user's hands free the garment after the snag's assist delay.
  auto freed = tick_until(r, [&](const TickReport&) { return r.world().snag_force() < 5.0; },
                          r.time() + 5.0);
  ASSERT_TRUE(freed);

  r.post_chat("ok the snag is fixed now");
  rep = r.tick();
  EXPECT_EQ(rep.mode, ControllerMode::TrajectoryMode);
  bool back = false;
  for (const auto& e : rep.events) back |= e.kind == EventKind::TrajectoryModeEntered;
  EXPECT_TRUE(back);

  r.run_to_end();
  EXPECT_EQ(r.log().events().back().kind, EventKind::TrialCompleted);
  EXPECT_THROW(r.tick(), HarnessError);
}

TEST(TrialRunnerTest, UnclearRepliesRepromptThenEscalate) {
  Scenario s = assist_scenario();
  s.prompt_timeout = 3.0;
  TrialRunner r(s, corpus());
  ASSERT_TRUE(tick_until(r, [](const TickReport& rep) { return said(rep, PromptKind::SnagAssist); }));
  r.post_chat("purple elephants");
  TickReport rep = r.tick();
  ASSERT_EQ(rep.robot_said.size(), 1u);
  EXPECT_EQ(prompt_kind_from_text(rep.robot_said[0]), PromptKind::SnagAssist);
  // Silence until the prompt times out counts as the second failure.
  auto esc = tick_until(r, [](const TickReport& rep) { return said(rep, PromptKind::SnagEscalate); },
                        r.time() + 4.0);
  ASSERT_TRUE(esc);
}

TEST(TrialRunnerTest, EstopEndsTheTrial) {
  TrialRunner r(assist_scenario(), corpus());
  for (int i = 0; i < 50; ++i) r.tick();
  r.post_estop();
  const TickReport rep = r.tick();
  EXPECT_TRUE(rep.terminal);
  EXPECT_EQ(r.log().events().back().kind, EventKind::EmergencyStop);
}

TEST(TrialRunnerTest, TraceAndCommandsStayAligned) {
  TrialRunner r(assist_scenario(), corpus());
  for (int i = 0; i < 300; ++i) r.tick();
  EXPECT_EQ(r.trace().size(), 300u);
  EXPECT_EQ(r.command_history().size(), 300u);
  EXPECT_NEAR(r.trace().back().t, 3.0, 1e-9);
}

TEST(TrialRunnerTest, OverrunningMaxTimeIsAnError) {
  Scenario s = assist_scenario();
  s.max_time = 2.0;
  TrialRunner r(s, corpus());
  EXPECT_THROW(r.run_to_end(), HarnessError);
}

TEST(Batch, RepeatedRunsAreIdentical) {
  const TrialPlan plan = load_plan(data() / "plans" / "pain_trial_3.json");
  const TrialResult a = run_trial(plan, 0, corpus());
  const TrialResult b = run_trial(plan, 0, corpus());
  EXPECT_EQ(a.events, b.events);
  EXPECT_EQ(force_trace_csv(a.trace), force_trace_csv(b.trace));
  EXPECT_EQ(a.summary, b.summary);
}

TEST(Batch, WritesArtifacts) {
  const TrialPlan plan = load_plan(data() / "plans" / "pain_trial_1.json");
  const BatchResult batch = run_batch(plan, corpus());
  const auto dir = std::filesystem::temp_directory_path() / "dressguard_artifacts_test";
  std::filesystem::remove_all(dir);
  write_artifacts(plan, batch, dir, Dialect::HumanIntervention);
  for (const char* f : {"trial_01.jsonl", "trial_01.txt", "trial_01_force.csv", "trials.csv",
                        "summary.csv", "breakdown.csv", "summary.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const std::string jsonl = dressguard::testing::read_text((dir / "trial_01.jsonl").string());
  EXPECT_EQ(import_jsonl(jsonl), batch.trials[0].events);
  std::filesystem::remove_all(dir);
}

TEST(ForceCsv, HeaderAndOneRowPerTick) {
  TrialRunner r(assist_scenario(), corpus());
  for (int i = 0; i < 25; ++i) r.tick();
  const std::string csv = force_trace_csv(r.trace());
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 26);
  EXPECT_EQ(csv.rfind("t,", 0), 0u);
}

TEST(Golden, ReplaysAtBothTicks) {
  const GoldenVerdict a = replay_golden(data());
  EXPECT_TRUE(a.pass) << a.report;
  const GoldenVerdict b = replay_golden(data(), 0.005);
  EXPECT_TRUE(b.pass) << b.report;
  EXPECT_EQ(a.durations.size(), b.durations.size());
}

TEST(Golden, DetectsAStructuralDifference) {
  const Scenario s = load_scenario(data() / "scenarios" / "golden_autonomous.json");
  std::string fixture =
      dressguard::testing::read_text((data() / "golden" / "autonomous_reference.txt").string());
  fixture.insert(0, "Robot stopped at: 2024-03-27 10:35:31.000000\n");
  const GoldenVerdict v = replay_golden(s, fixture, 0.02);
  EXPECT_FALSE(v.pass);
  EXPECT_FALSE(v.report.empty());
}
