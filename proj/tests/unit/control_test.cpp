#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "dressguard/hazard_control.hpp"

using namespace dressguard;

namespace {

constexpr double kDt = 0.01;

bool has(const TickOutput& out, CommandKind kind) {
  return std::any_of(out.commands.begin(), out.commands.end(),
                     [&](const RobotCommand& c) { return c.kind == kind; });
}

bool has(const TickOutput& out, EventKind kind) {
  return std::any_of(out.events.begin(), out.events.end(),
                     [&](const ControlEvent& e) { return e.kind == kind; });
}

const ControlEvent* find(const TickOutput& out, EventKind kind) {
  for (const auto& e : out.events) {
    if (e.kind == kind) return &e;
  }
  return nullptr;
}

bool stopped(const TickOutput& out) {
  return std::any_of(out.commands.begin(), out.commands.end(),
                     [](const RobotCommand& c) { return c.is_zero_velocity(); });
}

// Drives a controller on a fixed tick grid.
struct Driver {
  Controller c;
  long k = 0;

  explicit Driver(StrategyConfig cfg) : c(std::move(cfg)) { c.start(0.0); }

  double now() const { return static_cast<double>(k) * kDt; }

  TickOutput tick(double f, std::vector<Intent> intents = {}, RobotFeedback fb = {}) {
    ++k;
    return c.tick({now(), f}, intents, fb);
  }

  // Ticks at a constant force until `pred` holds on an output, or `limit` ticks.
  template <class Pred>
  std::optional<TickOutput> until(double f, Pred pred, int limit = 10000) {
    for (int i = 0; i < limit; ++i) {
      TickOutput out = tick(f);
      if (pred(out)) return out;
    }
    return std::nullopt;
  }
};

StrategyConfig variant(Variant v) {
  StrategyConfig cfg;
  cfg.variant = v;
  return cfg;
}

}  // namespace

TEST(ForceBands, Boundaries) {
  const StrategyConfig cfg;
  EXPECT_EQ(classify_force(0.0, cfg), InteractionState::Normal);
  EXPECT_EQ(classify_force(15.0, cfg), InteractionState::Normal);
  EXPECT_EQ(classify_force(std::nextafter(15.0, 16.0), cfg), InteractionState::PotentialSnag);
  EXPECT_EQ(classify_force(35.0, cfg), InteractionState::PotentialSnag);
  EXPECT_EQ(classify_force(std::nextafter(35.0, 36.0), cfg), InteractionState::Hazardous);
  EXPECT_EQ(classify_force(1e6, cfg), InteractionState::Hazardous);
}

TEST(ForceBands, RejectsInvalidMagnitudes) {
  const StrategyConfig cfg;
  EXPECT_THROW(classify_force(-0.1, cfg), ControlError);
  EXPECT_THROW(classify_force(std::numeric_limits<double>::quiet_NaN(), cfg), ControlError);
  EXPECT_THROW(classify_force(std::numeric_limits<double>::infinity(), cfg), ControlError);
}

TEST(SpeedLadderTest, StepsDownThenRequiresAbort) {
  SpeedLadder l;
  EXPECT_EQ(l.scale(), 1.0);
  l = std::get<SpeedLadder>(reduce_speed(l));
  EXPECT_EQ(l.scale(), 0.6);
  l = std::get<SpeedLadder>(reduce_speed(l));
  EXPECT_EQ(l.scale(), 0.3);
  EXPECT_TRUE(l.at_minimum());
  EXPECT_TRUE(std::holds_alternative<AbortRequired>(reduce_speed(l)));
}

TEST(StrategyConfigTest, Validation) {
  StrategyConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.t15 = 40.0;
  EXPECT_THROW(cfg.validate(), ControlError);
  cfg = {};
  cfg.speed_levels = {1.0, 1.0};
  EXPECT_THROW(cfg.validate(), ControlError);
  cfg = {};
  cfg.speed_levels = {1.0, 0.0};
  EXPECT_THROW(cfg.validate(), ControlError);
  cfg = {};
  cfg.timeout = 0.0;
  EXPECT_THROW(Controller{cfg}, ControlError);
  EXPECT_THROW(variant_from_string("sometimes"), ControlError);
}

TEST(ControllerStart, IdleWaitsForStartIntent) {
  Controller c(StrategyConfig{});
  TickOutput out = c.tick({0.01, 3.0}, {});
  EXPECT_EQ(out.mode, ControllerMode::Idle);
  out = c.tick({0.02, 3.0}, {Intent::StartDressing});
  EXPECT_EQ(out.mode, ControllerMode::TrajectoryMode);
  EXPECT_TRUE(has(out, CommandKind::Advance));
  EXPECT_THROW(c.start(0.03), ControlError);
}

TEST(ControllerStart, EmergencyStopFromIdle) {
  Controller c(StrategyConfig{});
  const TickOutput out = c.tick({0.01, 3.0}, {Intent::EmergencyStop});
  EXPECT_TRUE(has(out, EventKind::EmergencyStop));
  EXPECT_TRUE(c.terminal());
  EXPECT_THROW(c.tick({0.02, 3.0}, {}), ControlError);
}

TEST(Monitor, PotentialEpisodeOpensAndClosesQuietly) {
  Driver d(variant(Variant::HumanIntervention));
  d.tick(3.0);
  TickOutput out = d.tick(20.0);
  const ControlEvent* detect = find(out, EventKind::PotentialSnagDetected);
  ASSERT_NE(detect, nullptr);
  EXPECT_EQ(detect->force, 20.0);
  EXPECT_TRUE(out.commands.empty());
  out = d.tick(25.0);
  EXPECT_FALSE(has(out, EventKind::PotentialSnagDetected));
  // Between the re-arm level and the threshold the episode stays open.
  out = d.tick(14.5);
  EXPECT_TRUE(d.c.episode_open());
  out = d.tick(13.0);
  const ControlEvent* closed = find(out, EventKind::SnagResolved);
  ASSERT_NE(closed, nullptr);
  EXPECT_EQ(closed->outcome, EpisodeOutcome::PotentialOnly);
  EXPECT_EQ(closed->peak, 25.0);
  EXPECT_NEAR(*closed->duration, 3 * kDt, 1e-12);
}

TEST(Monitor, CrossingLoggedOncePerExcursion) {
  Driver d(variant(Variant::Autonomous));
  int crossings = 0;
  for (double f : {20.0, 36.0, 35.5, 36.0, 34.5, 36.0, 33.0, 37.0}) {
    crossings += has(d.tick(f), EventKind::Cross35);
  }
  // Re-arms only after dropping a hysteresis band below the threshold.
  EXPECT_EQ(crossings, 2);
}

TEST(HumanIntervention, HazardStopsAndAsksForHelp) {
  Driver d(variant(Variant::HumanIntervention));
  d.tick(20.0);
  const TickOutput out = d.tick(36.0);
  EXPECT_TRUE(stopped(out));
  EXPECT_TRUE(has(out, CommandKind::Compliance));
  EXPECT_TRUE(has(out, EventKind::Cross35));
  EXPECT_TRUE(has(out, EventKind::RobotStopped));
  EXPECT_TRUE(has(out, EventKind::ComplianceEntered));
  ASSERT_TRUE(out.prompt);
  EXPECT_EQ(*out.prompt, PromptKind::SnagAssist);
  EXPECT_EQ(d.c.mode(), ControllerMode::ComplianceMode);
}

TEST(HumanIntervention, UserFixesTheSnag) {
  Driver d(variant(Variant::HumanIntervention));
  d.tick(20.0);
  d.tick(36.0);
  TickOutput out = d.tick(30.0, {Intent::SnagAssist});
  EXPECT_TRUE(out.assist_started);
  EXPECT_EQ(out.prompt, PromptKind::AssistConfirm);
  // Nothing times out while the user works.
  for (int i = 0; i < 6000; ++i) ASSERT_EQ(d.tick(30.0).mode, ControllerMode::ComplianceMode);
  out = d.tick(10.0, {Intent::ConfirmFixed});
  EXPECT_TRUE(has(out, CommandKind::Resume));
  const ControlEvent* back = find(out, EventKind::TrajectoryModeEntered);
  ASSERT_NE(back, nullptr);
  EXPECT_EQ(back->text, "snag_fixed");
  const ControlEvent* closed = find(out, EventKind::SnagResolved);
  ASSERT_NE(closed, nullptr);
  EXPECT_EQ(closed->outcome, EpisodeOutcome::ResolvedByUser);
  EXPECT_EQ(closed->peak, 36.0);
}

TEST(HumanIntervention, CannotResolveEscalatesThenAutoRecovers) {
  Driver d(variant(Variant::HumanIntervention));
  d.tick(36.0);
  TickOutput out = d.tick(30.0, {Intent::CannotResolve});
  EXPECT_EQ(out.prompt, PromptKind::SnagEscalate);
  out = d.tick(30.0, {Intent::AutoRecover});
  EXPECT_TRUE(has(out, EventKind::RecoveryEntered));
  EXPECT_TRUE(has(out, CommandKind::Retract));
  EXPECT_EQ(d.c.mode(), ControllerMode::RecoveryMode);
  out = d.tick(12.0);
  const ControlEvent* closed = find(out, EventKind::SnagResolved);
  ASSERT_NE(closed, nullptr);
  EXPECT_EQ(closed->outcome, EpisodeOutcome::ResolvedAutonomously);
  EXPECT_TRUE(has(out, CommandKind::Resume));
}

TEST(HumanIntervention, IntentOutsidePromptIsUnrecognized) {
  Driver d(variant(Variant::HumanIntervention));
  d.tick(36.0);
  const TickOutput out = d.tick(30.0, {Intent::MoreGentle});
  const ControlEvent* e = find(out, EventKind::UnrecognizedResponse);
  ASSERT_NE(e, nullptr);
  EXPECT_EQ(e->text, "more_gentle");
  EXPECT_EQ(out.prompt, PromptKind::SnagAssist);
}

TEST(HumanIntervention, AbortReleasesTheGarment) {
  Driver d(variant(Variant::HumanIntervention));
  d.tick(36.0);
  TickOutput out = d.tick(30.0, {Intent::AbortTask});
  EXPECT_TRUE(has(out, CommandKind::OpenGripper));
  const ControlEvent* g = find(out, EventKind::GripperOpened);
  ASSERT_NE(g, nullptr);
  EXPECT_TRUE(g->text.empty());
  EXPECT_EQ(find(out, EventKind::SnagResolved)->outcome, EpisodeOutcome::Aborted);
  auto safe = d.until(3.0, [](const TickOutput& o) { return has(o, EventKind::MovedToSafe); });
  ASSERT_TRUE(safe);
  auto home = d.until(3.0, [](const TickOutput& o) { return has(o, EventKind::MovedHome); });
  ASSERT_TRUE(home);
  auto done = d.until(3.0, [](const TickOutput& o) { return has(o, EventKind::TrialAborted); });
  ASSERT_TRUE(done);
  EXPECT_EQ(done->prompt, PromptKind::Aborted);
  EXPECT_TRUE(d.c.terminal());
}

TEST(HumanIntervention, PauseAndResumeRestoreCompliance) {
  Driver d(variant(Variant::HumanIntervention));
  d.tick(36.0);
  TickOutput out = d.tick(30.0, {Intent::PauseDressing});
  EXPECT_EQ(d.c.mode(), ControllerMode::PausedForUser);
  EXPECT_EQ(out.prompt, PromptKind::Paused);
  out = d.tick(30.0, {Intent::ResumeDressing});
  EXPECT_EQ(d.c.mode(), ControllerMode::ComplianceMode);
  EXPECT_TRUE(has(out, CommandKind::Compliance));
  EXPECT_EQ(out.prompt, PromptKind::SnagAssist);
}

TEST(Autonomous, RecoversWithoutAsking) {
  StrategyConfig cfg = variant(Variant::Autonomous);
  cfg.compliance_dwell = 0.5;
  Driver d(cfg);
  d.tick(20.0);
  TickOutput out = d.tick(36.0);
  EXPECT_FALSE(out.prompt);
  EXPECT_TRUE(has(out, EventKind::ComplianceEntered));
  const double entered = d.now();
  auto rec = d.until(30.0, [](const TickOutput& o) { return has(o, EventKind::RecoveryEntered); });
  ASSERT_TRUE(rec);
  EXPECT_NEAR(d.now() - entered, 0.5, 1e-9);
  out = d.tick(10.0);
  EXPECT_EQ(find(out, EventKind::SnagResolved)->outcome, EpisodeOutcome::ResolvedAutonomously);
  EXPECT_TRUE(has(out, EventKind::TrajectoryModeEntered));
}

TEST(Autonomous, RetractThenAdvanceAgain) {
  StrategyConfig cfg = variant(Variant::Autonomous);
  cfg.compliance_dwell = 0.0;
  cfg.retract_time = 0.3;
  Driver d(cfg);
  d.tick(36.0);
  TickOutput out = d.tick(30.0);
  ASSERT_TRUE(has(out, EventKind::RecoveryEntered));
  const double began = d.now();
  auto fwd = d.until(30.0, [](const TickOutput& o) { return has(o, CommandKind::Resume); });
  ASSERT_TRUE(fwd);
  EXPECT_NEAR(d.now() - began, 0.3, 1e-9);
  // Forward motion loads the snag again; the next hazard re-enters compliance.
  out = d.tick(36.5);
  EXPECT_TRUE(has(out, EventKind::ComplianceEntered));
  EXPECT_TRUE(stopped(out));
}

TEST(Autonomous, TimeoutAbortSequence) {
  StrategyConfig cfg = variant(Variant::Autonomous);
  cfg.abort_settle = 0.78;
  cfg.gripper_dwell = 2.0;
  Driver d(cfg);
  d.tick(20.0);
  const double detect = d.now();
  d.tick(36.0);
  // Stays stuck in the potential band; attempts never clear it.
  auto abort = d.until(30.0, [&](const TickOutput& o) { return o.mode == ControllerMode::Aborting; });
  ASSERT_TRUE(abort);
  const double elapsed = d.now() - detect;
  EXPECT_GT(elapsed, 40.0);
  EXPECT_LE(elapsed, 40.0 + kDt + 1e-9);
  EXPECT_TRUE(stopped(*abort));
  const double decided = d.now();

  auto opened = d.until(30.0, [](const TickOutput& o) { return has(o, EventKind::GripperOpened); });
  ASSERT_TRUE(opened);
  EXPECT_NEAR(d.now() - decided, 0.78, 1e-9);
  const ControlEvent* g = find(*opened, EventKind::GripperOpened);
  EXPECT_EQ(g->text, "timeout");
  EXPECT_EQ(g->duration, 40.0);
  EXPECT_EQ(find(*opened, EventKind::SnagResolved)->outcome, EpisodeOutcome::Timeout);
  const double released = d.now();

  auto safe = d.until(3.0, [](const TickOutput& o) { return has(o, EventKind::MovedToSafe); });
  ASSERT_TRUE(safe);
  EXPECT_NEAR(d.now() - released, 2.0, 1e-9);
  EXPECT_TRUE(has(*safe, EventKind::RobotStopped));
  EXPECT_TRUE(has(*safe, CommandKind::MoveSafe));
}

TEST(Autonomous, TimeoutHoldsDuringPainDialogue) {
  Driver d(variant(Variant::Autonomous));
  d.tick(36.0);
  const double detect = d.now();
  d.tick(30.0, {Intent::ReportPain});
  auto abort = d.until(30.0, [](const TickOutput& o) { return o.mode == ControllerMode::Aborting; });
  ASSERT_TRUE(abort);
  EXPECT_LE(d.now() - detect, 40.0 + kDt + 1e-9);
}

TEST(Autonomous, HazardDuringTransitHaltsIt) {
  StrategyConfig cfg = variant(Variant::Autonomous);
  cfg.abort_settle = 0.0;
  cfg.gripper_dwell = 0.0;
  Driver d(cfg);
  d.tick(36.0);
  d.until(30.0, [](const TickOutput& o) { return has(o, EventKind::MovedToSafe); });
  TickOutput out = d.tick(40.0, {}, {.motion_idle = false});
  EXPECT_TRUE(stopped(out));
  out = d.tick(10.0, {}, {.motion_idle = false});
  EXPECT_TRUE(has(out, CommandKind::MoveSafe));
}

TEST(PainLadder, GentlerTwiceThenAbort) {
  Driver d(variant(Variant::PainLadder));
  TickOutput out = d.tick(5.0, {Intent::ReportPain});
  EXPECT_TRUE(has(out, EventKind::PainReported));
  EXPECT_TRUE(stopped(out));
  EXPECT_EQ(out.prompt, PromptKind::PainChoice);

  out = d.tick(5.0, {Intent::MoreGentle});
  const ControlEvent* r = find(out, EventKind::SpeedReduced);
  ASSERT_NE(r, nullptr);
  EXPECT_EQ(r->from, 1.0);
  EXPECT_EQ(r->to, 0.6);
  EXPECT_EQ(out.prompt, PromptKind::SpeedCheck);
  EXPECT_EQ(d.c.mode(), ControllerMode::TrajectoryMode);

  d.tick(5.0, {Intent::MoreGentle});
  EXPECT_EQ(d.c.ladder().scale(), 0.3);

  d.tick(5.0, {Intent::ReportPain});
  out = d.tick(5.0, {Intent::MoreGentle});
  EXPECT_EQ(out.prompt, PromptKind::PainAbort);
  EXPECT_TRUE(has(out, CommandKind::OpenGripper));
  EXPECT_EQ(d.c.mode(), ControllerMode::Aborting);
  EXPECT_EQ(d.c.ladder().scale(), 0.3);
}

TEST(PainLadder, SpeedOkResumes) {
  Driver d(variant(Variant::PainLadder));
  d.tick(5.0, {Intent::ReportPain});
  const TickOutput out = d.tick(5.0, {Intent::SpeedOk});
  EXPECT_TRUE(has(out, CommandKind::Resume));
  EXPECT_EQ(d.c.mode(), ControllerMode::TrajectoryMode);
  EXPECT_FALSE(d.c.awaiting());
}

TEST(Baseline, NeverIntervenes) {
  Driver d(variant(Variant::Baseline));
  for (double f : {20.0, 36.0, 55.0, 80.0}) {
    const TickOutput out = d.tick(f, {Intent::ReportPain, Intent::MoreGentle});
    EXPECT_TRUE(out.commands.empty());
    EXPECT_FALSE(out.prompt);
    EXPECT_EQ(out.mode, ControllerMode::TrajectoryMode);
  }
  const TickOutput out = d.tick(80.0, {Intent::EmergencyStop});
  const ControlEvent* e = find(out, EventKind::EmergencyStop);
  ASSERT_NE(e, nullptr);
  EXPECT_EQ(e->force, 80.0);
  EXPECT_TRUE(d.c.terminal());
}

TEST(Completion, TrajectoryEndClosesOpenEpisode) {
  Driver d(variant(Variant::HumanIntervention));
  d.tick(20.0);
  const TickOutput out = d.tick(20.0, {}, {.trajectory_complete = true});
  EXPECT_EQ(find(out, EventKind::SnagResolved)->outcome, EpisodeOutcome::PotentialOnly);
  EXPECT_TRUE(has(out, EventKind::TrialCompleted));
  EXPECT_EQ(d.c.mode(), ControllerMode::Completed);
}

// Random force and intent streams against the core safety guarantees.
TEST(ControllerProperties, HazardAlwaysStopsAndSpeedNeverRises) {
  const Variant variants[] = {Variant::HumanIntervention, Variant::Autonomous,
                              Variant::PainLadder};
  const Intent pool[] = {Intent::SnagAssist,   Intent::ConfirmFixed,   Intent::CannotResolve,
                         Intent::AutoRecover,  Intent::AbortTask,      Intent::MoreGentle,
                         Intent::SpeedOk,      Intent::ReportPain,     Intent::PauseDressing,
                         Intent::ResumeDressing};
  std::mt19937_64 rng(2024);
  for (int run = 0; run < 300; ++run) {
    StrategyConfig cfg = variant(variants[run % 3]);
    cfg.compliance_dwell = 0.2;
    cfg.timeout = 5.0;
    Driver d(cfg);
    double scale = d.c.ladder().scale();
    double f = 5.0;
    for (int i = 0; i < 1500 && !d.c.terminal(); ++i) {
      f = std::clamp(f + std::normal_distribution<double>(0.0, 3.0)(rng), 0.0, 70.0);
      std::vector<Intent> intents;
      if (rng() % 40 == 0) intents.push_back(pool[rng() % std::size(pool)]);
      const TickOutput out = d.tick(f, intents, {.motion_idle = rng() % 3 == 0});
      if (f > cfg.t35) ASSERT_TRUE(stopped(out)) << "run " << run << " t=" << d.now();
      ASSERT_LE(d.c.ladder().scale(), scale);
      scale = d.c.ladder().scale();
    }
  }
}
