#pragma once

#include <deque>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dressguard/agents.hpp"
#include "dressguard/hazard_control.hpp"
#include "dressguard/intent.hpp"
#include "dressguard/scenario.hpp"
#include "dressguard/sim_env.hpp"
#include "dressguard/telemetry.hpp"

namespace dressguard {

class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::filesystem::path default_data_dir();
Corpus default_corpus();

struct TraceSample {
  double t = 0.0;
  double force = 0.0;
  double velocity = 0.0;
  double speed_scale = 1.0;
  ControllerMode mode = ControllerMode::Idle;
};

/// Everything that happened on one tick, for live streaming.
struct TickReport {
  ForceSample sample;
  std::vector<ControlEvent> events;
  std::vector<RobotCommand> commands;
  std::vector<std::string> robot_said;
  std::optional<PromptKind> prompt;
  ControllerMode mode = ControllerMode::Idle;
  double speed_scale = 1.0;
  WaypointLabel segment = WaypointLabel::Hand;
  double progress = 0.0;
  bool terminal = false;
};

/// Composes world, controller, dialogue and an optional scripted user into
/// one fixed-tick loop. Chat and e-stop inputs are queued and consumed at the
/// start of the next tick.
class TrialRunner {
 public:
  TrialRunner(Scenario scenario, Corpus corpus, std::unique_ptr<UserAgent> agent = nullptr);

  void post_chat(std::string text);
  void post_estop();

  TickReport tick();
  /// Ticks until a terminal event; throws HarnessError past max_time.
  void run_to_end();

  bool terminal() const { return controller_.terminal(); }
  double time() const { return world_.state().sim_time; }
  const Scenario& scenario() const { return scenario_; }
  const World& world() const { return world_; }
  const Controller& controller() const { return controller_; }
  const DialogueManager& dialogue() const { return dialogue_; }
  const EventLog& log() const { return log_; }
  const std::vector<TraceSample>& trace() const { return trace_; }
  /// Commands issued on each tick, aligned with trace().
  const std::vector<std::vector<RobotCommand>>& command_history() const { return commands_; }

 private:
  struct Input {
    bool estop = false;
    std::string text;
  };

  void record(const ControlEvent& e, TickReport& report);
  std::string engaged_snag() const;

  Scenario scenario_;
  World world_;
  Controller controller_;
  DialogueManager dialogue_;
  std::unique_ptr<UserAgent> agent_;
  EventLog log_;
  std::vector<TraceSample> trace_;
  std::vector<std::vector<RobotCommand>> commands_;
  std::deque<Input> inbox_;
  std::vector<std::string> said_last_tick_;
  std::size_t reached_seen_ = 0;
  bool started_ = false;
};

struct TrialResult {
  std::vector<ControlEvent> events;
  std::vector<TraceSample> trace;
  std::vector<std::vector<RobotCommand>> commands;
  TrialSummary summary;
  Scenario scenario;
};

TrialResult run_trial(const TrialPlan& plan, int index, const Corpus& corpus);
TrialResult run_scenario(const Scenario& scenario, const AgentSpec* agent, const Corpus& corpus);

struct BatchResult {
  std::vector<TrialResult> trials;
  TrialSummary summary;
};

BatchResult run_batch(const TrialPlan& plan, const Corpus& corpus);

/// Writes per-trial jsonl/txt/force csv plus summary csv/json into `dir`.
void write_artifacts(const TrialPlan& plan, const BatchResult& batch,
                     const std::filesystem::path& dir, Dialect dialect);

std::string force_trace_csv(const std::vector<TraceSample>& trace);

struct GoldenVerdict {
  bool pass = false;
  std::string report;  // first divergence, or a one-line summary on success
  std::vector<double> durations;
  std::string rendered;
};

/// Runs the golden autonomous scenario and compares it with the shipped
/// fixture text: line structure exactly (timestamps and numbers masked),
/// episode durations within `tolerance` seconds.
GoldenVerdict replay_golden(const Scenario& scenario, const std::string& fixture_text,
                            double tolerance);
GoldenVerdict replay_golden(const std::filesystem::path& data_dir, std::optional<double> dt = {});

}  // namespace dressguard
