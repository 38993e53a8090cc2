#include <cstdlib>

#include <fmt/format.h>

#include "dressguard/harness.hpp"

#ifndef DRESSGUARD_DATA_DIR
#define DRESSGUARD_DATA_DIR "data"
#endif

namespace dressguard {

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("DRESSGUARD_DATA_DIR"); env && *env) return env;
  return DRESSGUARD_DATA_DIR;
}

Corpus default_corpus() { return Corpus::load(default_data_dir() / "corpus" / "nlu.yml"); }

TrialRunner::TrialRunner(Scenario scenario, Corpus corpus, std::unique_ptr<UserAgent> agent)
    : scenario_(std::move(scenario)),
      world_(scenario_.world),
      controller_(scenario_.strategy),
      dialogue_(std::move(corpus),
                DialogueManager::Options{.silent = scenario_.strategy.variant == Variant::Baseline}),
      agent_(std::move(agent)) {
  for (const SnagSpec& s : scenario_.snags) world_.inject_snag(s);
  // The garment is already in the gripper when a trial begins.
  const TickOutput out = controller_.start(0.0);
  for (const RobotCommand& c : out.commands) world_.apply_command(c);
}

void TrialRunner::post_chat(std::string text) { inbox_.push_back({false, std::move(text)}); }

void TrialRunner::post_estop() { inbox_.push_back({true, {}}); }

void TrialRunner::record(const ControlEvent& e, TickReport& report) {
  log_.record(e);
  report.events.push_back(e);
  if (e.kind == EventKind::UserPrompted) report.robot_said.push_back(e.text);
}

std::string TrialRunner::engaged_snag() const {
  const ActiveSnag* best = nullptr;
  for (const ActiveSnag& s : world_.state().active_snags) {
    if (!s.engaged || s.released) continue;
    if (!best || s.tension > best->tension) best = &s;
  }
  return best ? best->spec.id : std::string();
}

TickReport TrialRunner::tick() {
  if (terminal()) throw HarnessError("trial already finished");
  TickReport report;
  report.sample = world_.step();
  const double t = report.sample.t;

  const auto& reached = world_.reached();
  for (; reached_seen_ < reached.size(); ++reached_seen_) {
    ControlEvent e{.t = t, .kind = EventKind::WaypointReached};
    e.text = std::string(to_string(reached[reached_seen_]));
    record(e, report);
  }

  std::vector<Intent> intents;
  auto take = [&](const DispatchResult& d) {
    if (!d.reply.empty()) {
      ControlEvent e{.t = t, .kind = EventKind::UserPrompted};
      e.text = d.reply;
      record(e, report);
    }
    if (d.forwarded) intents.push_back(*d.forwarded);
  };
  while (!inbox_.empty()) {
    Input in = std::move(inbox_.front());
    inbox_.pop_front();
    if (in.estop) {
      intents.push_back(Intent::EmergencyStop);
      continue;
    }
    ControlEvent e{.t = t, .kind = EventKind::UserResponded};
    e.text = in.text;
    record(e, report);
    take(dialogue_.dispatch(in.text, t));
  }
  const auto& ds = dialogue_.state();
  if (ds.active_prompt && t - ds.prompt_opened_at + 1e-9 >= scenario_.prompt_timeout) {
    take(dialogue_.prompt_timeout(t));
  }

  const RobotFeedback fb{world_.state().trajectory_complete, world_.idle()};
  TickOutput out = controller_.tick(report.sample, intents, fb);

  bool uttered = false;
  std::string deduped;
  if (out.prompt) {
    uttered = dialogue_.present(*out.prompt, t);
    if (!uttered) deduped = render_prompt(*out.prompt).text;
  }
  for (const ControlEvent& e : out.events) {
    if (e.kind == EventKind::UserPrompted && !uttered && e.text == deduped) continue;
    record(e, report);
  }

  for (const RobotCommand& c : out.commands) world_.apply_command(c);
  if (out.assist_started) {
    const std::string id = engaged_snag();
    if (!id.empty()) world_.begin_assist(id);
  }

  const WorldState& ws = world_.state();
  trace_.push_back({t, report.sample.magnitude, ws.last_velocity, ws.speed_scale, out.mode});
  commands_.push_back(out.commands);

  report.commands = std::move(out.commands);
  report.prompt = out.prompt;
  report.mode = out.mode;
  report.speed_scale = ws.speed_scale;
  report.segment = ws.trajectory.waypoints[ws.trajectory.target_index].label;
  report.progress = ws.trajectory.segment_progress;
  report.terminal = terminal();

  if (agent_ && !report.terminal) {
    AgentView view{t, report.sample.magnitude, report.segment, report.progress, report.robot_said};
    for (AgentAction& a : agent_->observe(view)) {
      inbox_.push_back({a.estop, std::move(a.text)});
    }
  }
  return report;
}

void TrialRunner::run_to_end() {
  while (!terminal()) {
    if (time() > scenario_.max_time) {
      throw HarnessError(fmt::format("trial '{}' still running at t={:.2f}s (mode {})",
                                     scenario_.name, time(), to_string(controller_.mode())));
    }
    tick();
  }
}

TrialResult run_scenario(const Scenario& scenario, const AgentSpec* agent, const Corpus& corpus) {
  TrialRunner runner(scenario, corpus, agent ? make_agent(*agent) : nullptr);
  runner.run_to_end();
  TrialResult r;
  r.events = runner.log().events();
  r.trace = runner.trace();
  r.commands = runner.command_history();
  r.summary = summarize_trial(r.events);
  r.scenario = scenario;
  return r;
}

TrialResult run_trial(const TrialPlan& plan, int index, const Corpus& corpus) {
  return run_scenario(trial_scenario(plan, index), &plan.agent, corpus);
}

BatchResult run_batch(const TrialPlan& plan, const Corpus& corpus) {
  if (plan.agent.kind == AgentKind::EStopper && plan.scenario.strategy.variant != Variant::Baseline) {
    fmt::print(stderr, "warning: plan '{}' pairs an e-stop user with the {} strategy\n", plan.name,
               to_string(plan.scenario.strategy.variant));
  }
  BatchResult b;
  std::vector<TrialSummary> parts;
  for (int i = 0; i < plan.repetitions; ++i) {
    b.trials.push_back(run_trial(plan, i, corpus));
    parts.push_back(b.trials.back().summary);
  }
  b.summary = merge(parts);
  return b;
}

}  // namespace dressguard
