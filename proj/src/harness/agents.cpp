#include "dressguard/agents.hpp"

#include <algorithm>

#include "dressguard/intent.hpp"

namespace dressguard {

namespace {

constexpr const char* kWillAssist = "Yes, I will adjust the garment.";
constexpr const char* kFixed = "I have fixed the snag please resume";
constexpr const char* kCannot = "I cannot resolve this snag";
constexpr const char* kDecline = "No I cannot do it";
constexpr const char* kAbort = "Abort the task";
constexpr const char* kAuto = "Try to resolve it yourself";
constexpr const char* kHurts = "That hurts";
constexpr const char* kSlowDown = "Slow down";
constexpr const char* kGentler = "Be more gentle";
constexpr const char* kSpeedFine = "This speed is fine";
constexpr const char* kResume = "Resume";

// Settled force below which the user considers the garment free.
constexpr double kFreeForce = 15.0;

}  // namespace

ScriptedUser::ScriptedUser(AgentSpec spec) : spec_(std::move(spec)) {}

bool ScriptedUser::assists() const { return spec_.kind != AgentKind::NonAssistive; }

void ScriptedUser::schedule(double due, std::string text) {
  pending_.push_back({due, AgentAction{false, std::move(text)}, false});
}

void ScriptedUser::react(const std::string& robot_text, double t) {
  const auto kind = prompt_kind_from_text(robot_text);
  if (!kind) return;
  const double due = t + spec_.delay_s;
  switch (*kind) {
    case PromptKind::SnagAssist:
      schedule(due, assists() ? kWillAssist : kDecline);
      break;
    case PromptKind::AssistConfirm:
      pending_.push_back({due + spec_.assist_wait, {}, true});
      break;
    case PromptKind::SnagEscalate:
      schedule(due, spec_.escalate_to_auto || !assists() ? kAuto : kAbort);
      break;
    case PromptKind::PainChoice:
      if (gentle_left_ > 0) {
        gentle_left_ -= 1;
        schedule(due, kSlowDown);
      } else {
        schedule(due, kSpeedFine);
      }
      break;
    case PromptKind::SpeedCheck:
      if (gentle_left_ > 0) {
        gentle_left_ -= 1;
        schedule(due, kGentler);
      } else {
        schedule(due, kSpeedFine);
      }
      break;
    case PromptKind::Paused:
      schedule(due, kResume);
      break;
    case PromptKind::PainAbort:
    case PromptKind::Aborted:
      break;
  }
}

std::vector<AgentAction> ScriptedUser::observe(const AgentView& view) {
  if (spec_.kind == AgentKind::EStopper) {
    if (estop_armed_ && view.force >= spec_.estop_threshold) {
      estop_armed_ = false;
      pending_.push_back({view.t + spec_.delay_s, AgentAction{true, {}}, false});
    }
  } else {
    for (const std::string& said : view.robot_said) react(said, view.t);
    if (next_pain_ < spec_.pain.size()) {
      const PainReport& r = spec_.pain[next_pain_];
      if (view.segment == r.segment && view.progress >= r.progress) {
        next_pain_ += 1;
        gentle_left_ = r.gentle;
        schedule(view.t + spec_.delay_s, kHurts);
      }
    }
  }

  std::vector<AgentAction> due;
  // Stable order: actions fire in the order they were scheduled.
  std::stable_sort(pending_.begin(), pending_.end(),
                   [](const Pending& a, const Pending& b) { return a.due < b.due; });
  while (!pending_.empty() && pending_.front().due <= view.t + 1e-9) {
    Pending p = std::move(pending_.front());
    pending_.pop_front();
    if (p.judge_assist) {
      due.push_back({false, view.force < kFreeForce ? kFixed : kCannot});
    } else {
      due.push_back(std::move(p.action));
    }
  }
  return due;
}

std::unique_ptr<UserAgent> make_agent(const AgentSpec& spec) {
  return std::make_unique<ScriptedUser>(spec);
}

}  // namespace dressguard
