#include "dressguard/hazard_control.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace dressguard {

namespace {

// Timer comparisons are made on sim-clock doubles built from tick counts.
constexpr double kTimeEps = 1e-9;

bool has_command(const TickOutput& out, CommandKind kind) {
  return std::any_of(out.commands.begin(), out.commands.end(),
                     [&](const RobotCommand& c) { return c.kind == kind; });
}

void ensure_pause(TickOutput& out) {
  if (!has_command(out, CommandKind::Pause)) out.commands.push_back(RobotCommand::pause());
}

bool timed_out(double elapsed, double limit) { return elapsed > limit + kTimeEps; }

ControlEvent event(double t, EventKind kind) { return ControlEvent{.t = t, .kind = kind}; }

}  // namespace

std::string_view to_string(InteractionState state) {
  switch (state) {
    case InteractionState::Normal: return "Normal";
    case InteractionState::PotentialSnag: return "PotentialSnag";
    case InteractionState::Hazardous: return "Hazardous";
  }
  return "?";
}

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::HumanIntervention: return "human_intervention";
    case Variant::Autonomous: return "autonomous";
    case Variant::PainLadder: return "pain_ladder";
    case Variant::Baseline: return "baseline";
  }
  return "?";
}

Variant variant_from_string(std::string_view name) {
  if (name == "human_intervention") return Variant::HumanIntervention;
  if (name == "autonomous") return Variant::Autonomous;
  if (name == "pain_ladder") return Variant::PainLadder;
  if (name == "baseline") return Variant::Baseline;
  throw ControlError(fmt::format("unknown strategy variant '{}'", name));
}

std::string_view to_string(ControllerMode mode) {
  switch (mode) {
    case ControllerMode::Idle: return "Idle";
    case ControllerMode::TrajectoryMode: return "TrajectoryMode";
    case ControllerMode::PausedForUser: return "PausedForUser";
    case ControllerMode::ComplianceMode: return "ComplianceMode";
    case ControllerMode::RecoveryMode: return "RecoveryMode";
    case ControllerMode::AwaitingIntent: return "AwaitingIntent";
    case ControllerMode::Aborting: return "Aborting";
    case ControllerMode::MovingToSafe: return "MovingToSafe";
    case ControllerMode::MovingHome: return "MovingHome";
    case ControllerMode::Aborted: return "Aborted";
    case ControllerMode::Completed: return "Completed";
  }
  return "?";
}

void StrategyConfig::validate() const {
  if (!(t15 < t35)) throw ControlError("t15 must be below t35");
  if (!(timeout > 0.0)) throw ControlError("timeout must be positive");
  if (compliance_dwell < 0.0 || abort_settle < 0.0 || gripper_dwell < 0.0) {
    throw ControlError("dwell times must be non-negative");
  }
  if (!(retract_step > 0.0) || retract_time < 0.0) {
    throw ControlError("retract_step must be positive");
  }
  if (hysteresis < 0.0) throw ControlError("hysteresis must be non-negative");
  if (speed_levels.empty()) throw ControlError("speed ladder needs at least one level");
  for (std::size_t i = 0; i < speed_levels.size(); ++i) {
    if (!(speed_levels[i] > 0.0) || speed_levels[i] > 1.0) {
      throw ControlError("speed levels must lie in (0, 1]");
    }
    if (i > 0 && !(speed_levels[i] < speed_levels[i - 1])) {
      throw ControlError("speed levels must be strictly decreasing");
    }
  }
}

InteractionState classify_force(double force, const StrategyConfig& cfg) {
  if (!std::isfinite(force) || force < 0.0) {
    throw ControlError(fmt::format("force {} is not a valid magnitude", force));
  }
  if (force <= cfg.t15) return InteractionState::Normal;
  if (force <= cfg.t35) return InteractionState::PotentialSnag;
  return InteractionState::Hazardous;
}

std::variant<SpeedLadder, AbortRequired> reduce_speed(const SpeedLadder& ladder) {
  if (ladder.at_minimum()) return AbortRequired{};
  SpeedLadder next = ladder;
  next.current_index += 1;
  return next;
}

Controller::Controller(StrategyConfig config) : config_(std::move(config)) {
  config_.validate();
  ladder_.levels = config_.speed_levels;
}

void Controller::set_mode(ControllerMode mode, double t) {
  mode_ = mode;
  mode_since_ = t;
}

TickOutput Controller::start(double t) {
  if (mode_ != ControllerMode::Idle) throw ControlError("controller already started");
  TickOutput out;
  set_mode(ControllerMode::TrajectoryMode, t);
  out.commands.push_back(RobotCommand::advance());
  out.mode = mode_;
  return out;
}

TickOutput Controller::tick(const ForceSample& sample, const std::vector<Intent>& intents,
                            const RobotFeedback& feedback) {
  if (terminal()) throw ControlError("controller is in a terminal mode");
  const double t = sample.t;
  const double f = sample.magnitude;
  classify_force(f, config_);  // validates the sample

  TickOutput out;
  if (mode_ == ControllerMode::Idle) {
    for (Intent intent : intents) {
      if (intent == Intent::StartDressing) {
        out = start(t);
      } else if (intent == Intent::EmergencyStop) {
        emergency_stop(t, f, out);
      }
      if (mode_ != ControllerMode::Idle) break;
    }
    prev_force_ = f;
    out.mode = mode_;
    return out;
  }

  monitor(t, f, out);
  for (Intent intent : intents) {
    if (terminal()) break;
    handle_intent(intent, t, f, out);
  }
  if (!terminal()) advance_timers(t, f, feedback, out);
  // Runs on the terminal tick too: a hazard still gets a stop command.
  if (active_variant()) react_to_hazard(t, f, out);
  prev_force_ = f;
  out.mode = mode_;
  return out;
}

void Controller::monitor(double t, double f, TickOutput& out) {
  auto open = [&] {
    episode_ = Episode{.detect_t = t, .peak = f};
    armed_ = false;
    ControlEvent e = event(t, EventKind::PotentialSnagDetected);
    e.force = f;
    out.events.push_back(e);
  };
  if (episode_) episode_->peak = std::max(episode_->peak, f);
  if (armed_ && !episode_ && f > config_.t15) open();
  if (cross_armed_ && f > config_.t35) {
    cross_armed_ = false;
    if (!episode_) open();
    episode_->escalated = true;
    ControlEvent e = event(t, EventKind::Cross35);
    e.force = f;
    out.events.push_back(e);
  }
  if (!armed_ && !episode_ && f < config_.t15 - config_.hysteresis) armed_ = true;
  if (!cross_armed_ && f < config_.t35 - config_.hysteresis) cross_armed_ = true;

  const bool nominal = mode_ == ControllerMode::TrajectoryMode ||
                       mode_ == ControllerMode::PausedForUser ||
                       mode_ == ControllerMode::AwaitingIntent;
  // Potential-only episodes close below the re-arm level so noise cannot chatter.
  if (episode_ && !episode_->escalated && nominal &&
      f < config_.resolve_threshold - config_.hysteresis) {
    close_episode(EpisodeOutcome::PotentialOnly, t, f, out);
  }
}

void Controller::close_episode(EpisodeOutcome outcome, double t, double f, TickOutput& out) {
  if (!episode_) return;
  ControlEvent e = event(t, EventKind::SnagResolved);
  e.force = f;
  e.duration = t - episode_->detect_t;
  e.peak = episode_->peak;
  e.outcome = outcome;
  out.events.push_back(e);
  episode_.reset();
  armed_ = f < config_.t15 - config_.hysteresis;
}

void Controller::ask(PromptKind kind, double t, TickOutput& out) {
  if (is_notification(kind)) {
    prompt_.reset();
  } else {
    prompt_ = kind;
  }
  out.prompt = kind;
  ControlEvent e = event(t, EventKind::UserPrompted);
  e.text = render_prompt(kind).text;
  out.events.push_back(std::move(e));
}

void Controller::unrecognized(Intent intent, double t, TickOutput& out) {
  ControlEvent e = event(t, EventKind::UnrecognizedResponse);
  e.text = std::string(to_string(intent));
  out.events.push_back(std::move(e));
  if (prompt_) ask(*prompt_, t, out);
}

void Controller::handle_intent(Intent intent, double t, double f, TickOutput& out) {
  if (intent == Intent::EmergencyStop) {
    emergency_stop(t, f, out);
    return;
  }
  if (!active_variant()) return;

  const auto prompt_is = [&](std::initializer_list<PromptKind> kinds) {
    return prompt_ && std::find(kinds.begin(), kinds.end(), *prompt_) != kinds.end();
  };

  switch (intent) {
    case Intent::ReportPain:
      handle_pain(t, out);
      return;

    case Intent::PauseDressing:
      if (mode_ == ControllerMode::PausedForUser) {
        ask(PromptKind::Paused, t, out);
        return;
      }
      if (mode_ == ControllerMode::TrajectoryMode || mode_ == ControllerMode::ComplianceMode ||
          mode_ == ControllerMode::RecoveryMode || mode_ == ControllerMode::AwaitingIntent) {
        saved_ = Saved{mode_, prompt_};
        ensure_pause(out);
        set_mode(ControllerMode::PausedForUser, t);
        ask(PromptKind::Paused, t, out);
        return;
      }
      break;

    case Intent::ResumeDressing:
      if (mode_ == ControllerMode::PausedForUser && saved_) {
        const Saved saved = *saved_;
        saved_.reset();
        prompt_.reset();
        set_mode(saved.mode, t);
        switch (saved.mode) {
          case ControllerMode::TrajectoryMode:
            out.commands.push_back(RobotCommand::resume());
            break;
          case ControllerMode::ComplianceMode:
            out.commands.push_back(RobotCommand::compliance());
            break;
          case ControllerMode::RecoveryMode:
            phase_ = RecoveryPhase::Advancing;
            out.commands.push_back(RobotCommand::resume());
            break;
          default:
            break;
        }
        if (saved.prompt) ask(*saved.prompt, t, out);
        return;
      }
      break;

    case Intent::SnagAssist:
      if (episode_ && prompt_is({PromptKind::SnagAssist, PromptKind::SnagEscalate})) {
        if (mode_ != ControllerMode::ComplianceMode) {
          ensure_pause(out);
          out.commands.push_back(RobotCommand::compliance());
          set_mode(ControllerMode::ComplianceMode, t);
        }
        episode_->autonomous = false;
        out.assist_started = true;
        ask(PromptKind::AssistConfirm, t, out);
        return;
      }
      break;

    case Intent::ConfirmFixed:
      if (prompt_is({PromptKind::SnagAssist, PromptKind::AssistConfirm})) {
        prompt_.reset();
        out.commands.push_back(RobotCommand::resume());
        set_mode(ControllerMode::TrajectoryMode, t);
        ControlEvent e = event(t, EventKind::TrajectoryModeEntered);
        e.text = "snag_fixed";
        out.events.push_back(std::move(e));
        close_episode(EpisodeOutcome::ResolvedByUser, t, f, out);
        return;
      }
      break;

    case Intent::CannotResolve:
      if (prompt_is({PromptKind::SnagAssist, PromptKind::AssistConfirm})) {
        ask(PromptKind::SnagEscalate, t, out);
        return;
      }
      break;

    case Intent::AutoRecover:
      if (episode_ && prompt_is({PromptKind::SnagAssist, PromptKind::SnagEscalate})) {
        prompt_.reset();
        episode_->autonomous = true;
        enter_recovery(t, out);
        return;
      }
      break;

    case Intent::AbortTask:
      if (prompt_is({PromptKind::SnagAssist, PromptKind::AssistConfirm, PromptKind::SnagEscalate,
                     PromptKind::PainChoice, PromptKind::SpeedCheck, PromptKind::Paused})) {
        start_abort(AbortReason::User, t, f, out);
        return;
      }
      break;

    case Intent::MoreGentle:
      if (prompt_is({PromptKind::PainChoice, PromptKind::SpeedCheck})) {
        handle_more_gentle(t, out);
        return;
      }
      break;

    case Intent::SpeedOk:
      if (prompt_is({PromptKind::PainChoice})) {
        prompt_.reset();
        out.commands.push_back(RobotCommand::resume());
        set_mode(ControllerMode::TrajectoryMode, t);
        return;
      }
      if (prompt_is({PromptKind::SpeedCheck})) {
        prompt_.reset();
        return;
      }
      break;

    default:
      break;
  }
  unrecognized(intent, t, out);
}

void Controller::handle_pain(double t, TickOutput& out) {
  out.events.push_back(event(t, EventKind::PainReported));
  switch (mode_) {
    case ControllerMode::TrajectoryMode:
    case ControllerMode::PausedForUser:
    case ControllerMode::AwaitingIntent:
      saved_.reset();
      ensure_pause(out);
      set_mode(ControllerMode::AwaitingIntent, t);
      ask(PromptKind::PainChoice, t, out);
      break;
    case ControllerMode::ComplianceMode:
    case ControllerMode::RecoveryMode:
      // Already stopped or backing off for a snag; keep the snag dialogue.
      if (prompt_) ask(*prompt_, t, out);
      break;
    default:
      break;
  }
}

void Controller::handle_more_gentle(double t, TickOutput& out) {
  const double from = ladder_.scale();
  auto next = reduce_speed(ladder_);
  if (std::holds_alternative<AbortRequired>(next)) {
    ask(PromptKind::PainAbort, t, out);
    start_abort(AbortReason::Pain, t, 0.0, out);
    return;
  }
  ladder_ = std::get<SpeedLadder>(next);
  out.commands.push_back(RobotCommand::set_speed_scale(ladder_.scale()));
  out.commands.push_back(RobotCommand::resume());
  ControlEvent e = event(t, EventKind::SpeedReduced);
  e.from = from;
  e.to = ladder_.scale();
  out.events.push_back(e);
  set_mode(ControllerMode::TrajectoryMode, t);
  ask(PromptKind::SpeedCheck, t, out);
}

void Controller::enter_recovery(double t, TickOutput& out) {
  episode_->attempts += 1;
  out.events.push_back(event(t, EventKind::RecoveryEntered));
  out.commands.push_back(RobotCommand::retract(config_.retract_step, config_.retract_time));
  phase_ = RecoveryPhase::Retracting;
  phase_until_ = t + config_.retract_time;
  set_mode(ControllerMode::RecoveryMode, t);
}

void Controller::escalate(double t, TickOutput& out) {
  if (!episode_) {
    episode_ = Episode{.detect_t = t, .peak = prev_force_};
    armed_ = false;
    out.events.push_back(event(t, EventKind::PotentialSnagDetected));
  }
  episode_->escalated = true;
  if (config_.variant == Variant::Autonomous) episode_->autonomous = true;
  ensure_pause(out);
  out.commands.push_back(RobotCommand::compliance());
  out.events.push_back(event(t, EventKind::RobotStopped));
  out.events.push_back(event(t, EventKind::ComplianceEntered));
  set_mode(ControllerMode::ComplianceMode, t);

  if (!episode_->autonomous) {
    ask(PromptKind::SnagAssist, t, out);
  } else {
    prompt_.reset();
  }
}

void Controller::advance_timers(double t, double f, const RobotFeedback& fb, TickOutput& out) {
  // The autonomous limit holds whatever the user is doing meanwhile.
  if (episode_ && episode_->autonomous && mode_ != ControllerMode::Aborting &&
      timed_out(t - episode_->detect_t, config_.timeout)) {
    start_abort(AbortReason::Timeout, t, f, out);
    return;
  }
  switch (mode_) {
    case ControllerMode::TrajectoryMode:
      if (fb.trajectory_complete) {
        if (episode_) {
          close_episode(episode_->escalated ? EpisodeOutcome::ResolvedAutonomously
                                            : EpisodeOutcome::PotentialOnly,
                        t, f, out);
        }
        prompt_.reset();
        out.events.push_back(event(t, EventKind::TrialCompleted));
        set_mode(ControllerMode::Completed, t);
      }
      break;

    case ControllerMode::ComplianceMode:
      if (episode_ && episode_->autonomous && !prompt_ &&
          t - mode_since_ + kTimeEps >= config_.compliance_dwell) {
        enter_recovery(t, out);
      }
      break;

    case ControllerMode::RecoveryMode:
      if (!episode_) break;
      if (f < config_.resolve_threshold) {
        close_episode(EpisodeOutcome::ResolvedAutonomously, t, f, out);
        out.commands.push_back(RobotCommand::resume());
        out.events.push_back(event(t, EventKind::TrajectoryModeEntered));
        set_mode(ControllerMode::TrajectoryMode, t);
      } else if (phase_ == RecoveryPhase::Retracting && t + kTimeEps >= phase_until_) {
        phase_ = RecoveryPhase::Advancing;
        out.commands.push_back(RobotCommand::resume());
      }
      break;

    case ControllerMode::Aborting:
      if (t + kTimeEps >= abort_until_) {
        if (abort_stage_ == AbortStage::Settle) {
          close_episode(EpisodeOutcome::Timeout, t, f, out);
          release_garment(t, out);
        } else {
          out.events.push_back(event(t, EventKind::RobotStopped));
          out.events.push_back(event(t, EventKind::MovedToSafe));
          out.commands.push_back(RobotCommand::move_safe());
          set_mode(ControllerMode::MovingToSafe, t);
        }
      }
      break;

    case ControllerMode::MovingToSafe:
    case ControllerMode::MovingHome: {
      const bool to_safe = mode_ == ControllerMode::MovingToSafe;
      if (transit_halted_) {
        if (classify_force(f, config_) != InteractionState::Hazardous) {
          transit_halted_ = false;
          out.commands.push_back(to_safe ? RobotCommand::move_safe() : RobotCommand::move_home());
        }
        break;
      }
      if (!fb.motion_idle || !(t > mode_since_ + kTimeEps)) break;
      if (to_safe) {
        out.events.push_back(event(t, EventKind::MovedHome));
        out.commands.push_back(RobotCommand::move_home());
        set_mode(ControllerMode::MovingHome, t);
      } else {
        if (abort_reason_ != AbortReason::Pain) ask(PromptKind::Aborted, t, out);
        out.events.push_back(event(t, EventKind::TrialAborted));
        set_mode(ControllerMode::Aborted, t);
      }
      break;
    }

    default:
      break;
  }
}

void Controller::react_to_hazard(double t, double f, TickOutput& out) {
  if (classify_force(f, config_) != InteractionState::Hazardous) return;
  switch (mode_) {
    case ControllerMode::TrajectoryMode:
    case ControllerMode::RecoveryMode:
      escalate(t, out);
      break;
    case ControllerMode::ComplianceMode:
      ensure_pause(out);
      if (out.commands.back().kind != CommandKind::Compliance) {
        out.commands.push_back(RobotCommand::compliance());
      }
      break;
    case ControllerMode::MovingToSafe:
    case ControllerMode::MovingHome:
      ensure_pause(out);
      transit_halted_ = true;
      break;
    default:
      ensure_pause(out);
      break;
  }
}

void Controller::start_abort(AbortReason reason, double t, double f, TickOutput& out) {
  if (reason != AbortReason::Pain) prompt_.reset();
  saved_.reset();
  ensure_pause(out);
  abort_reason_ = reason;
  set_mode(ControllerMode::Aborting, t);
  if (reason == AbortReason::Timeout) {
    abort_stage_ = AbortStage::Settle;
    abort_until_ = t + config_.abort_settle;
    return;
  }
  close_episode(EpisodeOutcome::Aborted, t, f, out);
  release_garment(t, out);
}

void Controller::release_garment(double t, TickOutput& out) {
  ControlEvent e = event(t, EventKind::GripperOpened);
  if (abort_reason_ == AbortReason::Timeout) {
    e.text = "timeout";
    e.duration = config_.timeout;
  }
  out.events.push_back(std::move(e));
  out.commands.push_back(RobotCommand::open_gripper());
  abort_stage_ = AbortStage::Gripper;
  abort_until_ = t + config_.gripper_dwell;
}

void Controller::emergency_stop(double t, double f, TickOutput& out) {
  ensure_pause(out);
  close_episode(EpisodeOutcome::Aborted, t, f, out);
  prompt_.reset();
  saved_.reset();
  ControlEvent e = event(t, EventKind::EmergencyStop);
  e.force = f;
  out.events.push_back(e);
  set_mode(ControllerMode::Aborted, t);
}

}  // namespace dressguard
