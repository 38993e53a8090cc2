#pragma once

#include <optional>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

#include "dressguard/events.hpp"
#include "dressguard/intent.hpp"
#include "dressguard/sim_env.hpp"

namespace dressguard {

enum class InteractionState { Normal, PotentialSnag, Hazardous };

std::string_view to_string(InteractionState state);

enum class Variant { HumanIntervention, Autonomous, PainLadder, Baseline };

std::string_view to_string(Variant variant);
Variant variant_from_string(std::string_view name);

class ControlError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StrategyConfig {
  Variant variant = Variant::HumanIntervention;
  double t15 = 15.0;
  double t35 = 35.0;
  double resolve_threshold = 15.0;
  double hysteresis = 1.0;          // N below t15 before a new episode can open
  double timeout = 40.0;            // s of episode time before an autonomous abort
  double compliance_dwell = 1.0;    // s in compliance before a recovery attempt
  double retract_step = 0.02;       // m per recovery attempt
  double retract_time = 1.0;        // s to cover one retract step
  double abort_settle = 0.78;       // s held still after a timeout before releasing
  double gripper_dwell = 1.0;       // s between opening the gripper and moving away
  std::vector<double> speed_levels{1.0, 0.6, 0.3};

  void validate() const;
};

/// f <= t15 Normal, t15 < f <= t35 PotentialSnag, f > t35 Hazardous.
InteractionState classify_force(double force, const StrategyConfig& cfg);

struct SpeedLadder {
  std::vector<double> levels{1.0, 0.6, 0.3};
  std::size_t current_index = 0;

  double scale() const { return levels.at(current_index); }
  bool at_minimum() const { return current_index + 1 >= levels.size(); }
};

struct AbortRequired {};

std::variant<SpeedLadder, AbortRequired> reduce_speed(const SpeedLadder& ladder);

enum class ControllerMode {
  Idle,
  TrajectoryMode,
  PausedForUser,
  ComplianceMode,
  RecoveryMode,
  AwaitingIntent,
  Aborting,
  MovingToSafe,
  MovingHome,
  Aborted,
  Completed,
};

std::string_view to_string(ControllerMode mode);

struct RobotFeedback {
  bool trajectory_complete = false;
  bool motion_idle = true;
};

struct TickOutput {
  std::vector<RobotCommand> commands;
  std::vector<ControlEvent> events;
  std::optional<PromptKind> prompt;
  ControllerMode mode = ControllerMode::Idle;
  // The user agreed to free the garment by hand on this tick.
  bool assist_started = false;
};

/// Hazard-driven dressing controller. A pure state machine over force
/// samples and user intents: callers serialize ticks, and all side effects
/// are returned as commands, events and prompts.
class Controller {
 public:
  explicit Controller(StrategyConfig config);

  const StrategyConfig& config() const { return config_; }
  ControllerMode mode() const { return mode_; }
  bool terminal() const {
    return mode_ == ControllerMode::Aborted || mode_ == ControllerMode::Completed;
  }
  const SpeedLadder& ladder() const { return ladder_; }
  std::optional<PromptKind> awaiting() const { return prompt_; }
  bool episode_open() const { return episode_.has_value(); }
  std::optional<double> episode_start() const {
    return episode_ ? std::optional<double>(episode_->detect_t) : std::nullopt;
  }

  /// Idle -> TrajectoryMode; the garment is in the gripper.
  TickOutput start(double t);

  TickOutput tick(const ForceSample& sample, const std::vector<Intent>& intents,
                  const RobotFeedback& feedback = {});

 private:
  struct Episode {
    double detect_t = 0.0;
    double peak = 0.0;
    bool escalated = false;
    bool autonomous = false;
    int attempts = 0;
  };

  enum class RecoveryPhase { Retracting, Advancing };
  enum class AbortReason { User, Pain, Timeout };
  enum class AbortStage { Settle, Gripper };

  struct Saved {
    ControllerMode mode;
    std::optional<PromptKind> prompt;
  };

  bool active_variant() const { return config_.variant != Variant::Baseline; }

  void monitor(double t, double f, TickOutput& out);
  void handle_intent(Intent intent, double t, double f, TickOutput& out);
  void handle_pain(double t, TickOutput& out);
  void handle_more_gentle(double t, TickOutput& out);
  void advance_timers(double t, double f, const RobotFeedback& fb, TickOutput& out);
  void react_to_hazard(double t, double f, TickOutput& out);
  void escalate(double t, TickOutput& out);
  void enter_recovery(double t, TickOutput& out);
  void start_abort(AbortReason reason, double t, double f, TickOutput& out);
  void release_garment(double t, TickOutput& out);
  void emergency_stop(double t, double f, TickOutput& out);
  void close_episode(EpisodeOutcome outcome, double t, double f, TickOutput& out);
  void ask(PromptKind kind, double t, TickOutput& out);
  void unrecognized(Intent intent, double t, TickOutput& out);
  void set_mode(ControllerMode mode, double t);

  StrategyConfig config_;
  ControllerMode mode_ = ControllerMode::Idle;
  double mode_since_ = 0.0;
  std::optional<PromptKind> prompt_;
  std::optional<Episode> episode_;
  bool armed_ = true;
  bool cross_armed_ = true;
  double prev_force_ = 0.0;
  SpeedLadder ladder_;
  RecoveryPhase phase_ = RecoveryPhase::Retracting;
  double phase_until_ = 0.0;
  AbortReason abort_reason_ = AbortReason::User;
  AbortStage abort_stage_ = AbortStage::Settle;
  double abort_until_ = 0.0;
  bool transit_halted_ = false;
  std::optional<Saved> saved_;
};

}  // namespace dressguard
