#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace dressguard {

enum class EventKind {
  PotentialSnagDetected,
  Cross35,
  RobotStopped,
  ComplianceEntered,
  RecoveryEntered,
  TrajectoryModeEntered,
  SnagResolved,
  UserPrompted,
  UserResponded,
  SpeedReduced,
  PainReported,
  GripperOpened,
  MovedToSafe,
  MovedHome,
  EmergencyStop,
  TrialAborted,
  TrialCompleted,
  WaypointReached,
  UnrecognizedResponse,
};

enum class EpisodeOutcome { PotentialOnly, ResolvedByUser, ResolvedAutonomously, Aborted, Timeout };

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view name);
std::string_view to_string(EpisodeOutcome outcome);
EpisodeOutcome episode_outcome_from_string(std::string_view name);

/// One controller, dialogue or simulator happening. The payload fields in use
/// depend on `kind`:
///   force     sample magnitude at the event (detections, resolutions)
///   duration  SnagResolved episode duration; GripperOpened timeout limit
///   peak      SnagResolved peak force of the episode
///   from, to  SpeedReduced scale levels
///   text      prompt/response text, waypoint label, unrecognized intent
///   outcome   SnagResolved episode outcome
struct ControlEvent {
  double t = 0.0;
  EventKind kind = EventKind::PotentialSnagDetected;
  std::optional<double> force;
  std::optional<double> duration;
  std::optional<double> peak;
  std::optional<double> from;
  std::optional<double> to;
  std::string text;
  std::optional<EpisodeOutcome> outcome;

  friend bool operator==(const ControlEvent&, const ControlEvent&) = default;
};

inline bool is_terminal(EventKind kind) {
  return kind == EventKind::TrialAborted || kind == EventKind::TrialCompleted ||
         kind == EventKind::EmergencyStop;
}

/// Events that denote a safety reaction or hazard, as opposed to dialogue or
/// trajectory bookkeeping.
inline bool is_safety_event(EventKind kind) {
  switch (kind) {
    case EventKind::Cross35:
    case EventKind::RobotStopped:
    case EventKind::ComplianceEntered:
    case EventKind::RecoveryEntered:
    case EventKind::GripperOpened:
    case EventKind::MovedToSafe:
    case EventKind::MovedHome:
    case EventKind::EmergencyStop:
    case EventKind::TrialAborted:
      return true;
    default:
      return false;
  }
}

}  // namespace dressguard
