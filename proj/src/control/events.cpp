#include "dressguard/events.hpp"

#include <array>
#include <stdexcept>
#include <utility>

namespace dressguard {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 19> kEventNames{{
    {EventKind::PotentialSnagDetected, "PotentialSnagDetected"},
    {EventKind::Cross35, "Cross35"},
    {EventKind::RobotStopped, "RobotStopped"},
    {EventKind::ComplianceEntered, "ComplianceEntered"},
    {EventKind::RecoveryEntered, "RecoveryEntered"},
    {EventKind::TrajectoryModeEntered, "TrajectoryModeEntered"},
    {EventKind::SnagResolved, "SnagResolved"},
    {EventKind::UserPrompted, "UserPrompted"},
    {EventKind::UserResponded, "UserResponded"},
    {EventKind::SpeedReduced, "SpeedReduced"},
    {EventKind::PainReported, "PainReported"},
    {EventKind::GripperOpened, "GripperOpened"},
    {EventKind::MovedToSafe, "MovedToSafe"},
    {EventKind::MovedHome, "MovedHome"},
    {EventKind::EmergencyStop, "EmergencyStop"},
    {EventKind::TrialAborted, "TrialAborted"},
    {EventKind::TrialCompleted, "TrialCompleted"},
    {EventKind::WaypointReached, "WaypointReached"},
    {EventKind::UnrecognizedResponse, "UnrecognizedResponse"},
}};

constexpr std::array<std::pair<EpisodeOutcome, std::string_view>, 5> kOutcomeNames{{
    {EpisodeOutcome::PotentialOnly, "PotentialOnly"},
    {EpisodeOutcome::ResolvedByUser, "ResolvedByUser"},
    {EpisodeOutcome::ResolvedAutonomously, "ResolvedAutonomously"},
    {EpisodeOutcome::Aborted, "Aborted"},
    {EpisodeOutcome::Timeout, "Timeout"},
}};

}  // namespace

std::string_view to_string(EventKind kind) {
  for (const auto& [k, name] : kEventNames) {
    if (k == kind) return name;
  }
  return "?";
}

EventKind event_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kEventNames) {
    if (n == name) return k;
  }
  throw std::invalid_argument("unknown event kind '" + std::string(name) + "'");
}

std::string_view to_string(EpisodeOutcome outcome) {
  for (const auto& [o, name] : kOutcomeNames) {
    if (o == outcome) return name;
  }
  return "?";
}

EpisodeOutcome episode_outcome_from_string(std::string_view name) {
  for (const auto& [o, n] : kOutcomeNames) {
    if (n == name) return o;
  }
  throw std::invalid_argument("unknown episode outcome '" + std::string(name) + "'");
}

}  // namespace dressguard
