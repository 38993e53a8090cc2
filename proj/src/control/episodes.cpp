#include "dressguard/episodes.hpp"

#include <algorithm>
#include <optional>

#include <fmt/format.h>

namespace dressguard {

std::vector<SnagEpisode> episode_tracker(const std::vector<ControlEvent>& events) {
  std::vector<SnagEpisode> closed;
  std::optional<SnagEpisode> open;
  double last_t = -1e300;
  for (const ControlEvent& e : events) {
    if (e.t < last_t) {
      throw EpisodeError(fmt::format("event time regressed from {} to {}", last_t, e.t));
    }
    last_t = e.t;
    switch (e.kind) {
      case EventKind::PotentialSnagDetected:
        if (!open) open = SnagEpisode{.start = e.t, .peak = e.force.value_or(0.0)};
        break;
      case EventKind::Cross35:
        if (!open) throw EpisodeError(fmt::format("Cross35 at {} with no open episode", e.t));
        open->escalated = true;
        open->crossings += 1;
        open->peak = std::max(open->peak, e.force.value_or(0.0));
        break;
      case EventKind::RecoveryEntered:
        if (open) open->attempts += 1;
        break;
      case EventKind::SnagResolved:
        if (!open) {
          throw EpisodeError(fmt::format("SnagResolved at {} with no open episode", e.t));
        }
        open->end = e.t;
        if (e.peak) open->peak = std::max(open->peak, *e.peak);
        open->outcome = e.outcome.value_or(EpisodeOutcome::PotentialOnly);
        closed.push_back(*open);
        open.reset();
        break;
      default:
        break;
    }
  }
  return closed;
}

}  // namespace dressguard
