#pragma once

#include <stdexcept>
#include <vector>

#include "dressguard/events.hpp"

namespace dressguard {

class EpisodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SnagEpisode {
  double start = 0.0;
  double end = 0.0;
  double peak = 0.0;
  bool escalated = false;
  int crossings = 0;
  int attempts = 0;
  EpisodeOutcome outcome = EpisodeOutcome::PotentialOnly;

  double duration() const { return end - start; }
};

/// Rebuilds closed snag episodes from an event stream. Throws on time
/// regression or a SnagResolved with no open episode. An episode still open
/// at the end of the stream is not reported.
std::vector<SnagEpisode> episode_tracker(const std::vector<ControlEvent>& events);

}  // namespace dressguard
