#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dressguard/events.hpp"

namespace dressguard {

class TelemetryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kEventSchemaVersion = 1;

/// Append-only event history for one trial.
class EventLog {
 public:
  /// Throws TelemetryError if event.t is earlier than the last recorded t.
  void record(const ControlEvent& event);
  const std::vector<ControlEvent>& events() const { return events_; }
  bool empty() const { return events_.empty(); }
  std::size_t size() const { return events_.size(); }

 private:
  std::vector<ControlEvent> events_;
};

enum class Dialect { HumanIntervention, Autonomous };

std::string_view to_string(Dialect dialect);
Dialect dialect_from_string(std::string_view name);

/// Wall-clock origin of sim time zero, microseconds since the Unix epoch (UTC).
struct Clock {
  std::int64_t epoch_us = 0;

  std::int64_t at(double t) const;
  std::string datetime(double t) const;  // 2024-03-27 10:36:09.778002
  std::string time_ms(double t) const;   // 14:29:53.417
  std::string time_us(double t) const;   // 14:30:00.987936
};

/// Parses "YYYY-MM-DD HH:MM:SS[.ffffff]" as UTC.
std::int64_t parse_datetime_us(std::string_view text);

std::string render_log(const std::vector<ControlEvent>& events, Dialect dialect,
                       const Clock& clock);

/// Line-by-line view of a rendered autonomous log with timestamps blanked and
/// comment lines dropped, for fixture comparison.
std::vector<std::string> normalize_rendered(std::string_view text);

enum class TrialStatus { Completed, Aborted, EmergencyStop };

std::string_view to_string(TrialStatus status);

struct Range {
  double min = 0.0;
  double max = 0.0;
  bool empty = true;

  void add(double v);
  void merge(const Range& other);
  friend bool operator==(const Range&, const Range&) = default;
};

struct BreakdownRow {
  int count = 0;
  Range force;  // episode peak force
  Range time;   // episode duration, from the 15 N detection
  friend bool operator==(const BreakdownRow&, const BreakdownRow&) = default;
};

struct PauseCounts {
  int trajectory = 0;
  int pain = 0;
  int speed_check = 0;
  friend bool operator==(const PauseCounts&, const PauseCounts&) = default;
};

struct TrialSummary {
  int trials = 0;
  int snags = 0;
  int potential_snags = 0;
  int escalated_snags = 0;
  int resolved = 0;
  int aborts = 0;
  int attempts = 0;
  Range force_range;
  Range time_range;
  PauseCounts pauses;
  std::string waypoint_reached;  // last waypoint label; batches keep the last trial's
  std::vector<TrialStatus> statuses;
  BreakdownRow potential;
  BreakdownRow escalated_resolved;
  BreakdownRow escalated_aborted;
  int emergency_stops = 0;

  std::optional<TrialStatus> status() const;
  friend bool operator==(const TrialSummary&, const TrialSummary&) = default;
};

/// One trial. Throws TelemetryError if the log has no terminal event.
TrialSummary summarize_trial(const std::vector<ControlEvent>& events);
TrialSummary summarize(const std::vector<std::vector<ControlEvent>>& logs);
TrialSummary merge(const std::vector<TrialSummary>& parts);

nlohmann::json event_to_json(const ControlEvent& event);
ControlEvent event_from_json(const nlohmann::json& j);

std::string export_jsonl(const std::vector<ControlEvent>& events);
std::vector<ControlEvent> import_jsonl(std::string_view text);

std::string summary_csv_header();
std::string summary_csv_row(const TrialSummary& summary);
std::string export_csv(const TrialSummary& summary);
std::string breakdown_csv(const TrialSummary& summary);
nlohmann::json summary_to_json(const TrialSummary& summary);

}  // namespace dressguard
