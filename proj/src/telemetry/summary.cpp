#include <algorithm>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "dressguard/episodes.hpp"
#include "dressguard/telemetry.hpp"

namespace dressguard {

namespace {

bool is_resolved(EpisodeOutcome o) {
  return o == EpisodeOutcome::ResolvedByUser || o == EpisodeOutcome::ResolvedAutonomously;
}

bool is_abort(EpisodeOutcome o) {
  return o == EpisodeOutcome::Aborted || o == EpisodeOutcome::Timeout;
}

void add_row(BreakdownRow& row, const SnagEpisode& ep) {
  row.count += 1;
  row.force.add(ep.peak);
  row.time.add(ep.duration());
}

void merge_row(BreakdownRow& into, const BreakdownRow& from) {
  into.count += from.count;
  into.force.merge(from.force);
  into.time.merge(from.time);
}

std::string range_cell(const Range& r) {
  if (r.empty) return "-";
  return fmt::format("{:.2f}-{:.2f}", r.min, r.max);
}

std::string status_cell(const TrialSummary& s) {
  if (auto single = s.status()) return std::string(to_string(*single));
  std::map<std::string_view, int> counts;
  for (TrialStatus st : s.statuses) counts[to_string(st)] += 1;
  std::string cell;
  for (const auto& [name, n] : counts) {
    if (!cell.empty()) cell += ' ';
    cell += fmt::format("{}:{}", name, n);
  }
  return cell.empty() ? "-" : cell;
}

nlohmann::json range_json(const Range& r) {
  if (r.empty) return nullptr;
  return nlohmann::json::array({r.min, r.max});
}

nlohmann::json row_json(const BreakdownRow& r) {
  return {{"count", r.count}, {"force", range_json(r.force)}, {"time", range_json(r.time)}};
}

}  // namespace

void Range::add(double v) {
  if (empty) {
    min = max = v;
    empty = false;
    return;
  }
  min = std::min(min, v);
  max = std::max(max, v);
}

void Range::merge(const Range& other) {
  if (other.empty) return;
  add(other.min);
  add(other.max);
}

std::string_view to_string(TrialStatus status) {
  switch (status) {
    case TrialStatus::Completed: return "Completed";
    case TrialStatus::Aborted: return "Aborted";
    case TrialStatus::EmergencyStop: return "Emergency Stop";
  }
  return "?";
}

std::optional<TrialStatus> TrialSummary::status() const {
  if (statuses.empty()) return std::nullopt;
  if (std::all_of(statuses.begin(), statuses.end(),
                  [&](TrialStatus s) { return s == statuses.front(); })) {
    return statuses.front();
  }
  return std::nullopt;
}

TrialSummary summarize_trial(const std::vector<ControlEvent>& events) {
  TrialSummary s;
  s.trials = 1;
  std::optional<TrialStatus> status;
  for (const ControlEvent& e : events) {
    switch (e.kind) {
      case EventKind::WaypointReached:
        s.pauses.trajectory += 1;
        s.waypoint_reached = e.text;
        break;
      case EventKind::PainReported:
        s.pauses.pain += 1;
        break;
      case EventKind::SpeedReduced:
        s.pauses.speed_check += 1;
        break;
      case EventKind::TrialCompleted:
        status = status.value_or(TrialStatus::Completed);
        break;
      case EventKind::TrialAborted:
        status = status.value_or(TrialStatus::Aborted);
        break;
      case EventKind::EmergencyStop:
        s.emergency_stops += 1;
        status = TrialStatus::EmergencyStop;
        break;
      default:
        break;
    }
  }
  if (!status) throw TelemetryError("trial log has no terminal event");
  s.statuses.push_back(*status);

  for (const SnagEpisode& ep : episode_tracker(events)) {
    s.snags += 1;
    s.attempts += ep.attempts;
    s.force_range.add(ep.peak);
    s.time_range.add(ep.duration());
    if (is_resolved(ep.outcome)) s.resolved += 1;
    if (is_abort(ep.outcome)) s.aborts += 1;
    if (!ep.escalated) {
      s.potential_snags += 1;
      add_row(s.potential, ep);
    } else {
      s.escalated_snags += 1;
      if (is_resolved(ep.outcome)) add_row(s.escalated_resolved, ep);
      if (is_abort(ep.outcome)) add_row(s.escalated_aborted, ep);
    }
  }
  return s;
}

TrialSummary merge(const std::vector<TrialSummary>& parts) {
  TrialSummary m;
  for (const TrialSummary& p : parts) {
    m.trials += p.trials;
    m.snags += p.snags;
    m.potential_snags += p.potential_snags;
    m.escalated_snags += p.escalated_snags;
    m.resolved += p.resolved;
    m.aborts += p.aborts;
    m.attempts += p.attempts;
    m.emergency_stops += p.emergency_stops;
    m.force_range.merge(p.force_range);
    m.time_range.merge(p.time_range);
    m.pauses.trajectory += p.pauses.trajectory;
    m.pauses.pain += p.pauses.pain;
    m.pauses.speed_check += p.pauses.speed_check;
    if (!p.waypoint_reached.empty()) m.waypoint_reached = p.waypoint_reached;
    m.statuses.insert(m.statuses.end(), p.statuses.begin(), p.statuses.end());
    merge_row(m.potential, p.potential);
    merge_row(m.escalated_resolved, p.escalated_resolved);
    merge_row(m.escalated_aborted, p.escalated_aborted);
  }
  return m;
}

TrialSummary summarize(const std::vector<std::vector<ControlEvent>>& logs) {
  std::vector<TrialSummary> parts;
  parts.reserve(logs.size());
  for (const auto& log : logs) parts.push_back(summarize_trial(log));
  return merge(parts);
}

nlohmann::json event_to_json(const ControlEvent& e) {
  nlohmann::json j;
  j["v"] = kEventSchemaVersion;
  j["t"] = e.t;
  j["kind"] = std::string(to_string(e.kind));
  if (e.force) j["force"] = *e.force;
  if (e.duration) j["duration"] = *e.duration;
  if (e.peak) j["peak"] = *e.peak;
  if (e.from) j["from"] = *e.from;
  if (e.to) j["to"] = *e.to;
  if (!e.text.empty()) j["text"] = e.text;
  if (e.outcome) j["outcome"] = std::string(to_string(*e.outcome));
  return j;
}

ControlEvent event_from_json(const nlohmann::json& j) {
  try {
    if (j.at("v").get<int>() != kEventSchemaVersion) {
      throw TelemetryError(fmt::format("unsupported event schema version {}", j.at("v").dump()));
    }
    ControlEvent e;
    e.t = j.at("t").get<double>();
    e.kind = event_kind_from_string(j.at("kind").get<std::string>());
    auto opt = [&](const char* key, std::optional<double>& field) {
      if (j.contains(key)) field = j.at(key).get<double>();
    };
    opt("force", e.force);
    opt("duration", e.duration);
    opt("peak", e.peak);
    opt("from", e.from);
    opt("to", e.to);
    if (j.contains("text")) e.text = j.at("text").get<std::string>();
    if (j.contains("outcome")) {
      e.outcome = episode_outcome_from_string(j.at("outcome").get<std::string>());
    }
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw TelemetryError(fmt::format("malformed event record: {}", ex.what()));
  } catch (const std::invalid_argument& ex) {
    throw TelemetryError(ex.what());
  }
}

std::string export_jsonl(const std::vector<ControlEvent>& events) {
  std::string out;
  for (const ControlEvent& e : events) {
    out += event_to_json(e).dump();
    out += '\n';
  }
  return out;
}

std::vector<ControlEvent> import_jsonl(std::string_view text) {
  EventLog log;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& ex) {
      throw TelemetryError(fmt::format("line {}: {}", lineno, ex.what()));
    }
    log.record(event_from_json(j));
  }
  return log.events();
}

std::string summary_csv_header() {
  return "Trials,Snags,Pot. Snags,Esc. Snags,Resolved,Aborts,Attempts,Force (N),Time (s),"
         "Trajectory HRI Pauses,Pain HRI Pauses,Speed Check HRI Pauses,Waypoints Reached,"
         "Task Status";
}

std::string summary_csv_row(const TrialSummary& s) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}", s.trials, s.snags,
                     s.potential_snags, s.escalated_snags, s.resolved, s.aborts, s.attempts,
                     range_cell(s.force_range), range_cell(s.time_range), s.pauses.trajectory,
                     s.pauses.pain, s.pauses.speed_check,
                     s.waypoint_reached.empty() ? "-" : s.waypoint_reached, status_cell(s));
}

std::string export_csv(const TrialSummary& s) {
  return summary_csv_header() + "\n" + summary_csv_row(s) + "\n";
}

std::string breakdown_csv(const TrialSummary& s) {
  std::string out = "Snag Type,Count,Force (N),Time (s)\n";
  auto row = [&](std::string_view name, const BreakdownRow& r) {
    out += fmt::format("{},{},{},{}\n", name, r.count, range_cell(r.force), range_cell(r.time));
  };
  row("Potential Snags", s.potential);
  row("Esc. Snags (Resolved)", s.escalated_resolved);
  row("Esc. Snags (Aborted)", s.escalated_aborted);
  return out;
}

nlohmann::json summary_to_json(const TrialSummary& s) {
  nlohmann::json statuses = nlohmann::json::array();
  for (TrialStatus st : s.statuses) statuses.push_back(std::string(to_string(st)));
  return {
      {"trials", s.trials},
      {"snags", s.snags},
      {"potential_snags", s.potential_snags},
      {"escalated_snags", s.escalated_snags},
      {"resolved", s.resolved},
      {"aborts", s.aborts},
      {"attempts", s.attempts},
      {"emergency_stops", s.emergency_stops},
      {"force_range", range_json(s.force_range)},
      {"time_range", range_json(s.time_range)},
      {"pauses",
       {{"trajectory", s.pauses.trajectory},
        {"pain", s.pauses.pain},
        {"speed_check", s.pauses.speed_check}}},
      {"waypoint_reached", s.waypoint_reached},
      {"statuses", statuses},
      {"breakdown",
       {{"potential", row_json(s.potential)},
        {"escalated_resolved", row_json(s.escalated_resolved)},
        {"escalated_aborted", row_json(s.escalated_aborted)}}},
  };
}

}  // namespace dressguard
