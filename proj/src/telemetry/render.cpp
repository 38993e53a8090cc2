#include <cmath>
#include <ctime>
#include <regex>
#include <sstream>

#include <fmt/format.h>

#include "dressguard/telemetry.hpp"

namespace dressguard {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::tm utc(std::int64_t seconds) {
  std::time_t tt = static_cast<std::time_t>(seconds);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  return tm;
}

std::string human_force(const ControlEvent& e) { return fmt::format("{:.7g}", e.force.value_or(0.0)); }

std::string auto_force(const ControlEvent& e) { return fmt::format("{}", e.force.value_or(0.0)); }

std::string comment(const ControlEvent& e) {
  std::string line = fmt::format("# {} t={:.6f}", to_string(e.kind), e.t);
  if (!e.text.empty()) line += fmt::format(" \"{}\"", e.text);
  return line;
}

void render_human(const ControlEvent& e, const Clock& clock, std::vector<std::string>& out) {
  switch (e.kind) {
    case EventKind::PotentialSnagDetected:
      out.push_back(fmt::format("Potential Snag Detected at: {} | Force: {}N", clock.time_ms(e.t),
                                human_force(e)));
      break;
    case EventKind::Cross35:
      out.push_back(
          fmt::format("35N crossed at: {} | Force: {}N", clock.time_us(e.t), human_force(e)));
      break;
    case EventKind::RobotStopped:
      out.push_back(fmt::format("Robot Paused at: {}", clock.time_ms(e.t)));
      break;
    case EventKind::ComplianceEntered:
      out.push_back(fmt::format("Switched to Compliance Mode at: {}", clock.time_ms(e.t)));
      break;
    case EventKind::UserPrompted:
      out.push_back(fmt::format("User Prompt: \"{}\"", e.text));
      break;
    case EventKind::UserResponded:
      out.push_back(fmt::format("User Response: \"{}\"", e.text));
      break;
    case EventKind::TrajectoryModeEntered:
      if (e.text == "snag_fixed") out.emplace_back("Fixed Snag. Resume Dressing.");
      out.push_back(fmt::format("Switched back to Trajectory Mode at: {}", clock.time_ms(e.t)));
      break;
    case EventKind::SnagResolved:
      out.push_back(
          fmt::format("Snag Resolved at: {} | Force: {}N", clock.time_ms(e.t), human_force(e)));
      out.push_back(fmt::format("Recovery Duration: {:.4f}s", e.duration.value_or(0.0)));
      break;
    default:
      out.push_back(comment(e));
      break;
  }
}

struct AutoState {
  std::vector<double> durations;
  bool after_episode = false;
};

void render_auto(const ControlEvent& e, const Clock& clock, AutoState& st,
                 std::vector<std::string>& out) {
  const std::string ts = clock.datetime(e.t);
  switch (e.kind) {
    case EventKind::PotentialSnagDetected:
      if (st.after_episode) out.emplace_back();
      st.after_episode = false;
      out.push_back(
          fmt::format("Potential Snag. Detected 15N at: {} with force: {}", ts, auto_force(e)));
      break;
    case EventKind::Cross35:
      out.push_back(fmt::format("35N crossed at: {} with force: {}", ts, auto_force(e)));
      break;
    case EventKind::RobotStopped:
      out.push_back(fmt::format("Robot stopped at: {}", ts));
      break;
    case EventKind::ComplianceEntered:
      out.push_back(fmt::format("Switched to compliance mode at: {}", ts));
      break;
    case EventKind::RecoveryEntered:
      out.push_back(fmt::format("Switched back to recovery mode at: {}", ts));
      break;
    case EventKind::SnagResolved: {
      st.durations.push_back(e.duration.value_or(0.0));
      std::string list;
      for (std::size_t i = 0; i < st.durations.size(); ++i) {
        if (i > 0) list += ", ";
        list += fmt::format("{:.9f}", st.durations[i]);
      }
      out.push_back(fmt::format("Snag recovered at: {} with force: {} ", ts, auto_force(e)));
      out.push_back(fmt::format("with recovery duration: [{}]", list));
      st.after_episode = true;
      break;
    }
    case EventKind::GripperOpened:
      if (e.duration) {
        out.push_back(
            fmt::format("Time crossed {:g} seconds. Gripper opened at: {}", *e.duration, ts));
      } else {
        out.push_back(fmt::format("Gripper opened at: {}", ts));
      }
      break;
    case EventKind::MovedToSafe:
      out.push_back(fmt::format("Robot started moving to safe position at: {}", ts));
      break;
    case EventKind::MovedHome:
      out.push_back(fmt::format("Robot started moving to final home position at: {}", ts));
      break;
    default:
      out.push_back(comment(e));
      break;
  }
}

}  // namespace

void EventLog::record(const ControlEvent& event) {
  if (!events_.empty() && event.t < events_.back().t) {
    throw TelemetryError(fmt::format("event at t={} precedes last recorded t={}", event.t,
                                     events_.back().t));
  }
  events_.push_back(event);
}

std::string_view to_string(Dialect dialect) {
  return dialect == Dialect::HumanIntervention ? "human" : "auto";
}

Dialect dialect_from_string(std::string_view name) {
  if (name == "human" || name == "human_intervention") return Dialect::HumanIntervention;
  if (name == "auto" || name == "autonomous") return Dialect::Autonomous;
  throw TelemetryError(fmt::format("unknown log dialect '{}'", name));
}

std::int64_t Clock::at(double t) const { return epoch_us + std::llround(t * 1e6); }

std::string Clock::datetime(double t) const {
  const std::int64_t us = at(t);
  const std::int64_t sec = floor_div(us, 1'000'000);
  const std::tm tm = utc(sec);
  return fmt::format("{:04}-{:02}-{:02} {:02}:{:02}:{:02}.{:06}", tm.tm_year + 1900, tm.tm_mon + 1,
                     tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, us - sec * 1'000'000);
}

std::string Clock::time_ms(double t) const {
  const std::int64_t us = at(t);
  const std::int64_t sec = floor_div(us, 1'000'000);
  const std::tm tm = utc(sec);
  return fmt::format("{:02}:{:02}:{:02}.{:03}", tm.tm_hour, tm.tm_min, tm.tm_sec,
                     (us - sec * 1'000'000) / 1000);
}

std::string Clock::time_us(double t) const {
  const std::int64_t us = at(t);
  const std::int64_t sec = floor_div(us, 1'000'000);
  const std::tm tm = utc(sec);
  return fmt::format("{:02}:{:02}:{:02}.{:06}", tm.tm_hour, tm.tm_min, tm.tm_sec,
                     us - sec * 1'000'000);
}

std::int64_t parse_datetime_us(std::string_view text) {
  static const std::regex re(R"((\d{4})-(\d{2})-(\d{2})[ T](\d{2}):(\d{2}):(\d{2})(?:\.(\d{1,6}))?)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(text.begin(), text.end(), m, re)) {
    throw TelemetryError(fmt::format("malformed datetime '{}'", text));
  }
  std::tm tm{};
  tm.tm_year = std::stoi(m[1].str()) - 1900;
  tm.tm_mon = std::stoi(m[2].str()) - 1;
  tm.tm_mday = std::stoi(m[3].str());
  tm.tm_hour = std::stoi(m[4].str());
  tm.tm_min = std::stoi(m[5].str());
  tm.tm_sec = std::stoi(m[6].str());
  std::int64_t frac = 0;
  if (m[7].matched) {
    std::string digits = m[7].str();
    digits.resize(6, '0');
    frac = std::stoll(digits);
  }
  return static_cast<std::int64_t>(timegm(&tm)) * 1'000'000 + frac;
}

std::string render_log(const std::vector<ControlEvent>& events, Dialect dialect,
                       const Clock& clock) {
  std::vector<std::string> lines;
  AutoState st;
  for (const ControlEvent& e : events) {
    if (dialect == Dialect::HumanIntervention) {
      render_human(e, clock, lines);
    } else {
      render_auto(e, clock, st, lines);
    }
  }
  std::string text;
  for (const std::string& line : lines) {
    text += line;
    text += '\n';
  }
  return text;
}

std::vector<std::string> normalize_rendered(std::string_view text) {
  static const std::regex ts(R"(\d{4}-\d{2}-\d{2} \d{2}:\d{2}:\d{2}\.\d{6})");
  static const std::regex num(R"(\d+\.\d+)");
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.starts_with("#")) continue;
    line = std::regex_replace(line, ts, "<ts>");
    line = std::regex_replace(line, num, "<num>");
    out.push_back(line);
  }
  return out;
}

}  // namespace dressguard
