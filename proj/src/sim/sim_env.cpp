#include "dressguard/sim_env.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <fmt/format.h>

namespace dressguard {

namespace {

constexpr double kEps = 1e-12;

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Vec3 operator*(const Vec3& a, double s) { return {a.x * s, a.y * s, a.z * s}; }
double norm(const Vec3& v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }
Vec3 lerp(const Vec3& a, const Vec3& b, double s) { return a + (b - a) * s; }
bool is_finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

std::string_view to_string(WaypointLabel label) {
  switch (label) {
    case WaypointLabel::Hand: return "HAND";
    case WaypointLabel::LeftWrist: return "LWRS";
    case WaypointLabel::LeftElbow: return "LELB";
    case WaypointLabel::LeftShoulder: return "LSHO";
  }
  return "?";
}

WaypointLabel waypoint_label_from_string(std::string_view name) {
  if (name == "HAND") return WaypointLabel::Hand;
  if (name == "LWRS") return WaypointLabel::LeftWrist;
  if (name == "LELB") return WaypointLabel::LeftElbow;
  if (name == "LSHO") return WaypointLabel::LeftShoulder;
  throw SimError(fmt::format("unknown waypoint label '{}'", name));
}

std::vector<Waypoint> default_waypoints() {
  return {
      {WaypointLabel::Hand, {0.0, 0.0, 0.0}},
      {WaypointLabel::LeftWrist, {0.10, 0.0, 0.02}},
      {WaypointLabel::LeftElbow, {0.35, 0.0, 0.10}},
      {WaypointLabel::LeftShoulder, {0.60, 0.0, 0.25}},
  };
}

std::string_view to_string(CommandKind kind) {
  switch (kind) {
    case CommandKind::Advance: return "Advance";
    case CommandKind::Pause: return "Pause";
    case CommandKind::Compliance: return "Compliance";
    case CommandKind::Retract: return "Retract";
    case CommandKind::Resume: return "Resume";
    case CommandKind::SetSpeedScale: return "SetSpeedScale";
    case CommandKind::OpenGripper: return "OpenGripper";
    case CommandKind::MoveSafe: return "MoveSafe";
    case CommandKind::MoveHome: return "MoveHome";
  }
  return "?";
}

double segment_length(const Trajectory& traj) {
  return norm(traj.waypoints.at(traj.target_index).position - traj.segment_start);
}

World::World(WorldConfig config) : config_(std::move(config)) {
  if (!(config_.dt > 0.0) || !std::isfinite(config_.dt)) {
    throw SimError("dt must be positive");
  }
  if (config_.waypoints.empty()) {
    throw SimError("trajectory needs at least one waypoint");
  }
  std::unordered_set<int> seen;
  for (std::size_t i = 0; i < config_.waypoints.size(); ++i) {
    const auto& wp = config_.waypoints[i];
    if (!is_finite(wp.position)) throw SimError("waypoint position must be finite");
    if (!seen.insert(static_cast<int>(wp.label)).second) {
      throw SimError(fmt::format("duplicate waypoint {}", to_string(wp.label)));
    }
    if (i > 0 && static_cast<int>(wp.label) <= static_cast<int>(config_.waypoints[i - 1].label)) {
      throw SimError("waypoints must be ordered HAND, LWRS, LELB, LSHO");
    }
  }
  if (!(config_.base_speed > 0.0)) throw SimError("base_speed must be positive");
  if (config_.pose_noise < 0.0) throw SimError("pose_noise must be non-negative");

  state_.trajectory.waypoints = config_.waypoints;
  state_.trajectory.segment_start = config_.home;
  state_.end_effector = config_.home;
  state_.base_speed = config_.base_speed;
  state_.rng.seed(config_.seed);
  state_.last_force = std::max(0.0, config_.baseline.c0);
}

void World::inject_snag(const SnagSpec& spec) {
  if (spec.id.empty()) throw SimError("snag id must not be empty");
  if (!(spec.ramp_slope > 0.0)) throw SimError("ramp_slope must be positive");
  if (spec.trigger.progress < 0.0 || spec.trigger.progress > 1.0) {
    throw SimError("snag trigger progress must lie in [0, 1]");
  }
  if (!(spec.hold_force > 0.0)) throw SimError("hold_force must be positive");
  if (!(spec.release_tau > 0.0)) throw SimError("release_tau must be positive");
  for (const auto& s : state_.active_snags) {
    if (s.spec.id == spec.id) throw SimError(fmt::format("duplicate snag id '{}'", spec.id));
  }
  state_.active_snags.push_back(ActiveSnag{.spec = spec});
}

void World::apply_command(const RobotCommand& cmd) {
  switch (cmd.kind) {
    case CommandKind::SetSpeedScale:
      if (!(cmd.value > 0.0) || cmd.value > 1.0) {
        throw SimError(fmt::format("speed scale {} outside (0, 1]", cmd.value));
      }
      state_.speed_scale = cmd.value;
      return;
    case CommandKind::Retract:
      if (!(cmd.value > 0.0)) throw SimError("retract step must be positive");
      state_.retract_remaining = cmd.value;
      state_.retract_speed = cmd.duration > 0.0 ? cmd.value / cmd.duration : cmd.value / config_.dt;
      state_.mode_command = cmd;
      return;
    case CommandKind::Resume:
      state_.mode_command = RobotCommand::advance();
      return;
    case CommandKind::OpenGripper:
      state_.gripper_closed = false;
      for (auto& s : state_.active_snags) s.released = true;
      state_.mode_command = cmd;
      return;
    case CommandKind::Advance:
    case CommandKind::Pause:
    case CommandKind::Compliance:
    case CommandKind::MoveSafe:
    case CommandKind::MoveHome:
      state_.retract_remaining = 0.0;
      state_.mode_command = cmd;
      return;
  }
}

void World::resolve_snag_by_assist(std::string_view snag_id) {
  auto it = std::find_if(state_.active_snags.begin(), state_.active_snags.end(),
                         [&](const ActiveSnag& s) { return s.spec.id == snag_id; });
  if (it == state_.active_snags.end()) {
    throw SimError(fmt::format("unknown snag '{}'", snag_id));
  }
  if (!it->engaged || it->released) {
    throw SimError(fmt::format("snag '{}' is not engaged", snag_id));
  }
  if (!it->spec.resolvable_by_assist) {
    throw SimError(fmt::format("snag '{}' cannot be freed by hand", snag_id));
  }
  it->released = true;
  it->assist_resolve_at.reset();
}

void World::begin_assist(std::string_view snag_id) {
  for (auto& s : state_.active_snags) {
    if (s.spec.id == snag_id && s.engaged && !s.released && s.spec.resolvable_by_assist &&
        !s.assist_resolve_at) {
      s.assist_resolve_at = state_.sim_time + s.spec.assist_delay;
    }
  }
}

PoseEstimate World::get_user_pose() const {
  PoseEstimate pose{.t = state_.sim_time, .waypoints = config_.waypoints};
  if (config_.pose_noise == 0.0) return pose;
  std::seed_seq seq{static_cast<std::uint32_t>(config_.seed),
                    static_cast<std::uint32_t>(config_.seed >> 32),
                    static_cast<std::uint32_t>(state_.tick),
                    static_cast<std::uint32_t>(state_.tick >> 32), 0x9e37u};
  std::mt19937_64 rng(seq);
  const double b = config_.pose_noise;
  for (auto& wp : pose.waypoints) {
    wp.position.x += b * (2.0 * unit_uniform(rng) - 1.0);
    wp.position.y += b * (2.0 * unit_uniform(rng) - 1.0);
    wp.position.z += b * (2.0 * unit_uniform(rng) - 1.0);
  }
  return pose;
}

double World::snag_force() const {
  double sum = 0.0;
  for (const auto& s : state_.active_snags) sum += s.tension;
  return sum;
}

double World::snag_contribution(std::string_view snag_id) const {
  for (const auto& s : state_.active_snags) {
    if (s.spec.id == snag_id) return s.tension;
  }
  return 0.0;
}

bool World::idle() const {
  switch (state_.mode_command.kind) {
    case CommandKind::Retract:
      return state_.retract_remaining <= kEps;
    case CommandKind::MoveSafe:
      return norm(state_.end_effector - config_.safe) <= 1e-9;
    case CommandKind::MoveHome:
      return norm(state_.end_effector - config_.home) <= 1e-9;
    default:
      return true;
  }
}

double World::draw_noise() {
  const double u = unit_uniform(state_.rng);
  return config_.baseline.noise * (2.0 * u - 1.0);
}

void World::on_waypoint_reached() {
  auto& traj = state_.trajectory;
  state_.reached.push_back(traj.waypoints[traj.target_index].label);
  if (traj.target_index + 1 >= traj.waypoints.size()) {
    state_.trajectory_complete = true;
    return;
  }
  // Pull in the latest user pose for the waypoints still ahead.
  const PoseEstimate pose = get_user_pose();
  for (std::size_t i = traj.target_index + 1; i < traj.waypoints.size(); ++i) {
    traj.waypoints[i].position = pose.waypoints[i].position;
  }
  traj.segment_start = state_.end_effector;
  traj.target_index += 1;
  traj.segment_progress = 0.0;
  state_.dwell_remaining = config_.update_dwell;
}

void World::advance_along_trajectory(double distance) {
  auto& traj = state_.trajectory;
  const double len = segment_length(traj);
  const double before = traj.segment_progress;
  double after = len > kEps ? before + distance / len : 1.0;
  after = std::min(after, 1.0);
  const WaypointLabel label = traj.waypoints[traj.target_index].label;

  for (auto& s : state_.active_snags) {
    if (s.released) continue;
    double forward = 0.0;
    if (s.engaged) {
      forward = (after - before) * len;
    } else if (s.spec.trigger.segment == label && after >= s.spec.trigger.progress &&
               before <= s.spec.trigger.progress) {
      s.engaged = true;
      forward = (after - s.spec.trigger.progress) * len;
    }
    if (!s.engaged || forward <= 0.0) continue;
    s.anchor_advance += forward;
    s.tension = std::min(s.spec.hold_force, s.tension + s.spec.ramp_slope * forward);
    if (s.spec.release_advance && s.anchor_advance >= *s.spec.release_advance) {
      s.released = true;
    }
  }

  traj.segment_progress = after;
  state_.end_effector = lerp(traj.segment_start, traj.waypoints[traj.target_index].position, after);
  if (after >= 1.0) on_waypoint_reached();
}

void World::retract_along_segment(double distance) {
  auto& traj = state_.trajectory;
  const double len = segment_length(traj);
  if (len <= kEps) return;
  const double before = traj.segment_progress;
  // May back past the segment start along the same line, up to one segment length.
  const double after = std::max(-1.0, before - distance / len);
  const double moved = (before - after) * len;
  traj.segment_progress = after;
  state_.end_effector = lerp(traj.segment_start, traj.waypoints[traj.target_index].position, after);
  for (auto& s : state_.active_snags) {
    if (!s.engaged || s.released) continue;
    s.tension = std::max(0.0, s.tension - s.spec.ramp_slope * moved);
    s.anchor_advance -= moved;
    s.retracted += moved;
  }
}

void World::move_towards(const Vec3& goal, double distance) {
  const Vec3 delta = goal - state_.end_effector;
  const double d = norm(delta);
  if (d <= distance || d <= kEps) {
    state_.end_effector = goal;
  } else {
    state_.end_effector = state_.end_effector + delta * (distance / d);
  }
}

void World::relax_snags(double dt) {
  for (auto& s : state_.active_snags) {
    if (!s.engaged || s.released) continue;
    const double ratio = s.spec.relax_ratio.value_or(config_.compliance.relax_ratio);
    const double target = s.spec.hold_force * ratio;
    if (s.tension > target) {
      s.tension = target + (s.tension - target) * std::exp(-dt / config_.compliance.tau);
    }
  }
}

ForceSample World::step(double dt) {
  if (dt == 0.0) return {state_.sim_time, state_.last_force};
  if (dt != config_.dt) {
    throw SimError(fmt::format("step dt {} differs from the configured tick {}", dt, config_.dt));
  }
  state_.tick += 1;
  state_.sim_time = static_cast<double>(state_.tick) * config_.dt;

  const Vec3 before = state_.end_effector;
  switch (state_.mode_command.kind) {
    case CommandKind::Advance:
    case CommandKind::Resume:
      if (state_.trajectory_complete) break;
      if (state_.dwell_remaining > kEps) {
        state_.dwell_remaining = std::max(0.0, state_.dwell_remaining - dt);
        if (state_.dwell_remaining < 1e-9) state_.dwell_remaining = 0.0;
        break;
      }
      advance_along_trajectory(state_.base_speed * state_.speed_scale * dt);
      break;
    case CommandKind::Retract:
      if (state_.retract_remaining > kEps) {
        const double d = std::min(state_.retract_speed * dt, state_.retract_remaining);
        retract_along_segment(d);
        state_.retract_remaining -= d;
        if (state_.retract_remaining < 1e-12) {
          state_.retract_remaining = 0.0;
          for (auto& s : state_.active_snags) {
            if (s.engaged && !s.released && s.spec.resolvable_by_retraction &&
                s.retracted + 1e-12 >= s.spec.retract_release) {
              s.released = true;
            }
          }
        }
      }
      break;
    case CommandKind::Compliance:
      relax_snags(dt);
      break;
    case CommandKind::MoveSafe:
      move_towards(config_.safe, config_.transit_speed * dt);
      break;
    case CommandKind::MoveHome:
      move_towards(config_.home, config_.transit_speed * dt);
      break;
    case CommandKind::Pause:
    case CommandKind::OpenGripper:
    case CommandKind::SetSpeedScale:
      break;
  }
  state_.last_velocity = norm(state_.end_effector - before) / dt;

  for (auto& s : state_.active_snags) {
    if (s.assist_resolve_at && !s.released && state_.sim_time + 1e-9 >= *s.assist_resolve_at) {
      s.released = true;
      s.assist_resolve_at.reset();
    }
    if (s.released) s.tension *= std::exp(-dt / s.spec.release_tau);
  }
  std::erase_if(state_.active_snags,
                [](const ActiveSnag& s) { return s.released && s.tension < 1e-6; });

  const auto& b = config_.baseline;
  const double noise = draw_noise();
  double force = b.c0 + b.c1 * state_.last_velocity + noise + snag_force();
  force = std::max(0.0, force);
  state_.last_force = force;
  return {state_.sim_time, force};
}

}  // namespace dressguard
