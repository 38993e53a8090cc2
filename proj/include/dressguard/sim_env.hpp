#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dressguard {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

Vec3 operator+(const Vec3& a, const Vec3& b);
Vec3 operator-(const Vec3& a, const Vec3& b);
Vec3 operator*(const Vec3& a, double s);
double norm(const Vec3& v);
Vec3 lerp(const Vec3& a, const Vec3& b, double s);
bool is_finite(const Vec3& v);

enum class WaypointLabel { Hand, LeftWrist, LeftElbow, LeftShoulder };

std::string_view to_string(WaypointLabel label);
WaypointLabel waypoint_label_from_string(std::string_view name);

struct Waypoint {
  WaypointLabel label = WaypointLabel::Hand;
  Vec3 position;

  friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

/// HAND(0,0,0), LWRS(0.10,0,0.02), LELB(0.35,0,0.10), LSHO(0.60,0,0.25) m.
std::vector<Waypoint> default_waypoints();

/// Waypoint trajectory with the executor's position inside it.
///
/// Segment `target_index` runs from `segment_start` to waypoints[target_index];
/// the first segment starts at the robot's home pose.
struct Trajectory {
  std::vector<Waypoint> waypoints;
  std::size_t target_index = 0;
  double segment_progress = 0.0;  // negative after retracting past segment_start
  Vec3 segment_start;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Where on the trajectory a snag catches: the segment ending at `segment`,
/// at `progress` along it.
struct SnagTrigger {
  WaypointLabel segment = WaypointLabel::LeftElbow;
  double progress = 0.0;

  friend bool operator==(const SnagTrigger&, const SnagTrigger&) = default;
};

struct SnagSpec {
  std::string id;
  SnagTrigger trigger;
  double ramp_slope = 400.0;  // N per meter of forward advance
  double hold_force = 50.0;   // plateau of the snag contribution, N
  bool resolvable_by_retraction = false;
  bool resolvable_by_assist = true;
  double assist_delay = 1.0;  // s the user needs to free the garment by hand

  // Slip free by itself after this much forward advance past the trigger.
  std::optional<double> release_advance;
  // Cumulative retraction needed before a retraction-resolvable snag frees.
  double retract_release = 0.0;
  // Decay time constant once freed, s.
  double release_tau = 0.3;
  // Overrides the scenario-wide compliance relax ratio.
  std::optional<double> relax_ratio;

  friend bool operator==(const SnagSpec&, const SnagSpec&) = default;
};

struct BaselineForce {
  double c0 = 3.0;     // N
  double c1 = 2.0;     // N s/m
  double noise = 1.5;  // uniform half-width, N

  friend bool operator==(const BaselineForce&, const BaselineForce&) = default;
};

struct ComplianceModel {
  double tau = 0.3;
  double relax_ratio = 0.5;

  friend bool operator==(const ComplianceModel&, const ComplianceModel&) = default;
};

struct WorldConfig {
  std::uint64_t seed = 1;
  double dt = 0.01;
  std::vector<Waypoint> waypoints = default_waypoints();
  BaselineForce baseline;
  ComplianceModel compliance;
  double pose_noise = 0.0;      // m, per-component bound
  double base_speed = 0.05;     // m/s
  double transit_speed = 0.10;  // m/s, safe/home moves
  double update_dwell = 0.5;    // s held at each waypoint for a trajectory update
  Vec3 home{-0.10, 0.0, 0.05};
  Vec3 safe{-0.05, 0.0, 0.30};

  friend bool operator==(const WorldConfig&, const WorldConfig&) = default;
};

enum class CommandKind {
  Advance,
  Pause,
  Compliance,
  Retract,
  Resume,
  SetSpeedScale,
  OpenGripper,
  MoveSafe,
  MoveHome,
};

std::string_view to_string(CommandKind kind);

struct RobotCommand {
  CommandKind kind = CommandKind::Advance;
  double value = 0.0;     // Retract: step (m); SetSpeedScale: scale
  double duration = 0.0;  // Retract: time to cover the step (s); 0 = one tick

  static RobotCommand advance() { return {CommandKind::Advance}; }
  static RobotCommand pause() { return {CommandKind::Pause}; }
  static RobotCommand compliance() { return {CommandKind::Compliance}; }
  static RobotCommand resume() { return {CommandKind::Resume}; }
  static RobotCommand retract(double step_m, double duration_s = 0.0) {
    return {CommandKind::Retract, step_m, duration_s};
  }
  static RobotCommand set_speed_scale(double s) { return {CommandKind::SetSpeedScale, s}; }
  static RobotCommand open_gripper() { return {CommandKind::OpenGripper}; }
  static RobotCommand move_safe() { return {CommandKind::MoveSafe}; }
  static RobotCommand move_home() { return {CommandKind::MoveHome}; }

  /// Commands that leave the end-effector at rest.
  bool is_zero_velocity() const {
    return kind == CommandKind::Pause || kind == CommandKind::Compliance;
  }

  friend bool operator==(const RobotCommand&, const RobotCommand&) = default;
};

struct ActiveSnag {
  SnagSpec spec;
  bool engaged = false;
  bool released = false;
  double anchor_advance = 0.0;   // forward advance since engagement, net of retraction
  double retracted = 0.0;        // cumulative retraction while engaged
  double tension = 0.0;          // current contribution, N
  std::optional<double> assist_resolve_at;

  friend bool operator==(const ActiveSnag&, const ActiveSnag&) = default;
};

struct ForceSample {
  double t = 0.0;
  double magnitude = 0.0;

  friend bool operator==(const ForceSample&, const ForceSample&) = default;
};

struct PoseEstimate {
  double t = 0.0;
  std::vector<Waypoint> waypoints;
};

struct WorldState {
  std::uint64_t tick = 0;
  double sim_time = 0.0;
  Vec3 end_effector;
  Trajectory trajectory;
  double speed_scale = 1.0;
  double base_speed = 0.05;
  RobotCommand mode_command = RobotCommand::pause();
  std::vector<ActiveSnag> active_snags;
  bool gripper_closed = true;
  std::mt19937_64 rng;

  // Trajectory executor bookkeeping.
  double dwell_remaining = 0.0;
  bool trajectory_complete = false;
  std::vector<WaypointLabel> reached;
  double retract_remaining = 0.0;
  double retract_speed = 0.0;
  double last_velocity = 0.0;
  double last_force = 0.0;

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic fixed-tick world: end-effector point moving along the
/// dressing waypoints, scalar interaction force from baseline friction plus
/// engaged snags.
class World {
 public:
  explicit World(WorldConfig config);

  const WorldConfig& config() const { return config_; }
  const WorldState& state() const { return state_; }

  /// Advances by `dt` (0 leaves the world untouched) and returns the force
  /// measured at the end of the tick.
  ForceSample step(double dt);
  ForceSample step() { return step(config_.dt); }

  void inject_snag(const SnagSpec& spec);
  void apply_command(const RobotCommand& cmd);
  void resolve_snag_by_assist(std::string_view snag_id);
  /// Schedules resolve_snag_by_assist after the snag's assist_delay.
  void begin_assist(std::string_view snag_id);

  PoseEstimate get_user_pose() const;

  /// Sum of snag contributions (engaged and decaying), N.
  double snag_force() const;
  double snag_contribution(std::string_view snag_id) const;
  bool idle() const;  // no pending retraction or transit
  const std::vector<WaypointLabel>& reached() const { return state_.reached; }

 private:
  void advance_along_trajectory(double distance);
  void retract_along_segment(double distance);
  void on_waypoint_reached();
  void move_towards(const Vec3& goal, double distance);
  void relax_snags(double dt);
  double draw_noise();

  WorldConfig config_;
  WorldState state_;
};

double segment_length(const Trajectory& traj);

}  // namespace dressguard
