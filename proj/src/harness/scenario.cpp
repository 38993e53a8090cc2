#include "dressguard/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <random>
#include <string_view>

#include <fmt/format.h>

#include "dressguard/telemetry.hpp"

namespace dressguard {

namespace {

using nlohmann::json;

void require_object(const json& j, std::string_view where) {
  if (!j.is_object()) throw ConfigError(fmt::format("{}: expected an object", where));
}

void reject_unknown(const json& j, std::string_view where,
                    std::initializer_list<std::string_view> allowed) {
  require_object(j, where);
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& ex) {
    throw ConfigError(fmt::format("key '{}': {}", key, ex.what()));
  }
}

Vec3 read_vec(const json& j, std::string_view where) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError(fmt::format("{}: expected [x, y, z]", where));
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

WaypointLabel read_label(const json& j, std::string_view where) {
  try {
    return waypoint_label_from_string(j.get<std::string>());
  } catch (const std::exception& ex) {
    throw ConfigError(fmt::format("{}: {}", where, ex.what()));
  }
}

void check_version(const json& j, std::string_view where) {
  if (!j.contains("schema_version")) {
    throw ConfigError(fmt::format("{}: missing schema_version", where));
  }
  const int v = j.at("schema_version").get<int>();
  if (v != kScenarioSchemaVersion) {
    throw ConfigError(fmt::format("{}: unsupported schema_version {}", where, v));
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& ex) {
    throw ConfigError(fmt::format("{}: {}", path.string(), ex.what()));
  }
}

WorldConfig parse_world(const json& j) {
  reject_unknown(j, "world",
                 {"seed", "dt", "waypoints", "baseline", "compliance", "pose_noise", "base_speed",
                  "transit_speed", "update_dwell", "home", "safe"});
  WorldConfig w;
  read(j, "seed", w.seed);
  read(j, "dt", w.dt);
  read(j, "pose_noise", w.pose_noise);
  read(j, "base_speed", w.base_speed);
  read(j, "transit_speed", w.transit_speed);
  read(j, "update_dwell", w.update_dwell);
  if (j.contains("home")) w.home = read_vec(j["home"], "world.home");
  if (j.contains("safe")) w.safe = read_vec(j["safe"], "world.safe");
  if (j.contains("waypoints")) {
    w.waypoints.clear();
    for (const json& wp : j["waypoints"]) {
      reject_unknown(wp, "world.waypoints[]", {"label", "position"});
      w.waypoints.push_back(
          {read_label(wp.at("label"), "waypoint label"), read_vec(wp.at("position"), "waypoint")});
    }
  }
  if (j.contains("baseline")) {
    const json& b = j["baseline"];
    reject_unknown(b, "world.baseline", {"c0", "c1", "noise"});
    read(b, "c0", w.baseline.c0);
    read(b, "c1", w.baseline.c1);
    read(b, "noise", w.baseline.noise);
  }
  if (j.contains("compliance")) {
    const json& c = j["compliance"];
    reject_unknown(c, "world.compliance", {"tau", "relax_ratio"});
    read(c, "tau", w.compliance.tau);
    read(c, "relax_ratio", w.compliance.relax_ratio);
  }
  return w;
}

json world_to_json(const WorldConfig& w) {
  json wps = json::array();
  for (const Waypoint& wp : w.waypoints) {
    wps.push_back({{"label", std::string(to_string(wp.label))}, {"position", vec_json(wp.position)}});
  }
  return {{"seed", w.seed},
          {"dt", w.dt},
          {"waypoints", wps},
          {"baseline", {{"c0", w.baseline.c0}, {"c1", w.baseline.c1}, {"noise", w.baseline.noise}}},
          {"compliance", {{"tau", w.compliance.tau}, {"relax_ratio", w.compliance.relax_ratio}}},
          {"pose_noise", w.pose_noise},
          {"base_speed", w.base_speed},
          {"transit_speed", w.transit_speed},
          {"update_dwell", w.update_dwell},
          {"home", vec_json(w.home)},
          {"safe", vec_json(w.safe)}};
}

StrategyConfig parse_strategy(const json& j) {
  reject_unknown(j, "strategy",
                 {"variant", "t15", "t35", "resolve_threshold", "hysteresis", "timeout",
                  "compliance_dwell", "retract_step", "retract_time", "abort_settle",
                  "gripper_dwell", "speed_levels"});
  StrategyConfig s;
  if (j.contains("variant")) {
    try {
      s.variant = variant_from_string(j["variant"].get<std::string>());
    } catch (const ControlError& ex) {
      throw ConfigError(ex.what());
    }
  }
  read(j, "t15", s.t15);
  read(j, "t35", s.t35);
  read(j, "resolve_threshold", s.resolve_threshold);
  read(j, "hysteresis", s.hysteresis);
  read(j, "timeout", s.timeout);
  read(j, "compliance_dwell", s.compliance_dwell);
  read(j, "retract_step", s.retract_step);
  read(j, "retract_time", s.retract_time);
  read(j, "abort_settle", s.abort_settle);
  read(j, "gripper_dwell", s.gripper_dwell);
  read(j, "speed_levels", s.speed_levels);
  try {
    s.validate();
  } catch (const ControlError& ex) {
    throw ConfigError(ex.what());
  }
  return s;
}

json strategy_to_json(const StrategyConfig& s) {
  return {{"variant", std::string(to_string(s.variant))},
          {"t15", s.t15},
          {"t35", s.t35},
          {"resolve_threshold", s.resolve_threshold},
          {"hysteresis", s.hysteresis},
          {"timeout", s.timeout},
          {"compliance_dwell", s.compliance_dwell},
          {"retract_step", s.retract_step},
          {"retract_time", s.retract_time},
          {"abort_settle", s.abort_settle},
          {"gripper_dwell", s.gripper_dwell},
          {"speed_levels", s.speed_levels}};
}

struct PathPoint {
  WaypointLabel segment;
  double progress;
};

PathPoint locate(const std::vector<Waypoint>& waypoints, const Vec3& home, double fraction) {
  std::vector<double> lengths;
  Vec3 prev = home;
  double total = 0.0;
  for (const Waypoint& wp : waypoints) {
    lengths.push_back(norm(wp.position - prev));
    total += lengths.back();
    prev = wp.position;
  }
  double target = std::clamp(fraction, 0.0, 1.0) * total;
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    if (target <= lengths[i] || i + 1 == waypoints.size()) {
      const double p = lengths[i] > 0.0 ? std::min(1.0, target / lengths[i]) : 1.0;
      return {waypoints[i].label, p};
    }
    target -= lengths[i];
  }
  return {waypoints.back().label, 1.0};
}

}  // namespace

SnagSpec parse_snag(const json& j) {
  reject_unknown(j, "snag",
                 {"id", "segment", "progress", "ramp_slope", "hold_force",
                  "resolvable_by_retraction", "resolvable_by_assist", "assist_delay",
                  "release_advance", "retract_release", "release_tau", "relax_ratio"});
  SnagSpec s;
  read(j, "id", s.id);
  if (j.contains("segment")) s.trigger.segment = read_label(j["segment"], "snag segment");
  read(j, "progress", s.trigger.progress);
  read(j, "ramp_slope", s.ramp_slope);
  read(j, "hold_force", s.hold_force);
  read(j, "resolvable_by_retraction", s.resolvable_by_retraction);
  read(j, "resolvable_by_assist", s.resolvable_by_assist);
  read(j, "assist_delay", s.assist_delay);
  read(j, "retract_release", s.retract_release);
  read(j, "release_tau", s.release_tau);
  if (j.contains("release_advance")) s.release_advance = j["release_advance"].get<double>();
  if (j.contains("relax_ratio")) s.relax_ratio = j["relax_ratio"].get<double>();
  return s;
}

json snag_to_json(const SnagSpec& s) {
  json j = {{"id", s.id},
            {"segment", std::string(to_string(s.trigger.segment))},
            {"progress", s.trigger.progress},
            {"ramp_slope", s.ramp_slope},
            {"hold_force", s.hold_force},
            {"resolvable_by_retraction", s.resolvable_by_retraction},
            {"resolvable_by_assist", s.resolvable_by_assist},
            {"assist_delay", s.assist_delay},
            {"retract_release", s.retract_release},
            {"release_tau", s.release_tau}};
  if (s.release_advance) j["release_advance"] = *s.release_advance;
  if (s.relax_ratio) j["relax_ratio"] = *s.relax_ratio;
  return j;
}

Scenario parse_scenario(const json& j) {
  reject_unknown(j, "scenario",
                 {"schema_version", "name", "world", "strategy", "snags", "epoch", "max_time",
                  "prompt_timeout"});
  check_version(j, "scenario");
  Scenario s;
  read(j, "name", s.name);
  if (j.contains("world")) s.world = parse_world(j["world"]);
  if (j.contains("strategy")) s.strategy = parse_strategy(j["strategy"]);
  if (j.contains("snags")) {
    for (const json& sj : j["snags"]) s.snags.push_back(parse_snag(sj));
  }
  if (j.contains("epoch")) {
    try {
      s.epoch_us = parse_datetime_us(j["epoch"].get<std::string>());
    } catch (const TelemetryError& ex) {
      throw ConfigError(ex.what());
    }
  }
  read(j, "max_time", s.max_time);
  read(j, "prompt_timeout", s.prompt_timeout);
  if (!(s.max_time > 0.0)) throw ConfigError("max_time must be positive");
  if (!(s.prompt_timeout > 0.0)) throw ConfigError("prompt_timeout must be positive");
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  try {
    return parse_scenario(read_json_file(path));
  } catch (const ConfigError& ex) {
    throw ConfigError(fmt::format("{}: {}", path.string(), ex.what()));
  }
}

json scenario_to_json(const Scenario& s) {
  json snags = json::array();
  for (const SnagSpec& sn : s.snags) snags.push_back(snag_to_json(sn));
  return {{"schema_version", kScenarioSchemaVersion},
          {"name", s.name},
          {"world", world_to_json(s.world)},
          {"strategy", strategy_to_json(s.strategy)},
          {"snags", snags},
          {"epoch", Clock{s.epoch_us}.datetime(0.0)},
          {"max_time", s.max_time},
          {"prompt_timeout", s.prompt_timeout}};
}

std::string_view to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::Assistive: return "assistive";
    case AgentKind::NonAssistive: return "non_assistive";
    case AgentKind::PainReporter: return "pain_reporter";
    case AgentKind::SpeedAccepter: return "speed_accepter";
    case AgentKind::EStopper: return "estopper";
  }
  return "?";
}

AgentSpec parse_agent(const json& j) {
  reject_unknown(j, "agent",
                 {"kind", "delay_s", "assist_wait", "on_escalate", "pain", "estop_threshold"});
  AgentSpec a;
  const std::string kind = j.value("kind", "assistive");
  if (kind == "assistive") {
    a.kind = AgentKind::Assistive;
  } else if (kind == "non_assistive") {
    a.kind = AgentKind::NonAssistive;
  } else if (kind == "pain_reporter") {
    a.kind = AgentKind::PainReporter;
  } else if (kind == "speed_accepter") {
    a.kind = AgentKind::SpeedAccepter;
  } else if (kind == "estopper") {
    a.kind = AgentKind::EStopper;
  } else {
    throw ConfigError(fmt::format("agent: unknown kind '{}'", kind));
  }
  read(j, "delay_s", a.delay_s);
  read(j, "assist_wait", a.assist_wait);
  read(j, "estop_threshold", a.estop_threshold);
  if (j.contains("on_escalate")) {
    const std::string e = j["on_escalate"].get<std::string>();
    if (e != "abort" && e != "auto") {
      throw ConfigError(fmt::format("agent: on_escalate must be abort or auto, got '{}'", e));
    }
    a.escalate_to_auto = e == "auto";
  }
  if (j.contains("pain")) {
    for (const json& p : j["pain"]) {
      reject_unknown(p, "agent.pain[]", {"segment", "progress", "gentle"});
      PainReport r;
      r.segment = read_label(p.at("segment"), "pain segment");
      read(p, "progress", r.progress);
      read(p, "gentle", r.gentle);
      if (r.gentle < 0) throw ConfigError("agent.pain[].gentle must be non-negative");
      a.pain.push_back(r);
    }
  }
  if (a.delay_s < 0.0 || a.assist_wait < 0.0) {
    throw ConfigError("agent delays must be non-negative");
  }
  if (a.kind == AgentKind::EStopper && !(a.estop_threshold > 35.0)) {
    throw ConfigError("agent: estop_threshold must exceed 35 N");
  }
  return a;
}

TrialPlan parse_plan(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, "plan",
                 {"schema_version", "name", "scenario", "variant", "agent", "repetitions",
                  "seeds", "injection", "dialect"});
  check_version(j, "plan");
  TrialPlan p;
  read(j, "name", p.name);
  if (!j.contains("scenario")) throw ConfigError("plan: missing scenario");
  p.scenario_path = base_dir / j["scenario"].get<std::string>();
  p.scenario = load_scenario(p.scenario_path);
  if (j.contains("variant")) {
    try {
      p.scenario.strategy.variant = variant_from_string(j["variant"].get<std::string>());
    } catch (const ControlError& ex) {
      throw ConfigError(ex.what());
    }
  }
  if (j.contains("agent")) p.agent = parse_agent(j["agent"]);
  read(j, "repetitions", p.repetitions);
  if (p.repetitions < 1) throw ConfigError("plan: repetitions must be at least 1");
  read(j, "seeds", p.seeds);
  if (p.seeds.empty()) {
    for (int i = 0; i < p.repetitions; ++i) p.seeds.push_back(p.scenario.world.seed + i);
  }
  if (static_cast<int>(p.seeds.size()) != p.repetitions) {
    throw ConfigError(fmt::format("plan: {} seeds for {} repetitions", p.seeds.size(),
                                  p.repetitions));
  }
  read(j, "dialect", p.dialect);
  if (p.dialect != "human" && p.dialect != "auto") {
    throw ConfigError(fmt::format("plan: unknown dialect '{}'", p.dialect));
  }
  if (j.contains("injection")) {
    const json& ij = j["injection"];
    reject_unknown(ij, "plan.injection",
                   {"potential", "escalated", "aborting", "templates", "hold_jitter",
                    "start_fraction", "end_fraction"});
    Injection inj;
    read(ij, "potential", inj.potential);
    read(ij, "escalated", inj.escalated);
    read(ij, "aborting", inj.aborting);
    read(ij, "hold_jitter", inj.hold_jitter);
    read(ij, "start_fraction", inj.start_fraction);
    read(ij, "end_fraction", inj.end_fraction);
    if (inj.potential < 0 || inj.escalated < 0 || inj.aborting < 0) {
      throw ConfigError("plan.injection: counts must be non-negative");
    }
    if (inj.aborting > p.repetitions) {
      throw ConfigError("plan.injection: at most one aborting snag per trial");
    }
    if (ij.contains("templates")) {
      const json& t = ij["templates"];
      reject_unknown(t, "plan.injection.templates", {"potential", "escalated", "aborting"});
      if (t.contains("potential")) inj.potential_template = parse_snag(t["potential"]);
      if (t.contains("escalated")) inj.escalated_template = parse_snag(t["escalated"]);
      if (t.contains("aborting")) inj.aborting_template = parse_snag(t["aborting"]);
    }
    p.injection = inj;
  }
  return p;
}

TrialPlan load_plan(const std::filesystem::path& path) {
  try {
    return parse_plan(read_json_file(path), path.parent_path());
  } catch (const ConfigError& ex) {
    throw ConfigError(fmt::format("{}: {}", path.string(), ex.what()));
  }
}

std::vector<SnagSpec> inject_snags(const Injection& inj, int trials, int index,
                                   std::uint64_t seed, const std::vector<Waypoint>& waypoints,
                                   const Vec3& home) {
  auto share = [&](int total, int offset) {
    const int i = (index + offset) % trials;
    return total / trials + (i < total % trials ? 1 : 0);
  };
  enum Kind { Potential, Escalated };
  std::vector<Kind> kinds;
  kinds.insert(kinds.end(), share(inj.potential, 0), Potential);
  // Offset so the remainders of the two categories land on different trials.
  kinds.insert(kinds.end(), share(inj.escalated, trials / 2), Escalated);
  const bool aborts = index < inj.aborting;

  std::mt19937_64 rng(seed);
  std::shuffle(kinds.begin(), kinds.end(), rng);
  std::uniform_real_distribution<double> jitter(-inj.hold_jitter, inj.hold_jitter);

  const double span = inj.end_fraction - inj.start_fraction;
  const double last = aborts ? inj.start_fraction + 0.5 * span : inj.end_fraction;
  std::vector<SnagSpec> out;
  const int n = static_cast<int>(kinds.size());
  for (int k = 0; k < n; ++k) {
    SnagSpec s = kinds[k] == Potential ? inj.potential_template : inj.escalated_template;
    const double f = n == 1 ? inj.start_fraction
                            : inj.start_fraction + (last - inj.start_fraction) * k / (n - 1);
    const PathPoint at = locate(waypoints, home, f);
    s.id = fmt::format("t{}-s{}", index, k);
    s.trigger = {at.segment, at.progress};
    if (inj.hold_jitter > 0.0) s.hold_force = std::max(1.0, s.hold_force + jitter(rng));
    out.push_back(std::move(s));
  }
  if (aborts) {
    SnagSpec s = inj.aborting_template;
    const PathPoint at = locate(waypoints, home, inj.start_fraction + 0.75 * span);
    s.id = fmt::format("t{}-abort", index);
    s.trigger = {at.segment, at.progress};
    out.push_back(std::move(s));
  }
  return out;
}

Scenario trial_scenario(const TrialPlan& plan, int index) {
  if (index < 0 || index >= plan.repetitions) {
    throw ConfigError(fmt::format("trial index {} outside 0..{}", index, plan.repetitions - 1));
  }
  Scenario s = plan.scenario;
  s.world.seed = plan.seeds.at(index);
  if (plan.injection) {
    auto snags = inject_snags(*plan.injection, plan.repetitions, index, s.world.seed,
                              s.world.waypoints, s.world.home);
    s.snags.insert(s.snags.end(), snags.begin(), snags.end());
  }
  return s;
}

}  // namespace dressguard
