#include <regex>

#include <fmt/format.h>

#include "dressguard/bridge.hpp"

namespace dressguard {

namespace {

using nlohmann::json;

const std::regex kPlanName(R"([A-Za-z0-9_\-]+)");

}  // namespace

ClientMessage parse_client_message(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw BridgeError(fmt::format("malformed message: {}", ex.what()));
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw BridgeError("message needs a string 'type'");
  }
  if (j.contains("v") && j["v"] != kWireVersion) {
    throw BridgeError(fmt::format("unsupported wire version {}", j["v"].dump()));
  }
  const std::string type = j["type"];
  if (type == "chat") {
    if (!j.contains("text") || !j["text"].is_string()) throw BridgeError("chat needs 'text'");
    return ChatMsg{j["text"].get<std::string>()};
  }
  if (type == "estop") return EStopMsg{};
  if (type == "start") {
    StartMsg m;
    if (j.contains("plan")) {
      if (!j["plan"].is_string()) throw BridgeError("start 'plan' must be a string");
      m.plan = j["plan"].get<std::string>();
    }
    return m;
  }
  if (type == "reset") return ResetMsg{};
  throw BridgeError(fmt::format("unknown message type '{}'", type));
}

json wire_message(std::string_view type, const std::string& session_id, double t, json fields) {
  json j = {{"v", kWireVersion}, {"type", type}, {"session_id", session_id}, {"t", t}};
  for (auto& [k, v] : fields.items()) j[k] = v;
  return j;
}

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::Lobby: return "Lobby";
    case SessionStatus::Running: return "Running";
    case SessionStatus::Paused: return "Paused";
    case SessionStatus::Terminal: return "Terminal";
  }
  return "?";
}

Session::Session(std::string id, BridgeConfig config, Corpus corpus)
    : id_(std::move(id)), config_(std::move(config)), corpus_(std::move(corpus)) {
  if (config_.data_dir.empty()) config_.data_dir = default_data_dir();
}

SessionStatus Session::status() const {
  if (!runner_) return SessionStatus::Lobby;
  if (runner_->terminal()) return SessionStatus::Terminal;
  if (runner_->controller().mode() == ControllerMode::PausedForUser) return SessionStatus::Paused;
  return SessionStatus::Running;
}

double Session::sim_time() const { return runner_ ? runner_->time() : 0.0; }

void Session::start(const std::string& plan_name) {
  if (runner_ && !runner_->terminal()) throw BridgeError("a trial is already running");
  const std::string name = plan_name.empty() ? config_.default_plan : plan_name;
  if (!std::regex_match(name, kPlanName)) {
    throw BridgeError(fmt::format("invalid plan name '{}'", name));
  }
  TrialPlan plan;
  try {
    plan = load_plan(config_.data_dir / "plans" / (name + ".json"));
  } catch (const ConfigError& ex) {
    throw BridgeError(ex.what());
  }
  runner_ = std::make_unique<TrialRunner>(trial_scenario(plan, 0), corpus_);
  plan_name_ = name;
  last_sample_.reset();
  last_mode_.reset();
  last_speed_ = 1.0;
  emit(pending_, "mode", 0.0, {{"mode", to_string(runner_->controller().mode())}});
}

void Session::reset() {
  runner_.reset();
  plan_name_.clear();
  pending_.clear();
}

void Session::handle(const ClientMessage& msg) {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, StartMsg>) {
          start(m.plan);
        } else if constexpr (std::is_same_v<T, ResetMsg>) {
          reset();
        } else {
          if (!runner_ || runner_->terminal()) throw BridgeError("no trial is running");
          if constexpr (std::is_same_v<T, ChatMsg>) {
            runner_->post_chat(m.text);
          } else {
            runner_->post_estop();
          }
        }
      },
      msg);
}

void Session::emit(std::vector<std::string>& out, std::string_view type, double t, json fields) {
  out.push_back(wire_message(type, id_, t, std::move(fields)).dump());
}

std::vector<std::string> Session::advance_to(double until, Clock::time_point now) {
  std::vector<std::string> out = std::move(pending_);
  pending_.clear();
  if (!runner_) return out;

  const auto interval = std::chrono::duration<double>(config_.sample_interval);
  while (!runner_->terminal() && runner_->time() + 1e-12 < until) {
    const TickReport r = runner_->tick();
    const double t = r.sample.t;
    for (const ControlEvent& e : r.events) {
      emit(out, "control_event", t, {{"event", event_to_json(e)}});
      if (e.kind == EventKind::UserResponded) {
        emit(out, "transcript", t, {{"speaker", "user"}, {"text", e.text}});
      } else if (e.kind == EventKind::UserPrompted) {
        emit(out, "transcript", t, {{"speaker", "robot"}, {"text", e.text}});
      } else if (e.kind == EventKind::WaypointReached) {
        emit(out, "waypoint", t, {{"label", e.text}});
      }
    }
    if (r.prompt) {
      const Prompt p = render_prompt(*r.prompt);
      emit(out, "prompt", t, {{"kind", to_string(p.kind)}, {"text", p.text}});
    }
    if (!last_mode_ || *last_mode_ != r.mode) {
      last_mode_ = r.mode;
      emit(out, "mode", t, {{"mode", to_string(r.mode)}});
    }
    if (r.speed_scale != last_speed_) {
      last_speed_ = r.speed_scale;
      emit(out, "speed", t, {{"scale", r.speed_scale}});
    }
    if (!last_sample_ || now - *last_sample_ >= interval || r.terminal) {
      last_sample_ = now;
      emit(out, "force_sample", t,
           {{"force", r.sample.magnitude},
            {"state", to_string(classify_force(r.sample.magnitude,
                                               runner_->controller().config()))}});
    }
  }
  return out;
}

json Session::summary() const {
  json j = {{"v", kWireVersion},
            {"session_id", id_},
            {"status", to_string(status())},
            {"plan", plan_name_},
            {"t", sim_time()},
            {"events", runner_ ? runner_->log().size() : 0},
            {"summary", nullptr}};
  if (runner_ && runner_->terminal()) {
    j["summary"] = summary_to_json(summarize_trial(runner_->log().events()));
  }
  return j;
}

}  // namespace dressguard
