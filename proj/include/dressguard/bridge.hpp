#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "dressguard/harness.hpp"

namespace dressguard {

inline constexpr int kWireVersion = 1;

class BridgeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BridgeConfig {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;
  double realtime_ratio = 1.0;     // sim seconds per wall second
  double sample_interval = 0.05;   // wall seconds between force_sample messages
  std::string default_plan = "interactive";
  std::filesystem::path data_dir;  // empty: default_data_dir()
};

// Client to server.
struct ChatMsg {
  std::string text;
};
struct EStopMsg {};
struct StartMsg {
  std::string plan;  // empty: the configured default
};
struct ResetMsg {};
using ClientMessage = std::variant<ChatMsg, EStopMsg, StartMsg, ResetMsg>;

/// Throws BridgeError on malformed or unknown messages.
ClientMessage parse_client_message(std::string_view text);

/// Server-to-client envelope: {"v", "type", "session_id", "t", ...fields}.
nlohmann::json wire_message(std::string_view type, const std::string& session_id, double t,
                            nlohmann::json fields = nlohmann::json::object());

enum class SessionStatus { Lobby, Running, Paused, Terminal };

std::string_view to_string(SessionStatus status);

/// One live trial driven by a human operator. Not thread-safe; the server
/// calls it from a single executor, so client inputs are queued between
/// ticks and never land mid-tick.
class Session {
 public:
  using Clock = std::chrono::steady_clock;

  Session(std::string id, BridgeConfig config, Corpus corpus);

  const std::string& id() const { return id_; }
  SessionStatus status() const;
  double sim_time() const;

  void start(const std::string& plan_name);
  void reset();
  void handle(const ClientMessage& msg);

  /// Ticks until sim time reaches `until` or the trial ends. Returns the
  /// messages to broadcast, in order. Samples are decimated by wall time,
  /// events never are.
  std::vector<std::string> advance_to(double until, Clock::time_point now);

  nlohmann::json summary() const;

 private:
  void emit(std::vector<std::string>& out, std::string_view type, double t,
            nlohmann::json fields = nlohmann::json::object());

  std::string id_;
  BridgeConfig config_;
  Corpus corpus_;
  std::unique_ptr<TrialRunner> runner_;
  std::string plan_name_;
  std::vector<std::string> pending_;  // messages produced outside ticks
  std::optional<Clock::time_point> last_sample_;
  std::optional<ControllerMode> last_mode_;
  double last_speed_ = 1.0;
};

/// HTTP + WebSocket front end. Routes:
///   POST /session                 -> {"session_id"}
///   POST /session/{id}/start      body {"plan"} optional
///   POST /session/{id}/reset
///   GET  /session/{id}/summary
///   GET  /session/{id}/ws         WebSocket upgrade
class BridgeServer {
 public:
  explicit BridgeServer(BridgeConfig config);
  ~BridgeServer();
  BridgeServer(const BridgeServer&) = delete;
  BridgeServer& operator=(const BridgeServer&) = delete;

  /// Binds and starts serving on a background thread. Returns the bound port.
  unsigned short start();
  /// Serves on the calling thread until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

void run_bridge(const BridgeConfig& config);

}  // namespace dressguard
