#pragma once

#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "dressguard/scenario.hpp"

namespace dressguard {

/// What a scripted user can perceive: the sleeve's pull, where the arm is
/// in the sequence, and what the robot just said.
struct AgentView {
  double t = 0.0;
  double force = 0.0;
  WaypointLabel segment = WaypointLabel::Hand;
  double progress = 0.0;
  std::vector<std::string> robot_said;
};

struct AgentAction {
  bool estop = false;
  std::string text;
};

class UserAgent {
 public:
  virtual ~UserAgent() = default;
  /// Called once per tick; returns the actions that are due now.
  virtual std::vector<AgentAction> observe(const AgentView& view) = 0;
};

/// One scripted participant covering every agent kind. Speaks corpus
/// phrasings so that replies go through the classifier.
class ScriptedUser final : public UserAgent {
 public:
  explicit ScriptedUser(AgentSpec spec);
  std::vector<AgentAction> observe(const AgentView& view) override;

 private:
  struct Pending {
    double due = 0.0;
    AgentAction action;
    bool judge_assist = false;  // decide fixed / not fixed when due
  };

  void react(const std::string& robot_text, double t);
  void schedule(double due, std::string text);
  bool assists() const;

  AgentSpec spec_;
  std::deque<Pending> pending_;
  std::size_t next_pain_ = 0;
  int gentle_left_ = 0;
  bool estop_armed_ = true;
};

std::unique_ptr<UserAgent> make_agent(const AgentSpec& spec);

}  // namespace dressguard
