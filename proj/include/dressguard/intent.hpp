#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dressguard {

/// Declaration order is the classifier's tie-break order.
enum class Intent {
  SnagAssist,
  CannotResolve,
  ConfirmFixed,
  AbortTask,
  MoreGentle,
  SpeedOk,
  ReportPain,
  PauseDressing,
  ResumeDressing,
  StartDressing,
  EmergencyStop,
  AutoRecover,
  Unknown,
};

std::string_view to_string(Intent intent);
Intent intent_from_string(std::string_view name);

/// report_pain, pause_dressing and emergency_stop bypass the active prompt.
bool is_interrupt(Intent intent);

class IntentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lowercases, maps every non-alphanumeric character to a separator and
/// splits; repeated tokens are dropped, first-seen order is kept.
std::vector<std::string> tokenize(std::string_view text);

/// Training utterances per intent, in file order.
struct Corpus {
  std::vector<std::pair<Intent, std::vector<std::string>>> entries;

  /// Parses the `nlu:` / `- intent:` / `examples: |` layout.
  static Corpus parse(std::string_view yaml_text);
  static Corpus load(const std::filesystem::path& path);

  /// Throws unless every intent except unknown has at least three examples
  /// and no normalized utterance appears under two intents.
  void validate() const;

  const std::vector<std::string>* examples(Intent intent) const;
};

struct Classification {
  Intent intent = Intent::Unknown;
  double score = 0.0;
};

inline constexpr double kIntentThreshold = 0.5;

/// Token-overlap scorer: for each example, |tokens(text) ∩ tokens(example)|
/// over |tokens(example)|; an intent scores its best example. The top intent
/// wins if it reaches kIntentThreshold, otherwise the result is unknown.
Classification classify(std::string_view text, const Corpus& corpus);

enum class PromptKind {
  SnagAssist,
  AssistConfirm,
  SnagEscalate,
  PainChoice,
  SpeedCheck,
  PainAbort,
  Paused,
  Aborted,
};

std::string_view to_string(PromptKind kind);
PromptKind prompt_kind_from_string(std::string_view name);

struct Prompt {
  PromptKind kind = PromptKind::SnagAssist;
  std::string text;
  std::vector<Intent> allowed;

  bool allows(Intent intent) const;
};

Prompt render_prompt(PromptKind kind);

/// PainAbort and Aborted only inform; they never become the active prompt.
bool is_notification(PromptKind kind);

/// Reverse lookup used by scripted users who read the robot's text.
std::optional<PromptKind> prompt_kind_from_text(std::string_view text);

enum class Speaker { User, Robot };

struct TranscriptEntry {
  Speaker speaker = Speaker::User;
  std::string text;
  double t = 0.0;

  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

struct DialogueState {
  std::optional<Prompt> active_prompt;
  double prompt_opened_at = 0.0;
  int failures = 0;
  std::vector<TranscriptEntry> transcript;
};

struct DispatchResult {
  Classification classification;
  std::optional<Intent> forwarded;
  std::string reply;  // empty when the robot has nothing to say right away
};

/// Chat-side state machine between the user and the controller.
class DialogueManager {
 public:
  struct Options {
    // Silent sessions (baseline) never utter anything and forward only
    // emergency stops.
    bool silent = false;
  };

  explicit DialogueManager(Corpus corpus);
  DialogueManager(Corpus corpus, Options options);

  DispatchResult dispatch(std::string_view user_text, double t);

  /// Opens `kind` as the active prompt and utters it. Returns false when
  /// dispatch already opened and uttered the same prompt for this reply.
  bool present(PromptKind kind, double t);
  void close_prompt();

  /// No reply within the prompt timeout; handled like an unrecognized reply.
  DispatchResult prompt_timeout(double t);

  const DialogueState& state() const { return state_; }
  const Corpus& corpus() const { return corpus_; }

 private:
  DispatchResult reject(Classification c, double t);
  void say(std::string text, double t);

  Corpus corpus_;
  Options options_;
  DialogueState state_;
  bool opened_by_dispatch_ = false;
};

}  // namespace dressguard
