#include "dressguard/intent.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace dressguard {

namespace {

constexpr std::array<std::pair<Intent, std::string_view>, 13> kIntentNames{{
    {Intent::SnagAssist, "snag_assist"},
    {Intent::CannotResolve, "cannot_resolve"},
    {Intent::ConfirmFixed, "confirm_fixed"},
    {Intent::AbortTask, "abort_task"},
    {Intent::MoreGentle, "more_gentle"},
    {Intent::SpeedOk, "speed_ok"},
    {Intent::ReportPain, "report_pain"},
    {Intent::PauseDressing, "pause_dressing"},
    {Intent::ResumeDressing, "resume_dressing"},
    {Intent::StartDressing, "start_dressing"},
    {Intent::EmergencyStop, "emergency_stop"},
    {Intent::AutoRecover, "auto_recover"},
    {Intent::Unknown, "unknown"},
}};

constexpr std::array<std::pair<PromptKind, std::string_view>, 8> kPromptNames{{
    {PromptKind::SnagAssist, "SnagAssist"},
    {PromptKind::AssistConfirm, "AssistConfirm"},
    {PromptKind::SnagEscalate, "SnagEscalate"},
    {PromptKind::PainChoice, "PainChoice"},
    {PromptKind::SpeedCheck, "SpeedCheck"},
    {PromptKind::PainAbort, "PainAbort"},
    {PromptKind::Paused, "Paused"},
    {PromptKind::Aborted, "Aborted"},
}};

constexpr std::string_view kNotUnderstood = "Sorry, I did not understand that.";
constexpr std::string_view kSnagRecoverAck = "Attempting to resolve the snag...";

}  // namespace

std::string_view to_string(Intent intent) {
  for (const auto& [i, name] : kIntentNames) {
    if (i == intent) return name;
  }
  return "unknown";
}

Intent intent_from_string(std::string_view name) {
  for (const auto& [i, n] : kIntentNames) {
    if (n == name) return i;
  }
  throw IntentError(fmt::format("unknown intent name '{}'", name));
}

bool is_interrupt(Intent intent) {
  return intent == Intent::ReportPain || intent == Intent::PauseDressing ||
         intent == Intent::EmergencyStop;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    if (std::find(tokens.begin(), tokens.end(), current) == tokens.end()) {
      tokens.push_back(current);
    }
    current.clear();
  };
  for (char ch : text) {
    const auto uc = static_cast<unsigned char>(ch);
    if (std::isalnum(uc)) {
      current.push_back(static_cast<char>(std::tolower(uc)));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

Corpus Corpus::parse(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw IntentError(fmt::format("corpus is not valid YAML: {}", e.what()));
  }
  const YAML::Node nlu = root["nlu"];
  if (!nlu || !nlu.IsSequence()) throw IntentError("corpus needs a top-level 'nlu' list");

  Corpus corpus;
  for (const auto& block : nlu) {
    if (!block["intent"] || !block["examples"]) {
      throw IntentError("each corpus entry needs 'intent' and 'examples'");
    }
    const Intent intent = intent_from_string(block["intent"].as<std::string>());
    if (intent == Intent::Unknown) throw IntentError("'unknown' cannot carry examples");
    if (corpus.examples(intent) != nullptr) {
      throw IntentError(fmt::format("intent '{}' listed twice", to_string(intent)));
    }
    std::vector<std::string> examples;
    std::istringstream lines(block["examples"].as<std::string>());
    for (std::string line; std::getline(lines, line);) {
      const auto start = line.find_first_not_of(" \t");
      if (start == std::string::npos) continue;
      if (line[start] != '-') {
        throw IntentError(fmt::format("example line must start with '-': '{}'", line));
      }
      auto body = line.substr(start + 1);
      body.erase(0, body.find_first_not_of(" \t"));
      body.erase(body.find_last_not_of(" \t\r") + 1);
      if (!body.empty()) examples.push_back(std::move(body));
    }
    corpus.entries.emplace_back(intent, std::move(examples));
  }
  corpus.validate();
  return corpus;
}

Corpus Corpus::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IntentError(fmt::format("cannot open corpus file {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void Corpus::validate() const {
  for (const auto& [intent, name] : kIntentNames) {
    if (intent == Intent::Unknown) continue;
    const auto* ex = examples(intent);
    if (ex == nullptr || ex->size() < 3) {
      throw IntentError(fmt::format("intent '{}' needs at least 3 examples", name));
    }
  }
  std::map<std::vector<std::string>, Intent> seen;
  for (const auto& [intent, examples] : entries) {
    for (const auto& ex : examples) {
      auto [it, inserted] = seen.emplace(tokenize(ex), intent);
      if (!inserted && it->second != intent) {
        throw IntentError(fmt::format("utterance '{}' appears under '{}' and '{}'", ex,
                                      to_string(it->second), to_string(intent)));
      }
    }
  }
}

const std::vector<std::string>* Corpus::examples(Intent intent) const {
  for (const auto& [i, ex] : entries) {
    if (i == intent) return &ex;
  }
  return nullptr;
}

Classification classify(std::string_view text, const Corpus& corpus) {
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw IntentError("cannot classify empty text");

  Classification best;
  for (const auto& [intent, name] : kIntentNames) {
    const auto* examples = corpus.examples(intent);
    if (examples == nullptr) continue;
    double score = 0.0;
    for (const auto& ex : *examples) {
      const auto ex_tokens = tokenize(ex);
      if (ex_tokens.empty()) continue;
      std::size_t shared = 0;
      for (const auto& tok : ex_tokens) {
        if (std::find(tokens.begin(), tokens.end(), tok) != tokens.end()) ++shared;
      }
      score = std::max(score, static_cast<double>(shared) / static_cast<double>(ex_tokens.size()));
    }
    // Strict comparison keeps the earliest-declared intent on ties.
    if (score > best.score) best = {intent, score};
  }
  if (best.score < kIntentThreshold) best.intent = Intent::Unknown;
  return best;
}

std::string_view to_string(PromptKind kind) {
  for (const auto& [k, name] : kPromptNames) {
    if (k == kind) return name;
  }
  return "?";
}

PromptKind prompt_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kPromptNames) {
    if (n == name) return k;
  }
  throw IntentError(fmt::format("unknown prompt kind '{}'", name));
}

bool Prompt::allows(Intent intent) const {
  return std::find(allowed.begin(), allowed.end(), intent) != allowed.end();
}

Prompt render_prompt(PromptKind kind) {
  switch (kind) {
    case PromptKind::SnagAssist:
      return {kind,
              "I have detected a snag. Do you want to assist me by adjusting the garment or "
              "would you like me to abort the dressing?",
              {Intent::SnagAssist, Intent::ConfirmFixed, Intent::CannotResolve, Intent::AbortTask,
               Intent::AutoRecover}};
    case PromptKind::AssistConfirm:
      return {kind,
              "I am in compliance mode so you can adjust the garment. Let me know when the snag "
              "is fixed.",
              {Intent::ConfirmFixed, Intent::CannotResolve, Intent::AbortTask}};
    case PromptKind::SnagEscalate:
      return {kind,
              "The garment is stuck. Would you like me to abort the task or attempt to resolve it "
              "autonomously?",
              {Intent::AbortTask, Intent::AutoRecover, Intent::SnagAssist}};
    case PromptKind::PainChoice:
      return {kind,
              "It looks like you are in pain. Would you like me to continue with the dressing but "
              "be more gentle, or abort the dressing?",
              {Intent::MoreGentle, Intent::SpeedOk, Intent::AbortTask}};
    case PromptKind::SpeedCheck:
      return {kind,
              "I have reduced the speed. Please let me know if this is better or if you would "
              "like me to stop.",
              {Intent::MoreGentle, Intent::SpeedOk, Intent::AbortTask}};
    case PromptKind::PainAbort:
      return {kind,
              "It seems you are in a lot of pain. I will abort the task and call for assistance. "
              "Please take care.",
              {Intent::AbortTask}};
    case PromptKind::Paused:
      return {kind,
              "I have paused the dressing. Let me know when I should resume.",
              {Intent::ResumeDressing, Intent::AbortTask}};
    case PromptKind::Aborted:
      return {kind,
              "I have aborted the dressing and I am returning to my home position.",
              {Intent::AbortTask}};
  }
  throw IntentError("unhandled prompt kind");
}

bool is_notification(PromptKind kind) {
  return kind == PromptKind::PainAbort || kind == PromptKind::Aborted;
}

std::optional<PromptKind> prompt_kind_from_text(std::string_view text) {
  for (const auto& [kind, name] : kPromptNames) {
    const Prompt p = render_prompt(kind);
    if (text == p.text) return kind;
    if (text.size() > p.text.size() && text.ends_with(p.text)) return kind;  // re-prompts
  }
  return std::nullopt;
}

DialogueManager::DialogueManager(Corpus corpus) : DialogueManager(std::move(corpus), Options{}) {}

DialogueManager::DialogueManager(Corpus corpus, Options options)
    : corpus_(std::move(corpus)), options_(options) {}

void DialogueManager::say(std::string text, double t) {
  if (options_.silent || text.empty()) return;
  state_.transcript.push_back({Speaker::Robot, std::move(text), t});
}

DispatchResult DialogueManager::dispatch(std::string_view user_text, double t) {
  state_.transcript.push_back({Speaker::User, std::string(user_text), t});
  DispatchResult result;
  result.classification = classify(user_text, corpus_);
  const Intent intent = result.classification.intent;

  if (options_.silent) {
    if (intent == Intent::EmergencyStop) result.forwarded = intent;
    return result;
  }
  if (intent == Intent::Unknown) return reject(result.classification, t);

  const bool allowed = state_.active_prompt && state_.active_prompt->allows(intent);
  if (!is_interrupt(intent) && !allowed) return reject(result.classification, t);

  result.forwarded = intent;
  close_prompt();
  if (intent == Intent::PauseDressing) {
    state_.active_prompt = render_prompt(PromptKind::Paused);
    state_.prompt_opened_at = t;
    opened_by_dispatch_ = true;
    result.reply = state_.active_prompt->text;
  } else if (intent == Intent::AutoRecover) {
    result.reply = std::string(kSnagRecoverAck);
  }
  say(result.reply, t);
  return result;
}

DispatchResult DialogueManager::reject(Classification c, double t) {
  DispatchResult result;
  result.classification = c;
  state_.failures += 1;
  if (state_.active_prompt && state_.failures >= 2 &&
      state_.active_prompt->allows(Intent::CannotResolve)) {
    result.forwarded = Intent::CannotResolve;
    close_prompt();
    return result;
  }
  result.reply = state_.active_prompt
                     ? fmt::format("{} {}", kNotUnderstood, state_.active_prompt->text)
                     : std::string(kNotUnderstood);
  say(result.reply, t);
  return result;
}

DispatchResult DialogueManager::prompt_timeout(double t) {
  if (!state_.active_prompt) return {};
  state_.prompt_opened_at = t;
  return reject(Classification{}, t);
}

bool DialogueManager::present(PromptKind kind, double t) {
  if (options_.silent) return false;
  if (opened_by_dispatch_ && state_.active_prompt && state_.active_prompt->kind == kind) {
    opened_by_dispatch_ = false;
    return false;
  }
  opened_by_dispatch_ = false;
  Prompt prompt = render_prompt(kind);
  say(prompt.text, t);
  state_.failures = 0;
  if (is_notification(kind)) {
    state_.active_prompt.reset();
  } else {
    state_.active_prompt = std::move(prompt);
    state_.prompt_opened_at = t;
  }
  return true;
}

void DialogueManager::close_prompt() {
  state_.active_prompt.reset();
  state_.failures = 0;
  opened_by_dispatch_ = false;
}

}  // namespace dressguard
