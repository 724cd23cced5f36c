#pragma once

#include <array>
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "langworld/actions.hpp"
#include "langworld/task.hpp"
#include "langworld/world.hpp"

namespace langworld {

// ---------------------------------------------------------------------------
// Strategies

enum class StrategyKind : std::uint8_t { Act, ReAct, ReActEmMem, Reflexion, ReflexionEmMem };

// "Act", "ReAct", "ReAct+EmMem", "Reflexion", "Reflexion+EmMem".
std::string_view strategy_name(StrategyKind k);
std::optional<StrategyKind> parse_strategy(std::string_view name);

struct Strategy {
  StrategyKind kind = StrategyKind::ReAct;
  int max_trials = 1;

  bool thinks() const { return kind != StrategyKind::Act; }
  bool emmem() const { return kind == StrategyKind::ReActEmMem || kind == StrategyKind::ReflexionEmMem; }
  bool reflexion() const { return kind == StrategyKind::Reflexion || kind == StrategyKind::ReflexionEmMem; }

  // Reflexion variants default to two trials. Throws ConfigError for max_trials < 1.
  static Strategy of(StrategyKind kind, std::optional<int> max_trials = std::nullopt);
};

inline constexpr std::array<StrategyKind, 5> kAllStrategies = {StrategyKind::Act, StrategyKind::ReAct, StrategyKind::ReActEmMem,
                                                                StrategyKind::Reflexion, StrategyKind::ReflexionEmMem};

// ---------------------------------------------------------------------------
// Prompts

// Template family for a role of the task: ig, rearrangement, iqa, household, ma_teach_commander,
// ma_teach_follower or ma_wah.
std::string template_family(const TaskSpec& task, std::string_view agent_id);

// Instruction text sent before the handshake. Reflexion variants carry the memory line (empty
// on the first trial). `examples` replaces the template's exemplar block when non-empty.
// Throws MissingTemplate or UnboundSlot.
std::string build_system_prompt(const TaskSpec& task, const WorldState& world, std::string_view agent_id,
                                const Strategy& strategy, const std::vector<std::string>& examples = {},
                                std::string_view memory = {});

// Per-turn message carrying the task and the first observation.
std::string build_task_prompt(const TaskSpec& task, const WorldState& world, std::string_view agent_id,
                              const Strategy& strategy, std::string_view observation);

// ---------------------------------------------------------------------------
// Dialogue

enum class Speaker : std::uint8_t { System, Assistant };

struct ChatMessage {
  Speaker speaker = Speaker::System;
  std::string text;

  bool operator==(const ChatMessage&) const = default;
};

struct Dialogue {
  std::vector<ChatMessage> messages;
  std::optional<std::string> pending_feedback;
  int trial_index = 0;
  std::optional<std::string> reflexion_memory;

  void system(std::string text) { messages.push_back({Speaker::System, std::move(text)}); }
  void assistant(std::string text) { messages.push_back({Speaker::Assistant, std::move(text)}); }
  // "System: ..." / "<name>: ..." lines.
  std::string transcript(std::string_view assistant_name = "Assistant") const;
};

// ---------------------------------------------------------------------------
// Replies

enum class ReplyKind : std::uint8_t { Thought, Act, Chat, Ask, Stop };

std::string_view reply_kind_name(ReplyKind k);

struct AgentReply {
  ReplyKind kind = ReplyKind::Thought;
  // Thought text, chat or ask message, or stop answer.
  std::string text;
  // Set for every kind except Thought.
  std::optional<ActionCall> call;
  // Nothing usable was found; the loop should re-prompt.
  bool warning = false;
  // Thought and action arrived together.
  bool has_pending_action = false;
  std::string raw;
};

// Total: never throws. With `thought_acknowledged` a reply carrying both a thought and an action
// yields the action.
AgentReply parse_agent_reply(std::string_view text, const ActionSpace& space, bool thought_acknowledged = false);

// ---------------------------------------------------------------------------
// Backends

struct CompletionParams {
  std::string model = "gpt-3.5-turbo";
  double temperature = 1.0;
  int max_tokens = 256;
  // http(s)://host[:port]/path of a chat-completions endpoint.
  std::string endpoint;
  std::string api_key;
  int max_retries = 4;
  std::chrono::milliseconds base_backoff{200};
  std::chrono::milliseconds timeout{30000};
};

class AgentBackend {
public:
  virtual ~AgentBackend() = default;
  // Throws BackendError or Timeout.
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
  virtual std::string name() const = 0;
};

// Replays canned replies in order; throws BackendError when exhausted.
class ScriptedBackend : public AgentBackend {
public:
  explicit ScriptedBackend(std::vector<std::string> replies, std::string label = "scripted");
  std::string complete(const std::vector<ChatMessage>& messages) override;
  std::string name() const override { return label_; }
  std::size_t remaining() const;

private:
  mutable std::mutex mu_;
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
  std::string label_;
};

// Delegates to a callable; the mock used by tests and the gateway's dry runs.
class FunctionBackend : public AgentBackend {
public:
  using Fn = std::function<std::string(const std::vector<ChatMessage>&)>;
  explicit FunctionBackend(Fn fn, std::string label = "mock") : fn_(std::move(fn)), label_(std::move(label)) {}
  std::string complete(const std::vector<ChatMessage>& messages) override { return fn_(messages); }
  std::string name() const override { return label_; }

private:
  Fn fn_;
  std::string label_;
};

// Reads one line per turn from a source; an empty optional means the human timed out.
class HumanBackend : public AgentBackend {
public:
  using Source = std::function<std::optional<std::string>(const std::vector<ChatMessage>&)>;
  explicit HumanBackend(Source source) : source_(std::move(source)) {}
  // Throws HumanTimeout.
  std::string complete(const std::vector<ChatMessage>& messages) override;
  std::string name() const override { return "human"; }

private:
  Source source_;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Chat-completions client with exponential backoff on 429 and 5xx.
class HttpBackend : public AgentBackend {
public:
  using Transport = std::function<std::optional<HttpResponse>(const std::string& body)>;
  explicit HttpBackend(CompletionParams params);
  // Custom transport for tests; an empty optional is a connection failure.
  HttpBackend(CompletionParams params, Transport transport);
  std::string complete(const std::vector<ChatMessage>& messages) override;
  std::string name() const override { return "http:" + params_.model; }
  void set_sleep(std::function<void(std::chrono::milliseconds)> fn) { sleep_ = std::move(fn); }

  static std::string request_body(const CompletionParams& params, const std::vector<ChatMessage>& messages);
  int attempts() const;

private:
  CompletionParams params_;
  Transport transport_;
  std::function<void(std::chrono::milliseconds)> sleep_;
  mutable std::mutex mu_;
  int attempts_ = 0;
};

// Counts calls and enforces a cap.
class BudgetedBackend : public AgentBackend {
public:
  BudgetedBackend(std::shared_ptr<AgentBackend> inner, int cap) : inner_(std::move(inner)), cap_(cap) {}
  // Throws BudgetExceeded once `cap` calls were made.
  std::string complete(const std::vector<ChatMessage>& messages) override;
  std::string name() const override { return inner_->name(); }
  int calls() const;

private:
  std::shared_ptr<AgentBackend> inner_;
  int cap_;
  mutable std::mutex mu_;
  int calls_ = 0;
};

// ---------------------------------------------------------------------------
// Reflexion

std::string reflection_request(std::string_view trial_transcript);

// Asks the backend for a reflection over a failed trial. Throws TrialLimit when no trial remains,
// BackendError from the backend.
std::string reflect(AgentBackend& backend, std::string_view trial_transcript, const Strategy& strategy, int trial_index);

}  // namespace langworld
