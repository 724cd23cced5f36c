#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "langworld/generator.hpp"
#include "langworld/json_util.hpp"
#include "langworld/promptkit.hpp"
#include "langworld/runtime.hpp"

namespace httplib {
class Server;
}

namespace langworld {

// ---------------------------------------------------------------------------
// Task references

// "<family>_<seed>" (e.g. "household_000012", "ma_teach_3"), "ma_wah_transcript", or a task file
// under one of `task_dirs` whose scene refs resolve to scene files beside it.
// Throws UnknownTask.
Scenario resolve_task_ref(std::string_view ref, const std::vector<std::filesystem::path>& task_dirs = {});

// ---------------------------------------------------------------------------
// Backends

// "expert" (solo families), "mock" (confirms, then the space's first zero-arity action, else stop),
// "script:<file.json>" (array of replies), "http" (chat completions; LANGWORLD_ENDPOINT,
// LANGWORLD_API_KEY, LANGWORLD_MODEL). Throws ConfigError.
std::shared_ptr<AgentBackend> make_backend(std::string_view spec, const Scenario& sc, std::string_view agent_id,
                                           const CompletionParams& params = {});

// ---------------------------------------------------------------------------
// Sessions

enum class SessionStatus : std::uint8_t { AwaitingHuman, AgentTurn, Finished };

std::string_view session_status_name(SessionStatus s);

struct SessionRequest {
  std::string task_ref;
  // Agent ids or role names ("commander", "peer" is ambiguous for MA-WAH).
  std::vector<std::string> human_roles;
  std::string strategy = "ReAct";
  std::string backend = "mock";
  std::uint64_t seed = 0;
  std::optional<int> step_limit;
};

// Throws SchemaError.
SessionRequest session_request_from_json(const Json& j);

struct HumanInput {
  // action, chat or answer.
  std::string kind;
  std::string text;
  // Defaults to the agent whose turn it is.
  std::string agent_id;
};

struct InputResult {
  Json feedback;
  std::optional<std::string> observation;
  std::optional<Json> final_report;
  Json to_json() const;
};

class Session {
public:
  Session(std::string id, Scenario sc, std::set<std::string> human_agents, Strategy strategy,
          std::map<std::string, std::shared_ptr<AgentBackend>, std::less<>> agent_backends, Limits limits,
          std::chrono::milliseconds ask_timeout);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const { return id_; }
  SessionStatus status() const;
  Json describe() const;

  // Blocks until the episode waits for a human again or ends. Throws NotYourTurn or SessionFinished.
  InputResult post(const HumanInput& input, std::chrono::milliseconds wait = std::chrono::seconds(60));

  // Events from `cursor`, blocking up to `wait` when none are available yet.
  std::vector<TranscriptEvent> events_from(std::size_t cursor, std::chrono::milliseconds wait) const;
  std::size_t event_count() const;
  bool finished() const;
  // Blocks until the session reaches a human turn or finishes.
  void settle(std::chrono::milliseconds wait = std::chrono::seconds(60)) const;
  // Available once finished.
  std::optional<std::string> episode_jsonl() const;

private:
  std::optional<std::string> human_turn(const std::string& agent_id, const std::vector<ChatMessage>& messages);
  std::optional<std::string> human_answer(std::string_view agent_id, std::string_view question);
  void run();

  std::string id_;
  Scenario scenario_;
  std::set<std::string> human_agents_;
  std::map<std::string, std::shared_ptr<AgentBackend>, std::less<>> backends_;
  Limits limits_;
  std::chrono::milliseconds ask_timeout_;

  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::vector<TranscriptEvent> events_;
  SessionStatus status_ = SessionStatus::AgentTurn;
  std::optional<std::string> awaiting_agent_;
  std::optional<std::string> pending_ask_;
  std::deque<std::string> inbox_;
  bool closing_ = false;
  std::optional<Episode> episode_;
  std::optional<std::string> error_;
  std::thread worker_;
};

class SessionManager {
public:
  explicit SessionManager(std::vector<std::filesystem::path> task_dirs = {},
                          std::chrono::milliseconds ask_timeout = std::chrono::seconds(120));
  // Throws UnknownTask, RoleConflict or ConfigError.
  std::shared_ptr<Session> create(const SessionRequest& req);
  // Throws UnknownSession.
  std::shared_ptr<Session> get(std::string_view id) const;

private:
  std::vector<std::filesystem::path> task_dirs_;
  std::chrono::milliseconds ask_timeout_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>, std::less<>> sessions_;
  std::uint64_t next_ = 1;
};

// ---------------------------------------------------------------------------
// HTTP service

// Routes under /v1: POST /sessions, GET /sessions/{id}, POST /sessions/{id}/input,
// GET /sessions/{id}/events?cursor=k (text/event-stream), GET /episodes/{id},
// GET /action_spaces/{id}.
void install_routes(httplib::Server& server, SessionManager& sessions);

// Event-stream frame: "id: <index>\nevent: transcript\ndata: <event json>\n\n".
std::string sse_frame(std::size_t index, const TranscriptEvent& e);

}  // namespace langworld
