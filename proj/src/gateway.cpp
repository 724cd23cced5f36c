#include "langworld/gateway.hpp"

#include <cstdlib>
#include <regex>

#include <fmt/format.h>
#include <httplib.h>

#include "langworld/error.hpp"
#include "langworld/planner.hpp"
#include "langworld/scene_io.hpp"
#include "langworld/text.hpp"

namespace langworld {

using namespace json_util;

// ---------------------------------------------------------------------------
// Task references

namespace {

std::optional<TaskType> family_from_slug(std::string_view slug) {
  for (auto t : {TaskType::IG, TaskType::Rearrangement, TaskType::IQA, TaskType::Household, TaskType::MATeach, TaskType::MAWAH}) {
    if (text::replace_all(text::lower(task_type_name(t)), "-", "_") == slug) return t;
  }
  return std::nullopt;
}

std::optional<Scenario> task_from_dirs(std::string_view ref, const std::vector<std::filesystem::path>& dirs) {
  for (const auto& dir : dirs) {
    const auto path = dir / (std::string(ref) + ".json");
    if (!std::filesystem::exists(path)) continue;
    const std::vector<std::filesystem::path> scene_dirs = {dir, dir / "scenes", dir.parent_path() / "scenes"};
    Scenario sc;
    bool have_scene = false;
    sc.task = load_task(read_json_file(path), [&](std::string_view scene_ref) -> std::optional<WorldState> {
      for (const auto& sd : scene_dirs) {
        const auto p = sd / (std::string(scene_ref) + ".json");
        if (std::filesystem::exists(p)) return load_scene_file(p);
      }
      return std::nullopt;
    });
    for (const auto& sd : scene_dirs) {
      const auto p = sd / (sc.task.scene_ref + ".json");
      if (!have_scene && std::filesystem::exists(p)) {
        sc.scene = load_scene_file(p);
        have_scene = true;
      }
    }
    if (have_scene) return sc;
  }
  return std::nullopt;
}

}  // namespace

Scenario resolve_task_ref(std::string_view ref, const std::vector<std::filesystem::path>& task_dirs) {
  if (ref == "ma_wah_transcript") return mawah_transcript_scenario();
  static const std::regex generated(R"(^([a-z_]+?)_(\d{1,18})$)");
  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_match(ref.begin(), ref.end(), m, generated)) {
    if (const auto type = family_from_slug(m[1].str())) return generate_task(*type, std::stoull(m[2].str()));
  }
  if (auto sc = task_from_dirs(ref, task_dirs)) return std::move(*sc);
  throw Error(ErrorCode::UnknownTask, "unknown task " + std::string(ref));
}

// ---------------------------------------------------------------------------
// Backends

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : std::move(fallback);
}

std::string mock_action(const ActionSpace& space) {
  for (const char* preferred : {"no_op", "turn_left"}) {
    if (space.find(preferred)) return fmt::format("Act: {}", preferred);
  }
  for (const auto& a : space.actions) {
    if (a.arity == 0) return "Act: " + a.name;
  }
  return "Act: stop [N/A]";
}

}  // namespace

std::shared_ptr<AgentBackend> make_backend(std::string_view spec, const Scenario& sc, std::string_view agent_id,
                                           const CompletionParams& params) {
  const auto* role = sc.task.role_of(agent_id);
  if (!role) throw Error(ErrorCode::ConfigError, "no role " + std::string(agent_id));
  if (spec == "expert") {
    if (sc.task.roles.size() != 1) throw Error(ErrorCode::ConfigError, "the expert backend plays single-agent tasks only");
    std::vector<std::string> replies = {"YES."};
    try {
      for (const auto& c : generate_trajectory(sc.scene, sc.task)) replies.push_back("Act: " + c.text());
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, std::string("no expert trajectory: ") + e.what());
    }
    return std::make_shared<ScriptedBackend>(std::move(replies), "expert");
  }
  if (spec == "mock") {
    const auto action = mock_action(builtin_action_space(role->action_space));
    return std::make_shared<FunctionBackend>(
        [action](const std::vector<ChatMessage>& m) { return m.size() == 1 ? std::string("YES.") : action; }, "mock");
  }
  if (spec.rfind("script:", 0) == 0) {
    const Json doc = read_json_file(std::filesystem::path(std::string(spec.substr(7))));
    std::vector<std::string> replies;
    const Json* list = &doc;
    if (doc.is_object()) {
      if (!doc.contains(agent_id)) throw Error(ErrorCode::ConfigError, "script has no replies for " + std::string(agent_id));
      list = &doc.at(std::string(agent_id));
    }
    if (!list->is_array()) throw Error(ErrorCode::ConfigError, "script must be an array of replies");
    for (const auto& r : *list) replies.push_back(r.get<std::string>());
    return std::make_shared<ScriptedBackend>(std::move(replies), "script");
  }
  if (spec == "http") {
    CompletionParams p = params;
    if (p.endpoint.empty()) p.endpoint = env_or("LANGWORLD_ENDPOINT", "http://127.0.0.1:8000/v1/chat/completions");
    if (p.api_key.empty()) p.api_key = env_or("LANGWORLD_API_KEY", "");
    p.model = env_or("LANGWORLD_MODEL", p.model);
    return std::make_shared<HttpBackend>(std::move(p));
  }
  throw Error(ErrorCode::ConfigError, "unknown backend " + std::string(spec));
}

// ---------------------------------------------------------------------------
// Sessions

std::string_view session_status_name(SessionStatus s) {
  switch (s) {
    case SessionStatus::AwaitingHuman: return "awaiting_human";
    case SessionStatus::AgentTurn: return "agent_turn";
    case SessionStatus::Finished: return "finished";
  }
  return "agent_turn";
}

SessionRequest session_request_from_json(const Json& j) {
  const std::string where = "session request";
  if (!j.is_object()) schema_fail(where, "expected an object");
  SessionRequest r;
  r.task_ref = as_string(require(j, "task_ref", where), where);
  if (const auto* f = optional(j, "human_roles")) {
    if (!f->is_array()) schema_fail(where, "human_roles must be an array");
    for (const auto& v : *f) r.human_roles.push_back(as_string(v, where));
  }
  if (const auto* f = optional(j, "strategy")) r.strategy = as_string(*f, where);
  if (const auto* f = optional(j, "backend")) r.backend = as_string(*f, where);
  if (const auto* f = optional(j, "seed")) r.seed = static_cast<std::uint64_t>(as_integer(*f, where));
  if (const auto* f = optional(j, "step_limit")) r.step_limit = static_cast<int>(as_integer(*f, where));
  return r;
}

Json InputResult::to_json() const {
  Json j = {{"feedback", feedback}};
  if (observation) j["observation"] = *observation;
  if (final_report) j["final_report"] = *final_report;
  return j;
}

Session::Session(std::string id, Scenario sc, std::set<std::string> human_agents, Strategy strategy,
                 std::map<std::string, std::shared_ptr<AgentBackend>, std::less<>> agent_backends, Limits limits,
                 std::chrono::milliseconds ask_timeout)
    : id_(std::move(id)),
      scenario_(std::move(sc)),
      human_agents_(std::move(human_agents)),
      backends_(std::move(agent_backends)),
      limits_(std::move(limits)),
      ask_timeout_(ask_timeout) {
  limits_.strategy = strategy;
  for (const auto& agent : human_agents_) {
    backends_[agent] =
        std::make_shared<HumanBackend>([this, agent](const std::vector<ChatMessage>& m) { return human_turn(agent, m); });
  }
  worker_ = std::thread([this] { run(); });
}

Session::~Session() {
  {
    std::lock_guard lock(mu_);
    closing_ = true;
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

std::optional<std::string> Session::human_turn(const std::string& agent_id, const std::vector<ChatMessage>& messages) {
  // The instruction handshake is confirmed on the human's behalf.
  if (messages.size() == 1) return std::string("YES.");
  std::unique_lock lock(mu_);
  awaiting_agent_ = agent_id;
  status_ = SessionStatus::AwaitingHuman;
  cv_.notify_all();
  cv_.wait(lock, [&] { return !inbox_.empty() || closing_; });
  if (closing_ && inbox_.empty()) return std::nullopt;
  auto text = std::move(inbox_.front());
  inbox_.pop_front();
  awaiting_agent_.reset();
  status_ = SessionStatus::AgentTurn;
  return text;
}

std::optional<std::string> Session::human_answer(std::string_view agent_id, std::string_view question) {
  std::unique_lock lock(mu_);
  awaiting_agent_ = std::string(agent_id);
  pending_ask_ = std::string(question);
  status_ = SessionStatus::AwaitingHuman;
  cv_.notify_all();
  cv_.wait_for(lock, ask_timeout_, [&] { return !inbox_.empty() || closing_; });
  std::optional<std::string> answer;
  if (!inbox_.empty()) {
    answer = std::move(inbox_.front());
    inbox_.pop_front();
  }
  pending_ask_.reset();
  awaiting_agent_.reset();
  status_ = SessionStatus::AgentTurn;
  return answer;
}

void Session::run() {
  EpisodeHooks hooks;
  hooks.on_event = [this](const TranscriptEvent& ev) {
    {
      std::lock_guard lock(mu_);
      events_.push_back(ev);
    }
    cv_.notify_all();
  };
  hooks.human = [this](std::string_view agent, std::string_view q) { return human_answer(agent, q); };
  std::optional<Episode> ep;
  std::optional<std::string> error;
  try {
    BackendMap map;
    for (const auto& [k, v] : backends_) map.emplace(k, v);
    ep = run_episode(scenario_.scene, scenario_.task, map, limits_, hooks);
  } catch (const std::exception& e) {
    error = e.what();
  }
  {
    std::lock_guard lock(mu_);
    episode_ = std::move(ep);
    error_ = std::move(error);
    status_ = SessionStatus::Finished;
    awaiting_agent_.reset();
  }
  cv_.notify_all();
}

SessionStatus Session::status() const {
  std::lock_guard lock(mu_);
  return status_;
}

bool Session::finished() const { return status() == SessionStatus::Finished; }

std::size_t Session::event_count() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

void Session::settle(std::chrono::milliseconds wait) const {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, wait, [&] { return status_ != SessionStatus::AgentTurn && inbox_.empty(); });
}

Json Session::describe() const {
  std::lock_guard lock(mu_);
  Json j = {{"session_id", id_},
            {"task_ref", scenario_.task.id},
            {"task_type", task_type_name(scenario_.task.task_type)},
            {"status", session_status_name(status_)},
            {"human_roles", Json(std::vector<std::string>(human_agents_.begin(), human_agents_.end()))},
            {"events", events_.size()}};
  Json roles = Json::array();
  for (const auto& r : scenario_.task.roles) {
    roles.push_back({{"agent_id", r.agent_id}, {"role", role_name(r.role)}, {"action_space", r.action_space}});
  }
  j["roles"] = roles;
  if (awaiting_agent_) j["awaiting"] = *awaiting_agent_;
  if (pending_ask_) j["pending_ask"] = *pending_ask_;
  if (episode_) {
    j["outcome"] = episode_->outcome.label();
    j["score"] = score_to_json(episode_->score);
  }
  if (error_) j["error"] = *error_;
  if (awaiting_agent_) {
    for (auto it = events_.rbegin(); it != events_.rend(); ++it) {
      if (it->agent_id == *awaiting_agent_ && it->kind == EventKind::Observation) {
        j["observation"] = it->payload.value("text", "");
        break;
      }
    }
  }
  return j;
}

InputResult Session::post(const HumanInput& input, std::chrono::milliseconds wait) {
  std::unique_lock lock(mu_);
  if (status_ == SessionStatus::Finished) throw Error(ErrorCode::SessionFinished, "session " + id_ + " has finished");
  if (status_ != SessionStatus::AwaitingHuman || !awaiting_agent_) throw Error(ErrorCode::NotYourTurn, "an agent is acting");
  if (!input.agent_id.empty() && input.agent_id != *awaiting_agent_) {
    throw Error(ErrorCode::NotYourTurn, "waiting for " + *awaiting_agent_);
  }
  const std::string agent = *awaiting_agent_;
  std::string text;
  if (pending_ask_) {
    if (input.kind != "answer") throw Error(ErrorCode::NotYourTurn, "waiting for an answer to: " + *pending_ask_);
    text = input.text;
  } else if (input.kind == "action") {
    text = input.text;
  } else if (input.kind == "chat") {
    text = fmt::format("Act: chat [{}]", input.text);
  } else if (input.kind == "answer") {
    const auto* role = scenario_.task.role_of(agent);
    const bool has_answer = role && builtin_action_space(role->action_space).find("answer");
    text = fmt::format("Act: {} [{}]", has_answer ? "answer" : "stop", input.text);
  } else {
    throw Error(ErrorCode::SchemaError, "input kind must be action, chat or answer");
  }

  const std::size_t cursor = events_.size();
  inbox_.push_back(std::move(text));
  cv_.notify_all();
  // Wait for the input to be taken, then for the next human wait or the end.
  cv_.wait_for(lock, wait, [&] { return inbox_.empty() || status_ == SessionStatus::Finished; });
  cv_.wait_for(lock, wait, [&] { return status_ != SessionStatus::AgentTurn; });

  InputResult out;
  for (std::size_t i = cursor; i < events_.size(); ++i) {
    const auto& ev = events_[i];
    if (ev.agent_id != agent) continue;
    if (ev.kind == EventKind::Feedback && out.feedback.is_null()) out.feedback = ev.payload;
    if (ev.kind == EventKind::Observation && !out.feedback.is_null()) out.observation = ev.payload.value("text", "");
    if (ev.kind == EventKind::System && out.feedback.is_null() && ev.payload.contains("text")) {
      out.feedback = {{"ok", true}, {"message", ev.payload["text"]}};
    }
  }
  if (out.feedback.is_null()) out.feedback = Json::object();
  if (status_ == SessionStatus::Finished) {
    Json report = Json::object();
    if (episode_) report = {{"outcome", episode_->outcome.label()}, {"score", score_to_json(episode_->score)}};
    if (error_) report["error"] = *error_;
    out.final_report = report;
  }
  return out;
}

std::vector<TranscriptEvent> Session::events_from(std::size_t cursor, std::chrono::milliseconds wait) const {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, wait, [&] { return events_.size() > cursor || status_ == SessionStatus::Finished; });
  if (cursor >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(cursor), events_.end()};
}

std::optional<std::string> Session::episode_jsonl() const {
  std::lock_guard lock(mu_);
  if (!episode_) return std::nullopt;
  return episode_to_jsonl(*episode_);
}

SessionManager::SessionManager(std::vector<std::filesystem::path> task_dirs, std::chrono::milliseconds ask_timeout)
    : task_dirs_(std::move(task_dirs)), ask_timeout_(ask_timeout) {}

std::shared_ptr<Session> SessionManager::create(const SessionRequest& req) {
  Scenario sc = resolve_task_ref(req.task_ref, task_dirs_);
  std::set<std::string> humans;
  for (const auto& name : req.human_roles) {
    std::vector<std::string> matches;
    for (const auto& r : sc.task.roles) {
      if (r.agent_id == name || text::lower(role_name(r.role)) == text::lower(name)) matches.push_back(r.agent_id);
    }
    if (matches.size() != 1) throw Error(ErrorCode::RoleConflict, "role " + name + " does not name exactly one agent");
    if (!humans.insert(matches.front()).second) throw Error(ErrorCode::RoleConflict, "role " + name + " listed twice");
  }
  const auto kind = parse_strategy(req.strategy);
  if (!kind) throw Error(ErrorCode::ConfigError, "unknown strategy " + req.strategy);

  std::map<std::string, std::shared_ptr<AgentBackend>, std::less<>> backends;
  for (const auto& r : sc.task.roles) {
    if (!humans.count(r.agent_id)) backends[r.agent_id] = make_backend(req.backend, sc, r.agent_id);
  }
  std::string id;
  {
    std::lock_guard lock(mu_);
    id = fmt::format("s{:06}", next_++);
  }
  Limits limits;
  limits.step_limit = req.step_limit;
  limits.seed = req.seed;
  limits.episode_id = id;
  auto session = std::make_shared<Session>(id, std::move(sc), std::move(humans), Strategy::of(*kind), std::move(backends),
                                           std::move(limits), ask_timeout_);
  std::lock_guard lock(mu_);
  sessions_[id] = session;
  return session;
}

std::shared_ptr<Session> SessionManager::get(std::string_view id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session " + std::string(id));
  return it->second;
}

// ---------------------------------------------------------------------------
// HTTP service

std::string sse_frame(std::size_t index, const TranscriptEvent& e) {
  Json j = event_to_json(e);
  j["type"] = "event";
  return fmt::format("id: {}\nevent: transcript\ndata: {}\n\n", index, j.dump());
}

namespace {

int http_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::UnknownTask:
    case ErrorCode::UnknownSession:
      return 404;
    case ErrorCode::NotYourTurn:
    case ErrorCode::SessionFinished:
      return 409;
    default:
      return 400;
  }
}

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_json(res, http_status(e.code()), {{"error", to_string(e.code())}, {"message", e.what()}});
    } catch (const Json::exception& e) {
      send_json(res, 400, {{"error", "SchemaError"}, {"message", e.what()}});
    }
  };
}

Json parse_body(const httplib::Request& req) {
  try {
    return Json::parse(req.body);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("request body is not JSON: ") + e.what());
  }
}

}  // namespace

void install_routes(httplib::Server& server, SessionManager& sessions) {
  server.Post("/v1/sessions", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
                auto session = sessions.create(session_request_from_json(parse_body(req)));
                session->settle();
                send_json(res, 201, session->describe());
              }));

  server.Get(R"(/v1/sessions/([^/]+))", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, sessions.get(req.matches[1].str())->describe());
             }));

  server.Post(R"(/v1/sessions/([^/]+)/input)", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
                auto session = sessions.get(req.matches[1].str());
                const Json body = parse_body(req);
                const std::string where = "input";
                HumanInput in;
                in.kind = as_string(require(body, "kind", where), where);
                in.text = as_string(require(body, "text", where), where);
                if (const auto* f = optional(body, "agent")) in.agent_id = as_string(*f, where);
                send_json(res, 200, session->post(in).to_json());
              }));

  server.Get(R"(/v1/sessions/([^/]+)/events)", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
               auto session = sessions.get(req.matches[1].str());
               std::size_t cursor = 0;
               if (req.has_param("cursor")) {
                 cursor = std::stoull(req.get_param_value("cursor"));
               } else if (req.has_header("Last-Event-ID")) {
                 cursor = std::stoull(req.get_header_value("Last-Event-ID")) + 1;
               }
               auto next = std::make_shared<std::size_t>(cursor);
               res.set_header("Cache-Control", "no-cache");
               res.set_chunked_content_provider("text/event-stream", [session, next](std::size_t, httplib::DataSink& sink) {
                 const auto batch = session->events_from(*next, std::chrono::milliseconds(500));
                 for (const auto& ev : batch) {
                   const auto frame = sse_frame((*next)++, ev);
                   if (!sink.write(frame.data(), frame.size())) return false;
                 }
                 if (session->finished() && *next >= session->event_count()) sink.done();
                 return true;
               });
             }));

  server.Get(R"(/v1/episodes/([^/]+))", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
               auto session = sessions.get(req.matches[1].str());
               const auto jsonl = session->episode_jsonl();
               if (!jsonl) {
                 send_json(res, 409, {{"error", "NotFinished"}, {"message", "episode still running"}});
                 return;
               }
               res.set_content(*jsonl, "application/x-ndjson");
             }));

  server.Get(R"(/v1/action_spaces/([^/]+))", guarded([](const httplib::Request& req, httplib::Response& res) {
               try {
                 send_json(res, 200, action_space_to_json(builtin_action_space(req.matches[1].str())));
               } catch (const Error& e) {
                 send_json(res, 404, {{"error", to_string(e.code())}, {"message", e.what()}});
               }
             }));
}

}  // namespace langworld
