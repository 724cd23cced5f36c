#include "langworld/runtime.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

#include "langworld/actions.hpp"
#include "langworld/error.hpp"
#include "langworld/perception.hpp"
#include "langworld/scene_io.hpp"
#include "langworld/text.hpp"

namespace langworld {

using namespace json_util;

namespace {

constexpr std::array<std::string_view, 9> kEventKindNames = {"observation", "thought", "action",     "feedback", "chat",
                                                              "ask",         "human_answer", "goal_check", "system"};
constexpr std::array<std::string_view, 6> kFailureNames = {"StepLimit",    "Stopped",     "SetupFailed",
                                                           "BudgetExceeded", "Unplannable", "BackendError"};

constexpr std::string_view kFormatReminder =
    "Your reply did not contain a valid action. Generate the action in the correct format starting with \"Act: \".";

}  // namespace

std::string_view event_kind_name(EventKind k) { return kEventKindNames[static_cast<std::size_t>(k)]; }

std::optional<EventKind> parse_event_kind(std::string_view name) {
  for (std::size_t i = 0; i < kEventKindNames.size(); ++i) {
    if (kEventKindNames[i] == name) return static_cast<EventKind>(i);
  }
  return std::nullopt;
}

std::string_view failure_kind_name(FailureKind f) { return kFailureNames[static_cast<std::size_t>(f)]; }

std::optional<FailureKind> parse_failure_kind(std::string_view name) {
  for (std::size_t i = 0; i < kFailureNames.size(); ++i) {
    if (kFailureNames[i] == name) return static_cast<FailureKind>(i);
  }
  return std::nullopt;
}

std::string Outcome::label() const {
  if (success) return "Success";
  return fmt::format("Failure({})", failure ? failure_kind_name(*failure) : "Unknown");
}

Json event_to_json(const TranscriptEvent& e) {
  return {{"step", e.step}, {"trial", e.trial}, {"agent", e.agent_id}, {"kind", event_kind_name(e.kind)}, {"payload", e.payload}};
}

TranscriptEvent event_from_json(const Json& j) {
  const std::string where = "event";
  if (!j.is_object()) schema_fail(where, "expected an object");
  TranscriptEvent e;
  e.step = static_cast<int>(as_integer(require(j, "step", where), where));
  e.trial = static_cast<int>(as_integer(require(j, "trial", where), where));
  e.agent_id = as_string(require(j, "agent", where), where);
  const auto kind = as_string(require(j, "kind", where), where);
  const auto k = parse_event_kind(kind);
  if (!k) schema_fail(where, "unknown kind " + kind);
  e.kind = *k;
  e.payload = require(j, "payload", where);
  if (!e.payload.is_object()) schema_fail(where, "payload must be an object");
  return e;
}

// ---------------------------------------------------------------------------
// Scheduling and routing

TurnPolicy schedule_turns(const TaskSpec& task) {
  if (task.roles.empty()) throw Error(ErrorCode::ConfigError, "task " + task.id + " has no roles");
  TurnPolicy p;
  if (task.task_type == TaskType::MATeach) {
    for (Role r : {Role::Commander, Role::Follower}) {
      for (const auto& b : task.roles) {
        if (b.role == r) p.cycle.push_back(b.agent_id);
      }
    }
    if (p.cycle.size() == task.roles.size()) return p;
    p.cycle.clear();
  }
  for (const auto& b : task.roles) p.cycle.push_back(b.agent_id);
  return p;
}

Delivery route_message(const TaskSpec& task, const WorldState& world, std::string_view from_agent, std::string_view kind,
                       std::string_view message, bool human_channel) {
  Delivery d;
  d.from = std::string(from_agent);
  d.line = fmt::format("{}: {}", world.agent(from_agent).display_name(), message);
  if (kind == "ask") {
    if (!human_channel) throw Error(ErrorCode::NoRecipient, "no human channel to answer " + d.from);
    d.to = {"human"};
    return d;
  }
  for (const auto& r : task.roles) {
    if (r.agent_id != from_agent) d.to.push_back(r.agent_id);
  }
  if (d.to.empty()) throw Error(ErrorCode::NoRecipient, d.from + " has nobody to chat with");
  return d;
}

// ---------------------------------------------------------------------------
// Shared turn mechanics; replay goes through the same functions.

namespace {

struct AgentState {
  std::string id;
  const ActionSpace* space = nullptr;
  BeliefState belief;
  ObservationStyle style = ObservationStyle::EgoScene;
};

std::vector<AgentState> make_agents(const WorldState& w, const TaskSpec& task) {
  std::vector<AgentState> out;
  for (const auto& r : task.roles) {
    AgentState a;
    a.id = r.agent_id;
    a.space = &builtin_action_space(r.action_space);
    a.belief = initial_belief(w, task.placement_target);
    a.style = task.observation_style();
    out.push_back(std::move(a));
  }
  return out;
}

AgentState& agent_state(std::vector<AgentState>& agents, std::string_view id) {
  for (auto& a : agents) {
    if (a.id == id) return a;
  }
  throw Error(ErrorCode::UnknownAgent, "agent " + std::string(id) + " has no role");
}

// Folds the feedback into the belief, renders the view, and returns the text shown to the agent.
std::string observe(AgentState& a, const WorldState& w, int step, const Feedback* fb) {
  if (fb) a.belief = update_belief(std::move(a.belief), w, a.id, *fb);
  auto obs = render_observation(w, a.id, a.style, &a.belief, step);
  a.belief = update_belief(std::move(a.belief), w, a.id, obs);
  if (fb && fb->observation) return *fb->observation;
  return obs.text;
}

ActionContext context_for(const TaskSpec& task, std::string_view agent_id) {
  ActionContext ctx;
  ctx.progress_check = [&task](const WorldState& w) { return progress_check(w, task); };
  for (const auto& r : task.roles) {
    if (r.agent_id != agent_id) {
      ctx.partner = r.agent_id;
      break;
    }
  }
  return ctx;
}

Json feedback_payload(const Feedback& fb) {
  Json j = {{"ok", fb.ok}, {"message", fb.message}};
  if (fb.reason) j["reason"] = failure_reason_name(*fb.reason);
  return j;
}

Feedback invalid_reply_feedback(std::string_view raw, const ActionSpace& space) {
  std::string detail = "Your reply contained no valid action.";
  const auto parsed = parse_action(raw, space);
  if (const auto* e = std::get_if<ParseError>(&parsed); e && !e->message.empty()) detail = e->message;
  return Feedback::failure(FailureReason::NoSuchObject, detail);
}

bool is_communicative(const ActionCall& call) { return call.spec.name == "chat" || call.spec.name == "ask"; }

struct Applied {
  WorldState world;
  Feedback feedback;
  std::optional<Delivery> delivery;
};

// Chat and ask route instead of touching the world. `answered` tells whether a human replied.
Applied apply_call(WorldState w, const TaskSpec& task, std::string_view agent_id, const ActionCall& call, bool human_channel,
                   bool answered) {
  if (is_communicative(call)) {
    Applied out{std::move(w), Feedback::success(""), std::nullopt};
    try {
      out.delivery = route_message(task, out.world, agent_id, call.spec.name, call.args.empty() ? "" : call.args.front(),
                                   human_channel);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoRecipient) throw;
      out.feedback = Feedback::failure(FailureReason::Blocked, call.spec.name == "ask" ? "Nobody can answer your question." : "There is nobody to chat with.");
      return out;
    }
    if (call.spec.name == "ask" && !answered) out.feedback = Feedback::failure(FailureReason::Blocked, "Nobody answered your question.");
    return out;
  }
  auto step = execute_action(std::move(w), agent_id, call, context_for(task, agent_id));
  return {std::move(step.world), std::move(step.feedback), std::nullopt};
}

std::optional<GoalReport> goal_report(const WorldState& w, const TaskSpec& task, const std::optional<std::string>& answer) {
  try {
    return check_goal(w, task, answer);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidTask) return std::nullopt;
    throw;
  }
}

Json report_payload(const std::optional<GoalReport>& r) {
  if (!r) return {{"success", false}, {"satisfied", 0}, {"total", 0}};
  return {{"success", r->success}, {"satisfied", r->satisfied}, {"total", r->total}};
}

// Success auto-detection runs for every family except IQA, whose goal is the answer.
bool auto_detects(const TaskSpec& task) { return task.task_type != TaskType::IQA; }

EpisodeScore score_for(const WorldState& start, const WorldState& end, const TaskSpec& task, bool success, int steps,
                       int calls, const std::optional<std::string>& answer, std::optional<int> expert_len) {
  EpisodeScore s;
  s.task_id = task.id;
  s.task_type = std::string(task_type_name(task.task_type));
  s.success = success;
  const auto report = goal_report(end, task, answer);
  s.goal_sr = report ? report->ratio() : 0.0;
  s.steps = steps;
  s.llm_calls = calls;
  s.expert_len = expert_len;
  if (task.task_type == TaskType::Rearrangement && task.target_state) {
    try {
      const auto r = rearrangement_scores(start, end, *task.target_state);
      s.misplaced_pct = r.misplaced_pct;
      s.fixed_strict_pct = r.fixed_strict_pct;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DivisionUndefined) throw;
    }
  }
  if (task.task_type == TaskType::IQA) {
    s.answer_correct = answer && task.expected_answer && answers_match(*answer, *task.expected_answer);
    if (task.question_type) s.question_type = std::string(question_type_name(*task.question_type));
  }
  return s;
}

std::string system_text(const Feedback& fb, const std::optional<std::string>& obs) {
  std::string s = "Feedback: " + fb.message;
  if (obs) s += "\nObs: " + *obs;
  return s;
}

bool said_yes(std::string_view reply) { return text::lower(reply).find("yes") != std::string::npos; }

// ---------------------------------------------------------------------------
// Episode loop

class Runner {
public:
  Runner(const WorldState& world, const TaskSpec& task, const BackendMap& backends, const Limits& limits, const EpisodeHooks& hooks)
      : start_(world), task_(task), backends_(backends), limits_(limits), hooks_(hooks) {
    for (const auto& r : task.roles) {
      if (!backends.count(r.agent_id) || !backends.at(r.agent_id)) {
        throw Error(ErrorCode::ConfigError, "role " + r.agent_id + " has no backend");
      }
    }
    step_limit_ = limits.step_limit.value_or(task.step_limit);
    if (step_limit_ < 1) throw Error(ErrorCode::ConfigError, "step limit must be positive");
    cap_ = limits.llm_call_cap.value_or(4 * step_limit_ * limits.strategy.max_trials);
  }

  Episode run() {
    ep_.episode_id = limits_.episode_id.empty() ? fmt::format("{}-s{}", task_.id, limits_.seed) : limits_.episode_id;
    ep_.task_ref = task_.id;
    ep_.seed = limits_.seed;
    ep_.strategy = std::string(strategy_name(limits_.strategy.kind));
    ep_.scene = start_;
    ep_.task = task_;
    clock_ = Clock::now();

    std::map<std::string, std::string> memory;
    for (int trial = 0;; ++trial) {
      trial_ = trial;
      ep_.trials = trial + 1;
      const Outcome out = run_trial(memory);
      ep_.outcome = out;
      const bool retry = !out.success && limits_.strategy.reflexion() && trial + 1 < limits_.strategy.max_trials &&
                         (out.failure == FailureKind::StepLimit || out.failure == FailureKind::Stopped);
      if (!retry) break;
      try {
        for (auto& [id, dlg] : dialogues_) {
          const auto text = reflect_with_budget(id, dlg);
          memory[id] = text;
          emit(id, EventKind::System, {{"reflection", text}});
        }
      } catch (const Error& e) {
        ep_.outcome = failure_for(e);
        break;
      }
    }
    ep_.engine_time += Clock::now() - clock_;
    emit("", EventKind::System, {{"outcome", ep_.outcome.label()}});
    ep_.score = score_for(start_, world_, task_, ep_.outcome.success, steps_, calls_, answer_, limits_.expert_len);
    ep_.final_world = world_;
    return std::move(ep_);
  }

private:
  using Clock = std::chrono::steady_clock;

  struct Seat {
    std::vector<std::string> inbox;
    std::string pending;
    bool reminded = false;
  };

  void emit(std::string agent, EventKind kind, Json payload) {
    ep_.events.push_back({steps_, trial_, std::move(agent), kind, std::move(payload)});
    if (hooks_.on_event) hooks_.on_event(ep_.events.back());
  }

  Outcome failure_for(const Error& e) {
    if (e.code() == ErrorCode::BudgetExceeded) return Outcome::failed(FailureKind::BudgetExceeded, e.what());
    return Outcome::failed(FailureKind::BackendError, e.what());
  }

  std::string call(const std::string& id, const std::vector<ChatMessage>& messages) {
    if (calls_ >= cap_) throw Error(ErrorCode::BudgetExceeded, fmt::format("llm call cap {} reached", cap_));
    ++calls_;
    ep_.engine_time += Clock::now() - clock_;
    auto reply = backends_.at(id)->complete(messages);
    clock_ = Clock::now();
    return reply;
  }

  std::string reflect_with_budget(const std::string& id, const Dialogue& dlg) {
    if (calls_ >= cap_) throw Error(ErrorCode::BudgetExceeded, fmt::format("llm call cap {} reached", cap_));
    ++calls_;
    ep_.engine_time += Clock::now() - clock_;
    auto text = reflect(*backends_.at(id), dlg.transcript(world_.agent(id).display_name()), limits_.strategy, trial_);
    clock_ = Clock::now();
    return text;
  }

  void say(const std::string& id, std::string text) {
    emit(id, EventKind::System, {{"text", text}});
    dialogues_[id].system(std::move(text));
  }

  Outcome run_trial(const std::map<std::string, std::string>& memory) {
    world_ = start_;
    steps_ = 0;
    answer_.reset();
    dialogues_.clear();
    seats_.clear();
    agents_ = make_agents(world_, task_);
    emit("", EventKind::System, {{"trial", trial_}});
    try {
      for (auto& a : agents_) {
        const auto mem = memory.count(a.id) ? memory.at(a.id) : std::string();
        const auto prompt = build_system_prompt(task_, world_, a.id, limits_.strategy, limits_.examples, mem);
        say(a.id, prompt);
        const auto reply = call(a.id, dialogues_[a.id].messages);
        dialogues_[a.id].assistant(reply);
        emit(a.id, EventKind::System, {{"reply", reply}});
        if (!said_yes(reply)) return Outcome::failed(FailureKind::SetupFailed, a.id + " did not confirm the instructions");
        const auto obs = observe(a, world_, steps_, nullptr);
        emit(a.id, EventKind::Observation, {{"text", obs}});
        seats_[a.id].pending = build_task_prompt(task_, world_, a.id, limits_.strategy, obs);
      }
      const auto policy = schedule_turns(task_);
      for (std::size_t turn = 0;; ++turn) {
        if (steps_ >= step_limit_) {
          emit("", EventKind::GoalCheck, report_payload(goal_report(world_, task_, answer_)));
          return Outcome::failed(FailureKind::StepLimit);
        }
        if (auto done = take_turn(policy.at(turn))) return *done;
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::BudgetExceeded || e.code() == ErrorCode::BackendError || e.code() == ErrorCode::Timeout ||
          e.code() == ErrorCode::HumanTimeout) {
        return failure_for(e);
      }
      throw;
    }
  }

  // One agent turn: replies until the agent commits to an action.
  std::optional<Outcome> take_turn(const std::string& id) {
    AgentState& a = agent_state(agents_, id);
    Seat& seat = seats_[id];
    std::vector<std::string> parts = std::move(seat.inbox);
    seat.inbox.clear();
    parts.push_back(std::move(seat.pending));
    say(id, text::join(parts, "\n"));

    for (;;) {
      const auto raw = call(id, dialogues_[id].messages);
      dialogues_[id].assistant(raw);
      auto reply = parse_agent_reply(raw, *a.space);
      if (reply.kind == ReplyKind::Thought && !reply.warning) {
        emit(id, EventKind::Thought, {{"text", reply.text}});
        if (!reply.has_pending_action) {
          say(id, "OK.");
          continue;
        }
        reply = parse_agent_reply(raw, *a.space, true);
      }
      if (reply.warning && !seat.reminded) {
        seat.reminded = true;
        say(id, std::string(kFormatReminder));
        continue;
      }
      seat.reminded = false;
      return act(a, seat, reply);
    }
  }

  std::optional<Outcome> act(AgentState& a, Seat& seat, const AgentReply& reply) {
    const std::string& id = a.id;
    if (!reply.call) {
      emit(id, EventKind::Action, {{"text", std::string(text::trim(reply.raw))}, {"valid", false}});
      ++steps_;
      ++ep_.engine_steps;
      const auto fb = invalid_reply_feedback(reply.raw, *a.space);
      emit(id, EventKind::Feedback, feedback_payload(fb));
      const auto obs = observe(a, world_, steps_, &fb);
      emit(id, EventKind::Observation, {{"text", obs}});
      seat.pending = system_text(fb, obs);
      return std::nullopt;
    }

    const ActionCall& call = *reply.call;
    emit(id, EventKind::Action, {{"text", call.text()}, {"valid", true}});
    ++steps_;
    ++ep_.engine_steps;
    std::optional<std::string> human_answer;
    bool answered = false;
    if (call.spec.name == "ask" && hooks_.human) {
      emit(id, EventKind::Ask, {{"text", reply.text}});
      ep_.engine_time += Clock::now() - clock_;
      human_answer = (*hooks_.human)(id, reply.text);
      clock_ = Clock::now();
      answered = human_answer.has_value();
      if (answered) emit(id, EventKind::HumanAnswer, {{"text", *human_answer}});
    }
    auto applied = apply_call(world_, task_, id, call, hooks_.human.has_value(), answered);
    world_ = std::move(applied.world);
    const Feedback& fb = applied.feedback;
    emit(id, EventKind::Feedback, feedback_payload(fb));

    if (applied.delivery && call.spec.name == "chat") {
      emit(id, EventKind::Chat, {{"text", reply.text}, {"to", applied.delivery->to}, {"line", applied.delivery->line}});
      for (const auto& to : applied.delivery->to) seats_[to].inbox.push_back(applied.delivery->line);
    }
    if (answered) seat.inbox.push_back("Human: " + *human_answer);

    if (fb.terminal) {
      answer_ = fb.answer;
      const auto report = goal_report(world_, task_, answer_);
      emit(id, EventKind::GoalCheck, report_payload(report));
      if (report && report->success) {
        say(id, std::string(kSuccessBanner));
        return Outcome::succeeded();
      }
      return Outcome::failed(FailureKind::Stopped);
    }

    std::optional<std::string> obs;
    if (!is_communicative(call)) {
      obs = observe(a, world_, steps_, &fb);
      emit(id, EventKind::Observation, {{"text", *obs}});
    }
    seat.pending = system_text(fb, obs);

    if (fb.ok && auto_detects(task_)) {
      const auto report = goal_report(world_, task_, std::nullopt);
      if (report && report->success) {
        emit(id, EventKind::GoalCheck, report_payload(report));
        say(id, seat.pending);
        say(id, std::string(kSuccessBanner));
        return Outcome::succeeded();
      }
    }
    return std::nullopt;
  }

  const WorldState& start_;
  const TaskSpec& task_;
  const BackendMap& backends_;
  const Limits& limits_;
  const EpisodeHooks& hooks_;
  int step_limit_ = 0;
  int cap_ = 0;

  Episode ep_;
  int trial_ = 0;
  int steps_ = 0;
  int calls_ = 0;
  WorldState world_;
  std::optional<std::string> answer_;
  std::vector<AgentState> agents_;
  std::map<std::string, Dialogue> dialogues_;
  std::map<std::string, Seat> seats_;
  Clock::time_point clock_;
};

}  // namespace

Episode run_episode(const WorldState& world, const TaskSpec& task, const BackendMap& agents, const Limits& limits,
                    const EpisodeHooks& hooks) {
  return Runner(world, task, agents, limits, hooks).run();
}

// ---------------------------------------------------------------------------
// Persistence

std::string episode_to_jsonl(const Episode& e) {
  Json header = {{"schema", kEpisodeSchema}, {"type", "header"},  {"episode_id", e.episode_id},
                 {"task_ref", e.task_ref},   {"seed", e.seed},     {"strategy", e.strategy},
                 {"trials", e.trials},       {"scene", scene_to_json(e.scene)}, {"task", task_to_json(e.task)}};
  if (e.task.target_state) header["target_state"] = scene_to_json(*e.task.target_state);
  std::string out = header.dump() + "\n";
  for (const auto& ev : e.events) {
    Json j = event_to_json(ev);
    j["type"] = "event";
    out += j.dump() + "\n";
  }
  Json tail = {{"type", "outcome"}, {"outcome", e.outcome.label()}, {"detail", e.outcome.detail}, {"score", score_to_json(e.score)}};
  if (e.outcome.failure) tail["failure"] = failure_kind_name(*e.outcome.failure);
  out += tail.dump() + "\n";
  return out;
}

Episode episode_from_jsonl(std::string_view text) {
  const std::string where = "episode";
  std::vector<Json> lines;
  for (const auto& line : text::split_lines(text)) {
    if (text::trim(line).empty()) continue;
    try {
      lines.push_back(Json::parse(line));
    } catch (const Json::exception& ex) {
      schema_fail(where, std::string("bad JSON line: ") + ex.what());
    }
  }
  if (lines.size() < 2) schema_fail(where, "needs a header and an outcome line");
  const Json& h = lines.front();
  if (!h.is_object() || h.value("schema", "") != kEpisodeSchema) schema_fail(where, "header lacks schema langworld/episode@1");

  Episode e;
  e.episode_id = as_string(require(h, "episode_id", where), where);
  e.task_ref = as_string(require(h, "task_ref", where), where);
  e.seed = static_cast<std::uint64_t>(as_integer(require(h, "seed", where), where));
  e.strategy = as_string(require(h, "strategy", where), where);
  e.trials = static_cast<int>(as_integer(require(h, "trials", where), where));
  e.scene = load_scene(require(h, "scene", where));
  std::optional<WorldState> target;
  if (const auto* t = optional(h, "target_state")) target = load_scene(*t);
  const Json& task_doc = require(h, "task", where);
  const auto scene_ref = task_doc.value("scene_ref", "");
  const auto target_ref = task_doc.value("target_state_ref", "");
  e.task = load_task(task_doc, [&](std::string_view ref) -> std::optional<WorldState> {
    if (ref == scene_ref) return e.scene;
    if (target && ref == target_ref) return target;
    return std::nullopt;
  });

  for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
    if (lines[i].value("type", "") != "event") schema_fail(where, fmt::format("line {} is not an event", i + 1));
    e.events.push_back(event_from_json(lines[i]));
  }
  const Json& tail = lines.back();
  if (tail.value("type", "") != "outcome") schema_fail(where, "last line must be the outcome");
  const auto label = as_string(require(tail, "outcome", where), where);
  e.outcome.success = label == "Success";
  if (const auto* f = optional(tail, "failure")) {
    const auto name = as_string(*f, where);
    e.outcome.failure = parse_failure_kind(name);
    if (!e.outcome.failure) schema_fail(where, "unknown failure " + name);
  }
  if (!e.outcome.success && !e.outcome.failure) schema_fail(where, "failed outcome needs a failure kind");
  if (const auto* d = optional(tail, "detail")) e.outcome.detail = as_string(*d, where);
  e.score = score_from_json(require(tail, "score", where));
  return e;
}

// ---------------------------------------------------------------------------
// Replay

ReplayReport replay_episode(const Episode& e) {
  ReplayReport report;
  auto diverge = [&](std::size_t i, std::string detail) {
    report.consistent = false;
    report.first_divergence = i;
    report.detail = std::move(detail);
    return report;
  };
  const bool human_channel = std::any_of(e.events.begin(), e.events.end(), [](const TranscriptEvent& ev) {
    return ev.kind == EventKind::Ask || ev.kind == EventKind::HumanAnswer;
  });

  WorldState w = e.scene;
  std::vector<AgentState> agents;
  std::optional<std::string> answer;
  std::optional<Feedback> last_fb;
  std::optional<ActionCall> pending_call;
  std::string pending_agent;
  bool pending_answered = false;
  int steps = 0;

  try {
    for (std::size_t i = 0; i < e.events.size(); ++i) {
      const auto& ev = e.events[i];
      switch (ev.kind) {
        case EventKind::System:
          if (ev.payload.contains("trial")) {
            w = e.scene;
            agents = make_agents(w, e.task);
            answer.reset();
            last_fb.reset();
            steps = 0;
          }
          break;
        case EventKind::Action: {
          if (agents.empty()) return diverge(i, "action before the trial start");
          ++steps;
          auto& a = agent_state(agents, ev.agent_id);
          const auto text = ev.payload.value("text", "");
          pending_agent = ev.agent_id;
          pending_answered = false;
          if (!ev.payload.value("valid", true)) {
            pending_call.reset();
            last_fb = invalid_reply_feedback(text, *a.space);
            break;
          }
          auto parsed = parse_action(text, *a.space);
          auto* call = std::get_if<ActionCall>(&parsed);
          if (!call) return diverge(i, "recorded action no longer parses: " + text);
          pending_call = *call;
          last_fb.reset();
          break;
        }
        case EventKind::HumanAnswer:
          pending_answered = true;
          break;
        case EventKind::Feedback: {
          if (ev.agent_id != pending_agent) return diverge(i, "feedback without a matching action");
          if (pending_call) {
            auto applied = apply_call(w, e.task, ev.agent_id, *pending_call, human_channel, pending_answered);
            w = std::move(applied.world);
            last_fb = applied.feedback;
            if (last_fb->terminal) answer = last_fb->answer;
            pending_call.reset();
          }
          if (!last_fb) return diverge(i, "feedback without a matching action");
          if (feedback_payload(*last_fb) != ev.payload) {
            return diverge(i, fmt::format("feedback differs: expected {}, got {}", ev.payload.dump(), feedback_payload(*last_fb).dump()));
          }
          break;
        }
        case EventKind::Observation: {
          if (agents.empty()) return diverge(i, "observation before the trial start");
          auto& a = agent_state(agents, ev.agent_id);
          const Feedback* fb = last_fb && pending_agent == ev.agent_id ? &*last_fb : nullptr;
          const auto text = observe(a, w, ev.step, fb);
          last_fb.reset();
          if (text != ev.payload.value("text", "")) return diverge(i, "observation differs: " + text);
          break;
        }
        case EventKind::GoalCheck: {
          const auto r = report_payload(goal_report(w, e.task, answer));
          if (r != ev.payload) return diverge(i, "goal check differs: " + r.dump());
          break;
        }
        default:
          break;
      }
    }
  } catch (const Error& ex) {
    return diverge(e.events.size(), std::string("replay failed: ") + ex.what());
  }

  if (e.outcome.success) {
    const auto r = goal_report(w, e.task, answer);
    if (!r || !r->success) return diverge(e.events.size(), "recorded success but the goal does not hold");
  }
  const auto score = score_for(e.scene, w, e.task, e.outcome.success, steps, e.score.llm_calls, answer, e.score.expert_len);
  if (score_to_json(score) != score_to_json(e.score)) {
    return diverge(e.events.size(), fmt::format("score differs: {}", score_to_json(score).dump()));
  }
  return report;
}

}  // namespace langworld
