#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "langworld/json_util.hpp"
#include "langworld/metrics.hpp"
#include "langworld/promptkit.hpp"
#include "langworld/task.hpp"
#include "langworld/world.hpp"

namespace langworld {

inline constexpr std::string_view kEpisodeSchema = "langworld/episode@1";
inline constexpr std::string_view kSuccessBanner = "[SUCCESS] You have completed the task. Congratulations!";

enum class EventKind : std::uint8_t { Observation, Thought, Action, Feedback, Chat, Ask, HumanAnswer, GoalCheck, System };

// "observation", "thought", ...
std::string_view event_kind_name(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view name);

struct TranscriptEvent {
  // Environment steps taken before this event, counted over all agents of the trial.
  int step = 0;
  int trial = 0;
  // Empty for engine-wide events.
  std::string agent_id;
  EventKind kind = EventKind::System;
  Json payload;

  bool operator==(const TranscriptEvent&) const = default;
};

Json event_to_json(const TranscriptEvent& e);
// Throws SchemaError.
TranscriptEvent event_from_json(const Json& j);

enum class FailureKind : std::uint8_t { StepLimit, Stopped, SetupFailed, BudgetExceeded, Unplannable, BackendError };

std::string_view failure_kind_name(FailureKind f);
std::optional<FailureKind> parse_failure_kind(std::string_view name);

struct Outcome {
  bool success = false;
  std::optional<FailureKind> failure;
  std::string detail;

  static Outcome succeeded() { return {true, std::nullopt, ""}; }
  static Outcome failed(FailureKind f, std::string detail = "") { return {false, f, std::move(detail)}; }
  // "Success" or "Failure(StepLimit)".
  std::string label() const;
  bool operator==(const Outcome&) const = default;
};

struct Episode {
  std::string episode_id;
  std::string task_ref;
  std::uint64_t seed = 0;
  std::string strategy;
  WorldState scene;
  TaskSpec task;
  std::vector<TranscriptEvent> events;
  Outcome outcome;
  EpisodeScore score;
  WorldState final_world;
  int trials = 1;
  // Engine time spent outside backend calls; not persisted.
  std::chrono::nanoseconds engine_time{0};
  int engine_steps = 0;
};

// One line per blocked ask: returns the human's answer, or nothing on timeout.
using HumanChannel = std::function<std::optional<std::string>(std::string_view agent_id, std::string_view question)>;
// Called after each event is appended.
using EventSink = std::function<void(const TranscriptEvent&)>;

struct Limits {
  Strategy strategy;
  // Overrides the task's step limit.
  std::optional<int> step_limit;
  // Backend calls across all agents and trials, reflections included. Default: 4 per step.
  std::optional<int> llm_call_cap;
  std::vector<std::string> examples;
  std::optional<int> expert_len;
  std::string episode_id;
  std::uint64_t seed = 0;
};

struct EpisodeHooks {
  std::optional<HumanChannel> human;
  EventSink on_event;
};

// Keyed by agent id. Throws ConfigError when a role is unbound.
using BackendMap = std::map<std::string, std::shared_ptr<AgentBackend>, std::less<>>;

Episode run_episode(const WorldState& world, const TaskSpec& task, const BackendMap& agents, const Limits& limits,
                    const EpisodeHooks& hooks = {});

// Agent ids in the order they act; the sequence repeats.
struct TurnPolicy {
  std::vector<std::string> cycle;
  std::string at(std::size_t turn) const { return cycle[turn % cycle.size()]; }
};

// Solo: the one agent. MA-Teach: commander then follower. MA-WAH: peers in role order.
TurnPolicy schedule_turns(const TaskSpec& task);

struct Delivery {
  std::string from;
  std::vector<std::string> to;
  // "<name>: <message>".
  std::string line;
};

// Chat lines go to every other role; ask needs a human channel. Throws NoRecipient.
Delivery route_message(const TaskSpec& task, const WorldState& world, std::string_view from_agent, std::string_view kind,
                       std::string_view message, bool human_channel);

// JSONL: a header line, one line per event, and a closing outcome line.
std::string episode_to_jsonl(const Episode& e);
// Throws SchemaError.
Episode episode_from_jsonl(std::string_view text);

struct ReplayReport {
  bool consistent = true;
  // Index into the event list, or events.size() for a score mismatch.
  std::optional<std::size_t> first_divergence;
  std::string detail;
};

// Re-executes recorded actions and compares every feedback, goal check and the final score.
ReplayReport replay_episode(const Episode& e);

}  // namespace langworld
