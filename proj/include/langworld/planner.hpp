#pragma once

#include <optional>
#include <string>
#include <vector>

#include "langworld/actions.hpp"
#include "langworld/json_util.hpp"
#include "langworld/navigation.hpp"
#include "langworld/task.hpp"
#include "langworld/world.hpp"

namespace langworld {

struct Subtask {
  std::string object_id;
  std::vector<ActionCall> operations;
  // Cell the agent must face before the operations run.
  Cell target_cell;
  std::optional<Heading> approach_heading;

  bool operator==(const Subtask&) const = default;
};

// Rearrangement subtasks for restoring `world` to the diff's target values. Moved objects are
// handled in natural id order (containers opened first), openness fixes come last.
// Throws Unplannable.
std::vector<Subtask> plan_subtasks(const StatusDiff& diff, const WorldState& world,
                                   const ActionSpace& space = builtin_action_space("rearrangement"));

// Navigation as action calls of `space`.
std::vector<ActionCall> nav_calls(const std::vector<NavAction>& route, const ActionSpace& space);

// Expert trajectory for IG, Rearrangement, IQA and Household tasks. Every call replays with
// ok feedback on `world`. Throws Unplannable or NoPath.
std::vector<ActionCall> generate_trajectory(const WorldState& world, const TaskSpec& task);

// One JSON object per action: {step, agent, action, args}.
std::string trajectory_jsonl(const std::vector<ActionCall>& calls, std::string_view agent_id);
// Throws SchemaError.
std::vector<ActionCall> parse_trajectory_jsonl(std::string_view text, const ActionSpace& space);

}  // namespace langworld
