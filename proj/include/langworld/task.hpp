#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "langworld/feedback.hpp"
#include "langworld/json_util.hpp"
#include "langworld/perception.hpp"
#include "langworld/world.hpp"

namespace langworld {

inline constexpr std::string_view kTaskSchema = "langworld/task@1";

enum class TaskType : std::uint8_t { IG, Rearrangement, IQA, Household, MATeach, MAWAH };

// "IG", "Rearrangement", "IQA", "Household", "MA-Teach", "MA-WAH".
std::string_view task_type_name(TaskType t);
std::optional<TaskType> parse_task_type(std::string_view name);
bool is_multi_agent(TaskType t);

enum class Role : std::uint8_t { Solo, Commander, Follower, Peer };

std::string_view role_name(Role r);
std::optional<Role> parse_role(std::string_view name);

struct RoleBinding {
  std::string agent_id;
  Role role = Role::Solo;
  std::string action_space;

  bool operator==(const RoleBinding&) const = default;
};

enum class GoalKind : std::uint8_t { ObjectIn, ObjectState, ObjectNextTo, AgentAt, Holding, AnswerEquals };

std::string_view goal_kind_name(GoalKind k);
std::optional<GoalKind> parse_goal_kind(std::string_view name);

// Patterns match an exact id or, case-insensitively, a category.
struct GoalCondition {
  GoalKind kind = GoalKind::ObjectIn;
  std::string object;
  // Receptacle for ObjectIn, second object for ObjectNextTo.
  std::string other;
  // ObjectState: open, toggled, sliced, dirty or temperature.
  std::string flag;
  // ObjectState value ("true", "hot", ...) or the AnswerEquals answer.
  std::string value;
  // Matching objects required; ignored when `all` is set.
  int count = 1;
  bool all = false;
  // Overrides the generated failure text.
  std::optional<std::string> description;

  bool operator==(const GoalCondition&) const = default;
};

// "One clean lettuce needs to be on diningtable."-style text.
std::string describe(const GoalCondition& c);

enum class QuestionType : std::uint8_t { Exists, Contains, Counts };

std::string_view question_type_name(QuestionType q);
std::optional<QuestionType> parse_question_type(std::string_view name);

struct TaskSpec {
  std::string id;
  TaskType task_type = TaskType::IG;
  std::string scene_ref;
  std::string instruction;
  std::vector<GoalCondition> goal;
  std::optional<std::string> expected_answer;
  std::optional<QuestionType> question_type;
  // IQA question parameters: queried category and, for Contains, the receptacle.
  std::string question_object;
  std::string question_receptacle;
  std::optional<WorldState> target_state;
  std::string target_state_ref;
  // compare_status(scene, target) when the task was bound; Rearrangement only.
  std::vector<DiffEntry> initial_diff;
  std::vector<RoleBinding> roles;
  int step_limit = 50;
  // Receptacle collecting the task's objects (room-summary narration).
  std::optional<std::string> placement_target;

  const RoleBinding* role_of(std::string_view agent_id) const;
  ObservationStyle observation_style() const;

  bool operator==(const TaskSpec&) const = default;
};

// 50 for low-level action spaces, 30 when every role uses high-level actions.
int default_step_limit(TaskType t);

using SceneResolver = std::function<std::optional<WorldState>(std::string_view ref)>;

// Throws SchemaError, or UnknownScene when a reference does not resolve.
TaskSpec load_task(const Json& doc, const SceneResolver& scenes);
// Inverse of load_task; the target state is written as a reference only.
Json task_to_json(const TaskSpec& task);
// Checks the per-type invariants. Throws SchemaError.
void validate_task(const TaskSpec& task);

struct GoalReport {
  bool success = false;
  int satisfied = 0;
  int total = 0;
  std::vector<std::string> failed_descriptions;

  double ratio() const { return total == 0 ? 0.0 : double(satisfied) / double(total); }
  bool operator==(const GoalReport&) const = default;
};

bool condition_holds(const WorldState& world, const GoalCondition& c, const std::optional<std::string>& answer);

// Throws InvalidTask when there is nothing to check.
GoalReport check_goal(const WorldState& world, const TaskSpec& task, const std::optional<std::string>& answer = std::nullopt);

// "true"/"false" and integers compare by value; other text case-insensitively after trimming.
bool answers_match(std::string_view given, std::string_view expected);

// Read-only: success, or a failure carrying the first failed description.
Feedback progress_check(const WorldState& world, const TaskSpec& task);

struct Shuffled {
  WorldState shuffled;
  WorldState target;
};

// Changes exactly n objects (position or openness). Throws NotEnoughObjects.
Shuffled randomize_rearrangement(const WorldState& world, int n, std::uint64_t seed);

// Brute-force IQA answers over ground truth.
int count_category(const WorldState& world, std::string_view category);
bool contains_category(const WorldState& world, std::string_view category, std::string_view receptacle);
// "True"/"False" or a count. Throws InvalidTask for non-IQA tasks.
std::string iqa_answer(const WorldState& world, const TaskSpec& task);

}  // namespace langworld
