#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "langworld/feedback.hpp"
#include "langworld/json_util.hpp"
#include "langworld/world.hpp"

namespace langworld {

inline constexpr std::string_view kActionSpaceSchema = "langworld/action_space@1";

enum class ActionLevel : std::uint8_t { Low, High, Communicative };

std::string_view action_level_name(ActionLevel l);

struct ActionSpec {
  std::string name;
  int arity = 0;
  ActionLevel level = ActionLevel::Low;
  std::optional<Affordance> affordance_required;
  // As shown in prompts, e.g. "pick_up [object_name]".
  std::string signature;
  // Prompt text; may contain {manipulate_distance} and {partner} slots.
  std::string description;

  // chat, ask, stop and answer keep their bracket text whole.
  bool verbatim() const;

  bool operator==(const ActionSpec&) const = default;
};

struct ActionSpace {
  std::string id;
  std::vector<ActionSpec> actions;

  // Case-insensitive.
  const ActionSpec* find(std::string_view name) const;
  bool operator==(const ActionSpace&) const = default;
};

ActionSpace load_action_space(const Json& doc);
Json action_space_to_json(const ActionSpace& space);

// Root of the bundled data files: $LANGWORLD_DATA_DIR, else the source tree's data/.
std::filesystem::path data_dir();
// Loads data/action_spaces/<id>.json once. Throws ConfigError.
const ActionSpace& builtin_action_space(std::string_view id);

struct ActionCall {
  ActionSpec spec;
  std::vector<std::string> args;
  std::string raw;
  bool multi_action = false;

  // Canonical text: "put [apple_0, fridge_0]".
  std::string text() const;
  bool operator==(const ActionCall&) const = default;
};

enum class ParseErrorKind : std::uint8_t { UnknownAction, ArityMismatch, Empty };

std::string_view parse_error_name(ParseErrorKind k);

struct ParseError {
  ParseErrorKind kind = ParseErrorKind::Empty;
  std::string message;
};

using ParseResult = std::variant<ActionCall, ParseError>;

// First action in `text` wins; further actions set multi_action.
ParseResult parse_action(std::string_view text, const ActionSpace& space);

// Builds a call directly. Throws ConfigError when the name is absent or the arity is wrong.
ActionCall make_call(const ActionSpace& space, std::string_view name, std::vector<std::string> args = {});

struct ActionContext {
  // Answers open_progress_check.
  std::function<Feedback(const WorldState&)> progress_check;
  // Agent that select_oid and search_object report against.
  std::optional<std::string> partner;
};

struct Violation {
  FailureReason reason = FailureReason::Blocked;
  std::string message;
};

// Low-level feasibility check. Never mutates.
std::optional<Violation> validate_action(const WorldState& world, std::string_view agent_id, const ActionCall& call,
                                         const ActionContext& ctx = {});

struct StepResult {
  WorldState world;
  Feedback feedback;
};

// On failure the returned world equals the input.
StepResult execute_action(WorldState world, std::string_view agent_id, const ActionCall& call,
                          const ActionContext& ctx = {});

// go_to / goto / go_check / go_grab / go_put / go_explore, applied atomically.
StepResult expand_high_level(WorldState world, std::string_view agent_id, const ActionCall& call,
                             const ActionContext& ctx = {});

}  // namespace langworld
