#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace langworld {

enum class FailureReason : std::uint8_t {
  Obstacle,
  OutOfRange,
  NotVisible,
  NoSuchObject,
  AffordanceMissing,
  InventoryFull,
  InventoryEmpty,
  AlreadyInState,
  Blocked,
  NoPath,
};

std::string_view failure_reason_name(FailureReason r);
std::optional<FailureReason> parse_failure_reason(std::string_view name);

struct Feedback {
  bool ok = true;
  std::string message;
  std::optional<FailureReason> reason;

  // Side information consumed by belief tracking and the runtime.
  std::optional<std::string> checked_container;
  std::optional<std::string> explored_room;
  std::vector<std::string> revealed;
  // Replaces the rendered observation for this turn, e.g. "In it you see wine_0".
  std::optional<std::string> observation;
  // Set by stop/answer.
  bool terminal = false;
  std::optional<std::string> answer;

  static Feedback success(std::string detail);
  static Feedback failure(FailureReason reason, std::string detail);

  bool operator==(const Feedback&) const = default;
};

}  // namespace langworld
