#include "langworld/feedback.hpp"

#include <array>

namespace langworld {

namespace {

constexpr std::array<std::string_view, 10> kReasonNames = {
    "Obstacle",  "OutOfRange",     "NotVisible",     "NoSuchObject", "AffordanceMissing",
    "InventoryFull", "InventoryEmpty", "AlreadyInState", "Blocked",      "NoPath",
};

std::string join_message(std::string_view head, const std::string& detail) {
  if (detail.empty()) return std::string(head);
  return std::string(head) + " " + detail;
}

}  // namespace

std::string_view failure_reason_name(FailureReason r) { return kReasonNames[static_cast<std::size_t>(r)]; }

std::optional<FailureReason> parse_failure_reason(std::string_view name) {
  for (std::size_t i = 0; i < kReasonNames.size(); ++i) {
    if (kReasonNames[i] == name) return static_cast<FailureReason>(i);
  }
  return std::nullopt;
}

Feedback Feedback::success(std::string detail) {
  Feedback f;
  f.ok = true;
  f.message = join_message("Action succeeded.", detail);
  return f;
}

Feedback Feedback::failure(FailureReason reason, std::string detail) {
  Feedback f;
  f.ok = false;
  f.reason = reason;
  f.message = join_message("Action failed.", detail);
  return f;
}

}  // namespace langworld
