#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace langworld {

enum class ErrorCode {
  SchemaError,
  ConsistencyError,
  IdMismatch,
  UnknownAgent,
  SamePoint,
  OutOfRoom,
  MissingBelief,
  UnknownScene,
  InvalidTask,
  NotEnoughObjects,
  DivisionUndefined,
  NonPositiveLength,
  EmptyInput,
  Unplannable,
  NoPath,
  MissingTemplate,
  UnboundSlot,
  BackendError,
  Timeout,
  BudgetExceeded,
  TrialLimit,
  ConfigError,
  NoRecipient,
  HumanTimeout,
  UnknownTask,
  RoleConflict,
  NotYourTurn,
  SessionFinished,
  UnknownSession,
};

std::string_view to_string(ErrorCode code);

// Every engine failure that is not reported through a Feedback value.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace langworld
