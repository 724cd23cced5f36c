#include "langworld/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <fmt/format.h>

#include "langworld/error.hpp"

namespace langworld {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ConsistencyError: return "ConsistencyError";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::UnknownAgent: return "UnknownAgent";
    case ErrorCode::SamePoint: return "SamePoint";
    case ErrorCode::OutOfRoom: return "OutOfRoom";
    case ErrorCode::MissingBelief: return "MissingBelief";
    case ErrorCode::UnknownScene: return "UnknownScene";
    case ErrorCode::InvalidTask: return "InvalidTask";
    case ErrorCode::NotEnoughObjects: return "NotEnoughObjects";
    case ErrorCode::DivisionUndefined: return "DivisionUndefined";
    case ErrorCode::NonPositiveLength: return "NonPositiveLength";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::Unplannable: return "Unplannable";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::MissingTemplate: return "MissingTemplate";
    case ErrorCode::UnboundSlot: return "UnboundSlot";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::TrialLimit: return "TrialLimit";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::NoRecipient: return "NoRecipient";
    case ErrorCode::HumanTimeout: return "HumanTimeout";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::RoleConflict: return "RoleConflict";
    case ErrorCode::NotYourTurn: return "NotYourTurn";
    case ErrorCode::SessionFinished: return "SessionFinished";
    case ErrorCode::UnknownSession: return "UnknownSession";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

namespace text {

std::string_view trim(std::string_view s) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find('\n', start);
    if (end == std::string_view::npos) end = s.size();
    auto line = s.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = end + 1;
  }
  return lines;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i != 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  if (from.empty()) return s;
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::string format_real(double value) {
  if (std::isfinite(value) && std::floor(value) == value && std::fabs(value) < 1e15) {
    return fmt::format("{:.1f}", value);
  }
  return fmt::format("{}", value);
}

bool natural_less(std::string_view a, std::string_view b) {
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (is_digit(a[i]) && is_digit(b[j])) {
      std::size_t ie = i;
      std::size_t je = j;
      while (ie < a.size() && is_digit(a[ie])) ++ie;
      while (je < b.size() && is_digit(b[je])) ++je;
      auto na = a.substr(i, ie - i);
      auto nb = b.substr(j, je - j);
      while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
      while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ie;
      j = je;
      continue;
    }
    if (a[i] != b[j]) return a[i] < b[j];
    ++i;
    ++j;
  }
  if ((a.size() - i) != (b.size() - j)) return (a.size() - i) < (b.size() - j);
  return a < b;
}

std::string_view article(std::string_view noun) {
  if (noun.empty()) return "a";
  switch (std::tolower(static_cast<unsigned char>(noun.front()))) {
    case 'a': case 'e': case 'i': case 'o': case 'u': return "an";
    default: return "a";
  }
}

}  // namespace text
}  // namespace langworld
