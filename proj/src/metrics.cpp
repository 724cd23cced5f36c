#include "langworld/metrics.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "langworld/error.hpp"

namespace langworld {

using namespace json_util;

Json score_to_json(const EpisodeScore& s) {
  Json j = {{"task_id", s.task_id},     {"task_type", s.task_type}, {"success", s.success},
            {"goal_sr", s.goal_sr},     {"steps", s.steps},         {"llm_calls", s.llm_calls}};
  if (s.misplaced_pct) j["misplaced_pct"] = *s.misplaced_pct;
  if (s.fixed_strict_pct) j["fixed_strict_pct"] = *s.fixed_strict_pct;
  if (s.answer_correct) j["answer_correct"] = *s.answer_correct;
  if (s.question_type) j["question_type"] = *s.question_type;
  if (s.expert_len) j["expert_len"] = *s.expert_len;
  return j;
}

EpisodeScore score_from_json(const Json& j) {
  const std::string where = "score";
  if (!j.is_object()) schema_fail(where, "expected an object");
  EpisodeScore s;
  if (const auto* f = optional(j, "task_id")) s.task_id = as_string(*f, where);
  s.task_type = as_string(require(j, "task_type", where), where);
  s.success = as_bool(require(j, "success", where), where);
  s.goal_sr = as_number(require(j, "goal_sr", where), where);
  s.steps = static_cast<int>(as_integer(require(j, "steps", where), where));
  if (const auto* f = optional(j, "llm_calls")) s.llm_calls = static_cast<int>(as_integer(*f, where));
  if (const auto* f = optional(j, "misplaced_pct")) s.misplaced_pct = as_number(*f, where);
  if (const auto* f = optional(j, "fixed_strict_pct")) s.fixed_strict_pct = as_number(*f, where);
  if (const auto* f = optional(j, "answer_correct")) s.answer_correct = as_bool(*f, where);
  if (const auto* f = optional(j, "question_type")) s.question_type = as_string(*f, where);
  if (const auto* f = optional(j, "expert_len")) s.expert_len = static_cast<int>(as_integer(*f, where));
  if (s.goal_sr < 0.0 || s.goal_sr > 1.0) schema_fail(where, "goal_sr outside [0, 1]");
  if (s.steps < 0) schema_fail(where, "negative steps");
  return s;
}

RearrangementScores rearrangement_scores(const WorldState& start, const WorldState& end, const WorldState& target) {
  const auto m0 = compare_status(start, target).object_ids();
  const auto mend = compare_status(end, target).object_ids();
  if (m0.empty()) throw Error(ErrorCode::DivisionUndefined, "start state already matches the target");
  std::size_t fixed = 0;
  for (const auto& id : m0) fixed += mend.count(id) == 0 ? 1 : 0;
  const bool disturbed = std::any_of(mend.begin(), mend.end(), [&](const std::string& id) { return m0.count(id) == 0; });
  const double n = static_cast<double>(m0.size());
  RearrangementScores r;
  r.misplaced_pct = 100.0 * static_cast<double>(mend.size()) / n;
  r.fixed_strict_pct = disturbed ? 0.0 : 100.0 * static_cast<double>(fixed) / n;
  return r;
}

double path_weighted(double score, int expert_len, int agent_len) {
  if (expert_len < 1 || agent_len < 1) {
    throw Error(ErrorCode::NonPositiveLength, fmt::format("path lengths must be positive (L*={}, L={})", expert_len, agent_len));
  }
  return score * static_cast<double>(expert_len) / static_cast<double>(std::max(expert_len, agent_len));
}

namespace {

double mean(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

std::optional<double> mean_of(const std::vector<EpisodeScore>& scores, const std::optional<double> EpisodeScore::*field) {
  std::vector<double> v;
  for (const auto& s : scores) {
    if (s.*field) v.push_back(*(s.*field));
  }
  if (v.empty()) return std::nullopt;
  return mean(v);
}

}  // namespace

Summary aggregate(const std::vector<EpisodeScore>& scores) {
  if (scores.empty()) throw Error(ErrorCode::EmptyInput, "no episode scores");
  Summary out;
  std::set<std::string> types;
  for (const auto& s : scores) types.insert(s.task_type);
  out.task_type = types.size() == 1 ? *types.begin() : "mixed";
  out.episodes = static_cast<int>(scores.size());

  std::vector<double> sr, gsr, steps, calls;
  for (const auto& s : scores) {
    sr.push_back(s.success ? 100.0 : 0.0);
    gsr.push_back(100.0 * s.goal_sr);
    steps.push_back(s.steps);
    calls.push_back(s.llm_calls);
  }
  out.sr = mean(sr);
  out.goal_sr = mean(gsr);
  out.avg_steps = mean(steps);
  out.avg_llm_calls = mean(calls);
  out.misplaced = mean_of(scores, &EpisodeScore::misplaced_pct);
  out.fixed_strict = mean_of(scores, &EpisodeScore::fixed_strict_pct);

  std::map<std::string, std::vector<double>> acc;
  for (const auto& s : scores) {
    if (s.answer_correct) acc[s.question_type.value_or("all")].push_back(*s.answer_correct ? 100.0 : 0.0);
  }
  for (const auto& [q, v] : acc) out.accuracy[q] = mean(v);

  const bool weighted = std::all_of(scores.begin(), scores.end(), [](const EpisodeScore& s) { return s.expert_len.has_value(); });
  if (weighted) {
    std::vector<double> pw, pwg;
    for (const auto& s : scores) {
      const int len = std::max(s.steps, 1);
      pw.push_back(path_weighted(s.success ? 100.0 : 0.0, *s.expert_len, len));
      pwg.push_back(path_weighted(100.0 * s.goal_sr, *s.expert_len, len));
    }
    out.pw_sr = mean(pw);
    out.pw_goal_sr = mean(pwg);
  }
  return out;
}

std::vector<Summary> aggregate_by_type(const std::vector<EpisodeScore>& scores) {
  if (scores.empty()) throw Error(ErrorCode::EmptyInput, "no episode scores");
  std::map<std::string, std::vector<EpisodeScore>> groups;
  for (const auto& s : scores) groups[s.task_type].push_back(s);
  std::vector<Summary> out;
  for (const auto& [type, group] : groups) out.push_back(aggregate(group));
  return out;
}

Json summary_to_json(const Summary& s) {
  Json j = {{"task_type", s.task_type}, {"episodes", s.episodes}, {"SR", s.sr},
            {"Goal-SR", s.goal_sr},     {"Avg Steps", s.avg_steps}, {"Avg LLM Calls", s.avg_llm_calls}};
  if (s.misplaced) j["Misplaced"] = *s.misplaced;
  if (s.fixed_strict) j["Fixed Strict"] = *s.fixed_strict;
  if (!s.accuracy.empty()) j["Acc"] = s.accuracy;
  if (s.pw_sr) j["PW SR"] = *s.pw_sr;
  if (s.pw_goal_sr) j["PW Goal-SR"] = *s.pw_goal_sr;
  return j;
}

std::string summary_table(const std::vector<Summary>& rows) {
  std::set<std::string> acc_keys;
  for (const auto& r : rows) {
    for (const auto& [k, v] : r.accuracy) acc_keys.insert(k);
  }
  std::vector<std::string> header = {"Task", "N", "SR", "Goal-SR", "Avg Steps", "PW SR", "PW Goal-SR", "Misplaced", "Fixed Strict"};
  for (const auto& k : acc_keys) header.push_back("Acc " + k);

  auto num = [](std::optional<double> v) { return v ? fmt::format("{:.1f}", *v) : std::string("-"); };
  std::vector<std::vector<std::string>> cells{header};
  for (const auto& r : rows) {
    std::vector<std::string> row = {r.task_type,        std::to_string(r.episodes), num(r.sr),
                                    num(r.goal_sr),     num(r.avg_steps),           num(r.pw_sr),
                                    num(r.pw_goal_sr),  num(r.misplaced),           num(r.fixed_strict)};
    for (const auto& k : acc_keys) {
      const auto it = r.accuracy.find(k);
      row.push_back(it == r.accuracy.end() ? "-" : num(it->second));
    }
    cells.push_back(std::move(row));
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::string out;
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) line += "  ";
      line += i == 0 ? fmt::format("{:<{}}", row[i], width[i]) : fmt::format("{:>{}}", row[i], width[i]);
    }
    out += line + "\n";
  }
  return out;
}

}  // namespace langworld
