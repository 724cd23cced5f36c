#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "langworld/json_util.hpp"
#include "langworld/world.hpp"

namespace langworld {

struct EpisodeScore {
  std::string task_id;
  std::string task_type;
  bool success = false;
  double goal_sr = 0.0;
  // Environment actions only; thought turns count as llm calls.
  int steps = 0;
  int llm_calls = 0;
  std::optional<double> misplaced_pct;
  std::optional<double> fixed_strict_pct;
  std::optional<bool> answer_correct;
  // IQA sub-type: Exists, Contains or Counts.
  std::optional<std::string> question_type;
  std::optional<int> expert_len;

  bool operator==(const EpisodeScore&) const = default;
};

Json score_to_json(const EpisodeScore& s);
// Throws SchemaError.
EpisodeScore score_from_json(const Json& j);

struct RearrangementScores {
  double misplaced_pct = 0.0;
  double fixed_strict_pct = 0.0;
};

// Throws IdMismatch, or DivisionUndefined when start already equals target.
RearrangementScores rearrangement_scores(const WorldState& start, const WorldState& end, const WorldState& target);

// s * L* / max(L*, L). Throws NonPositiveLength.
double path_weighted(double score, int expert_len, int agent_len);

struct Summary {
  std::string task_type;
  int episodes = 0;
  double sr = 0.0;
  double goal_sr = 0.0;
  double avg_steps = 0.0;
  double avg_llm_calls = 0.0;
  std::optional<double> misplaced;
  std::optional<double> fixed_strict;
  // Keyed by question sub-type.
  std::map<std::string, double> accuracy;
  // Present when every episode carries an expert length.
  std::optional<double> pw_sr;
  std::optional<double> pw_goal_sr;
};

// Throws EmptyInput.
Summary aggregate(const std::vector<EpisodeScore>& scores);
// One summary per task type, in name order.
std::vector<Summary> aggregate_by_type(const std::vector<EpisodeScore>& scores);

Json summary_to_json(const Summary& s);
// Aligned text table, one row per summary.
std::string summary_table(const std::vector<Summary>& rows);

}  // namespace langworld
