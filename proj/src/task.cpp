#include "langworld/task.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <random>
#include <set>

#include <fmt/format.h>

#include "langworld/error.hpp"
#include "langworld/scene_io.hpp"
#include "langworld/text.hpp"

namespace langworld {

using namespace json_util;

namespace {

constexpr std::array<std::string_view, 6> kTaskTypeNames = {"IG", "Rearrangement", "IQA", "Household", "MA-Teach", "MA-WAH"};
constexpr std::array<std::string_view, 4> kRoleNames = {"solo", "commander", "follower", "peer"};
constexpr std::array<std::string_view, 6> kGoalKindNames = {"ObjectIn",     "ObjectState", "ObjectNextTo",
                                                            "AgentAt",      "Holding",     "AnswerEquals"};
constexpr std::array<std::string_view, 3> kQuestionNames = {"Exists", "Contains", "Counts"};
constexpr std::array<std::string_view, 5> kFlags = {"open", "toggled", "sliced", "dirty", "temperature"};

template <std::size_t N>
std::optional<std::size_t> index_of(const std::array<std::string_view, N>& names, std::string_view name) {
  for (std::size_t i = 0; i < N; ++i) {
    if (text::iequals(names[i], name)) return i;
  }
  return std::nullopt;
}

bool matches(const ObjectEntity& o, std::string_view pattern) {
  return o.id == pattern || text::iequals(o.category, pattern);
}

std::string flag_value(const ObjectEntity& o, std::string_view flag) {
  if (flag == "open") return o.state.open ? "true" : "false";
  if (flag == "toggled") return o.state.toggled ? "true" : "false";
  if (flag == "sliced") return o.state.sliced ? "true" : "false";
  if (flag == "dirty") return o.state.dirty ? "true" : "false";
  return std::string(temperature_name(o.state.temperature));
}

std::string adjective(const GoalCondition& c) {
  const bool yes = text::iequals(c.value, "true");
  if (c.flag == "open") return yes ? "opened" : "closed";
  if (c.flag == "toggled") return yes ? "on" : "off";
  if (c.flag == "sliced") return yes ? "sliced" : "whole";
  if (c.flag == "dirty") return yes ? "dirty" : "clean";
  if (text::iequals(c.value, "room")) return "at room temperature";
  return text::lower(c.value);
}

// Counts matching objects against a per-object predicate and applies the quantifier.
template <typename Pred>
bool quantified(const WorldState& w, const GoalCondition& c, Pred pred) {
  int total = 0;
  int hits = 0;
  for (const auto& [id, o] : w.objects) {
    if (!matches(o, c.object)) continue;
    ++total;
    if (pred(o)) ++hits;
  }
  if (c.all) return total > 0 && hits == total;
  return hits >= c.count;
}

std::optional<long long> parse_int(std::string_view s) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string normalize_answer(std::string_view s) {
  s = text::trim(s);
  while (!s.empty() && (s.back() == '.' || s.back() == '!')) s.remove_suffix(1);
  std::string out = text::lower(text::trim(s));
  if (out == "yes") return "true";
  if (out == "no") return "false";
  return out;
}

GoalCondition parse_condition(const Json& v, std::string_view where) {
  GoalCondition c;
  const auto kind = parse_goal_kind(as_string(require(v, "kind", where), where));
  if (!kind) schema_fail(where, "unknown goal kind");
  c.kind = *kind;
  auto str = [&](const char* key) -> std::string {
    const auto* f = optional(v, key);
    return f ? as_string(*f, where) : std::string();
  };
  c.object = str("object");
  c.other = str("other");
  c.flag = str("flag");
  if (const auto* f = optional(v, "value")) {
    if (f->is_boolean()) {
      c.value = f->get<bool>() ? "true" : "false";
    } else if (f->is_number_integer()) {
      c.value = std::to_string(f->get<long long>());
    } else {
      c.value = as_string(*f, where);
    }
  }
  if (const auto* f = optional(v, "count")) c.count = static_cast<int>(as_integer(*f, where));
  if (const auto* f = optional(v, "all")) c.all = as_bool(*f, where);
  if (const auto* f = optional(v, "description")) c.description = as_string(*f, where);

  const bool needs_object = c.kind != GoalKind::AnswerEquals;
  if (needs_object && c.object.empty()) schema_fail(where, "empty object pattern");
  if ((c.kind == GoalKind::ObjectIn || c.kind == GoalKind::ObjectNextTo) && c.other.empty()) {
    schema_fail(where, "empty second pattern");
  }
  if (c.kind == GoalKind::ObjectState) {
    if (!index_of(kFlags, c.flag)) schema_fail(where, "unknown state flag '" + c.flag + "'");
    c.flag = text::lower(c.flag);
    if (c.flag == "temperature" ? !parse_temperature(text::lower(c.value)) : c.value != "true" && c.value != "false") {
      schema_fail(where, "bad value for flag " + c.flag);
    }
    if (c.flag == "temperature") c.value = text::lower(c.value);
  }
  if (c.kind == GoalKind::AnswerEquals && c.value.empty()) schema_fail(where, "empty answer");
  if (c.count < 1) schema_fail(where, "count must be positive");
  return c;
}

Json condition_json(const GoalCondition& c) {
  Json j = {{"kind", goal_kind_name(c.kind)}};
  if (!c.object.empty()) j["object"] = c.object;
  if (!c.other.empty()) j["other"] = c.other;
  if (!c.flag.empty()) j["flag"] = c.flag;
  if (!c.value.empty()) j["value"] = c.value;
  if (c.count != 1) j["count"] = c.count;
  if (c.all) j["all"] = true;
  if (c.description) j["description"] = *c.description;
  return j;
}

std::string diff_description(const DiffEntry& e) {
  switch (e.kind) {
    case DiffKind::Moved:
      return fmt::format("{} needs to be back at {}.", e.object_id, e.target_value);
    case DiffKind::Openness:
      return fmt::format("{} needs to be {}.", e.object_id, e.target_value == "true" ? "opened" : "closed");
    default:
      return fmt::format("{} needs its {} restored to {}.", e.object_id, diff_kind_name(e.kind), e.target_value);
  }
}

}  // namespace

std::string_view task_type_name(TaskType t) { return kTaskTypeNames[static_cast<std::size_t>(t)]; }

std::optional<TaskType> parse_task_type(std::string_view name) {
  if (auto i = index_of(kTaskTypeNames, name)) return static_cast<TaskType>(*i);
  return std::nullopt;
}

bool is_multi_agent(TaskType t) { return t == TaskType::MATeach || t == TaskType::MAWAH; }

std::string_view role_name(Role r) { return kRoleNames[static_cast<std::size_t>(r)]; }

std::optional<Role> parse_role(std::string_view name) {
  if (auto i = index_of(kRoleNames, name)) return static_cast<Role>(*i);
  return std::nullopt;
}

std::string_view goal_kind_name(GoalKind k) { return kGoalKindNames[static_cast<std::size_t>(k)]; }

std::optional<GoalKind> parse_goal_kind(std::string_view name) {
  if (auto i = index_of(kGoalKindNames, name)) return static_cast<GoalKind>(*i);
  return std::nullopt;
}

std::string_view question_type_name(QuestionType q) { return kQuestionNames[static_cast<std::size_t>(q)]; }

std::optional<QuestionType> parse_question_type(std::string_view name) {
  if (auto i = index_of(kQuestionNames, name)) return static_cast<QuestionType>(*i);
  return std::nullopt;
}

std::string describe(const GoalCondition& c) {
  if (c.description) return *c.description;
  const std::string who = c.all ? "All " + c.object : c.count > 1 ? fmt::format("{} {}", c.count, c.object) : "One " + c.object;
  const std::string verb = c.all || c.count > 1 ? "need" : "needs";
  switch (c.kind) {
    case GoalKind::ObjectIn:
      return fmt::format("{} {} to be on {}.", who, verb, c.other);
    case GoalKind::ObjectState:
      return fmt::format("{} {} to be {}.", who, verb, adjective(c));
    case GoalKind::ObjectNextTo:
      return fmt::format("{} {} to be next to {}.", who, verb, c.other);
    case GoalKind::AgentAt:
      return fmt::format("You need to be at {}.", c.object);
    case GoalKind::Holding:
      return fmt::format("You need to hold {}.", c.object);
    case GoalKind::AnswerEquals:
      return "The question needs to be answered correctly.";
  }
  return {};
}

const RoleBinding* TaskSpec::role_of(std::string_view agent_id) const {
  for (const auto& r : roles) {
    if (r.agent_id == agent_id) return &r;
  }
  return nullptr;
}

ObservationStyle TaskSpec::observation_style() const {
  switch (task_type) {
    case TaskType::IG:
      return ObservationStyle::EgoGrid;
    case TaskType::MAWAH:
      return ObservationStyle::RoomSummary;
    default:
      return ObservationStyle::EgoScene;
  }
}

int default_step_limit(TaskType t) { return t == TaskType::MAWAH ? 30 : 50; }

void validate_task(const TaskSpec& t) {
  const std::string where = "task " + t.id;
  if (t.task_type == TaskType::IQA && !t.expected_answer) schema_fail(where, "IQA task needs expected_answer");
  if (t.task_type == TaskType::Rearrangement && !t.target_state) schema_fail(where, "Rearrangement task needs a target state");
  if (is_multi_agent(t.task_type) && t.roles.size() < 2) schema_fail(where, "multi-agent task needs at least two roles");
  if (t.roles.empty()) schema_fail(where, "task needs at least one role");
  if (t.step_limit < 1) schema_fail(where, "step_limit must be positive");
  std::set<std::string> seen;
  for (const auto& r : t.roles) {
    if (!seen.insert(r.agent_id).second) schema_fail(where, "agent " + r.agent_id + " bound twice");
    if (r.action_space.empty()) schema_fail(where, "role without action space");
  }
}

TaskSpec load_task(const Json& doc, const SceneResolver& scenes) {
  const std::string where = "task";
  if (const auto* s = optional(doc, "schema"); s && as_string(*s, where) != kTaskSchema) {
    schema_fail(where, "unsupported schema " + s->dump());
  }
  TaskSpec t;
  if (const auto* f = optional(doc, "id")) t.id = as_string(*f, where);
  const auto type = parse_task_type(as_string(require(doc, "task_type", where), where));
  if (!type) schema_fail(where, "unknown task_type");
  t.task_type = *type;
  t.scene_ref = as_string(require(doc, "scene_ref", where), where);
  t.instruction = as_string(require(doc, "instruction", where), where);
  if (const auto* g = optional(doc, "goal")) {
    for (const auto& c : as_array(*g, where)) t.goal.push_back(parse_condition(c, where + ".goal"));
  }
  if (const auto* f = optional(doc, "expected_answer")) {
    t.expected_answer = f->is_string() ? f->get<std::string>() : f->dump();
  }
  if (const auto* f = optional(doc, "question_type")) {
    t.question_type = parse_question_type(as_string(*f, where));
    if (!t.question_type) schema_fail(where, "unknown question_type");
  }
  if (const auto* f = optional(doc, "question_object")) t.question_object = as_string(*f, where);
  if (const auto* f = optional(doc, "question_receptacle")) t.question_receptacle = as_string(*f, where);
  for (const auto& r : as_array(require(doc, "roles", where), where)) {
    RoleBinding b;
    b.agent_id = as_string(require(r, "agent", where), where);
    const auto role = parse_role(as_string(require(r, "role", where), where));
    if (!role) schema_fail(where, "unknown role");
    b.role = *role;
    b.action_space = as_string(require(r, "action_space", where), where);
    t.roles.push_back(std::move(b));
  }
  t.step_limit = default_step_limit(t.task_type);
  if (const auto* f = optional(doc, "step_limit")) t.step_limit = static_cast<int>(as_integer(*f, where));
  if (const auto* f = optional(doc, "placement_target")) t.placement_target = as_string(*f, where);

  auto scene = scenes ? scenes(t.scene_ref) : std::nullopt;
  if (!scene) throw Error(ErrorCode::UnknownScene, "scene " + t.scene_ref + " not found");
  for (const auto& r : t.roles) {
    if (!scene->find_agent(r.agent_id)) schema_fail(where, "role agent " + r.agent_id + " is not in the scene");
  }
  if (const auto* f = optional(doc, "target_state_ref")) {
    t.target_state_ref = as_string(*f, where);
    t.target_state = scenes(t.target_state_ref);
    if (!t.target_state) throw Error(ErrorCode::UnknownScene, "scene " + t.target_state_ref + " not found");
    t.initial_diff = compare_status(*scene, *t.target_state).entries;
  }
  validate_task(t);
  return t;
}

Json task_to_json(const TaskSpec& t) {
  Json doc = {{"schema", kTaskSchema},
              {"id", t.id},
              {"task_type", task_type_name(t.task_type)},
              {"scene_ref", t.scene_ref},
              {"instruction", t.instruction},
              {"step_limit", t.step_limit}};
  Json goal = Json::array();
  for (const auto& c : t.goal) goal.push_back(condition_json(c));
  doc["goal"] = goal;
  if (t.expected_answer) doc["expected_answer"] = *t.expected_answer;
  if (t.question_type) doc["question_type"] = question_type_name(*t.question_type);
  if (!t.question_object.empty()) doc["question_object"] = t.question_object;
  if (!t.question_receptacle.empty()) doc["question_receptacle"] = t.question_receptacle;
  if (!t.target_state_ref.empty()) doc["target_state_ref"] = t.target_state_ref;
  if (t.placement_target) doc["placement_target"] = *t.placement_target;
  Json roles = Json::array();
  for (const auto& r : t.roles) {
    roles.push_back({{"agent", r.agent_id}, {"role", role_name(r.role)}, {"action_space", r.action_space}});
  }
  doc["roles"] = roles;
  return doc;
}

bool answers_match(std::string_view given, std::string_view expected) {
  const auto a = normalize_answer(given);
  const auto b = normalize_answer(expected);
  const auto ia = parse_int(a);
  const auto ib = parse_int(b);
  if (ia && ib) return *ia == *ib;
  return a == b;
}

bool condition_holds(const WorldState& w, const GoalCondition& c, const std::optional<std::string>& answer) {
  switch (c.kind) {
    case GoalKind::ObjectIn:
      return quantified(w, c, [&](const ObjectEntity& o) {
        if (!o.container) return false;
        const auto* r = w.find_object(*o.container);
        return r && matches(*r, c.other);
      });
    case GoalKind::ObjectState:
      return quantified(w, c, [&](const ObjectEntity& o) { return flag_value(o, c.flag) == c.value; });
    case GoalKind::ObjectNextTo:
      return quantified(w, c, [&](const ObjectEntity& o) {
        if (o.holder) return false;
        const Cell a = w.outermost(o).cell;
        for (const auto& [id, b] : w.objects) {
          if (id == o.id || b.holder || !matches(b, c.other)) continue;
          if (chebyshev(a, w.outermost(b).cell) <= 1) return true;
        }
        return false;
      });
    case GoalKind::AgentAt:
      return quantified(w, c, [&](const ObjectEntity& o) {
        if (o.holder) return false;
        const Cell target = w.outermost(o).cell;
        for (const auto& [id, agent] : w.agents) {
          const Cell here = agent.pose.cell;
          if (here + forward_vector(agent.pose.heading) == target && !w.has_wall(here, target)) return true;
        }
        return false;
      });
    case GoalKind::Holding:
      return quantified(w, c, [](const ObjectEntity& o) { return o.holder.has_value(); });
    case GoalKind::AnswerEquals:
      return answer && answers_match(*answer, c.value);
  }
  return false;
}

GoalReport check_goal(const WorldState& world, const TaskSpec& task, const std::optional<std::string>& answer) {
  GoalReport report;
  if (task.task_type == TaskType::Rearrangement && task.target_state) {
    const auto now = compare_status(world, *task.target_state);
    std::set<std::pair<std::string, DiffKind>> open;
    for (const auto& e : now.entries) open.emplace(e.object_id, e.kind);
    std::set<std::pair<std::string, DiffKind>> initial;
    for (const auto& e : task.initial_diff) {
      initial.emplace(e.object_id, e.kind);
      ++report.total;
      if (!open.count({e.object_id, e.kind})) ++report.satisfied;
    }
    for (const auto& e : now.entries) {
      if (!initial.count({e.object_id, e.kind})) ++report.total;
      report.failed_descriptions.push_back(diff_description(e));
    }
  }
  std::vector<GoalCondition> conditions = task.goal;
  const bool has_answer_goal = std::any_of(conditions.begin(), conditions.end(),
                                           [](const GoalCondition& c) { return c.kind == GoalKind::AnswerEquals; });
  if (task.expected_answer && !has_answer_goal) {
    GoalCondition c;
    c.kind = GoalKind::AnswerEquals;
    c.value = *task.expected_answer;
    conditions.push_back(c);
  }
  if (conditions.empty() && report.total == 0 && !(task.task_type == TaskType::Rearrangement && task.target_state)) {
    throw Error(ErrorCode::InvalidTask, "task " + task.id + " has no goal");
  }
  for (const auto& c : conditions) {
    ++report.total;
    if (condition_holds(world, c, answer)) {
      ++report.satisfied;
    } else {
      report.failed_descriptions.push_back(describe(c));
    }
  }
  report.success = report.satisfied == report.total;
  return report;
}

Feedback progress_check(const WorldState& world, const TaskSpec& task) {
  if (task.goal.empty() && task.task_type != TaskType::Rearrangement) {
    throw Error(ErrorCode::InvalidTask, "task " + task.id + " has no goal conditions");
  }
  GoalReport report;
  if (task.goal.empty()) {
    report = check_goal(world, task);
  } else {
    TaskSpec goals_only = task;
    goals_only.expected_answer.reset();
    report = check_goal(world, goals_only);
  }
  if (report.success) return Feedback::success("");
  return Feedback::failure(FailureReason::Blocked, report.failed_descriptions.front());
}

// ---------------------------------------------------------------------------
// Rearrangement shuffling

namespace {

std::uint64_t draw(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

// A cell an agent can face from some reachable free neighbour without crossing a wall.
bool faceable(const OccupancyGrid& grid, const std::set<Cell>& reachable, Cell target) {
  for (int h = 0; h < 4; ++h) {
    const Cell n = target + forward_vector(static_cast<Heading>(h));
    if (reachable.count(n) && !grid.wall_between(n, target)) return true;
  }
  return false;
}

std::set<Cell> reachable_from(const OccupancyGrid& grid, Cell start) {
  std::set<Cell> seen{start};
  std::vector<Cell> stack{start};
  while (!stack.empty()) {
    const Cell c = stack.back();
    stack.pop_back();
    for (int h = 0; h < 4; ++h) {
      const Cell n = c + forward_vector(static_cast<Heading>(h));
      if (!seen.count(n) && grid.can_step(c, n)) {
        seen.insert(n);
        stack.push_back(n);
      }
    }
  }
  return seen;
}

bool has_top_receptacle(const WorldState& w, Cell c) {
  return std::any_of(w.objects.begin(), w.objects.end(), [&](const auto& kv) {
    return kv.second.top_level() && kv.second.cell == c && kv.second.has(Affordance::Receptacle);
  });
}

}  // namespace

Shuffled randomize_rearrangement(const WorldState& world, int n, std::uint64_t seed) {
  if (n < 1 || n > 5) throw Error(ErrorCode::NotEnoughObjects, "n must be between 1 and 5");
  std::mt19937_64 rng(seed);
  WorldState w = world;
  const auto grid = occupancy_grid(w);
  std::set<Cell> reachable;
  for (const auto& [id, a] : w.agents) {
    auto r = reachable_from(grid, a.pose.cell);
    reachable.insert(r.begin(), r.end());
  }
  std::set<Cell> agent_cells;
  for (const auto& [id, a] : w.agents) agent_cells.insert(a.pose.cell);

  std::vector<std::string> candidates;
  for (const auto& [id, o] : w.objects) {
    if (o.holder) continue;
    if (o.has(Affordance::Pickupable) || (o.has(Affordance::Openable) && o.top_level())) candidates.push_back(id);
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) { return text::natural_less(a, b); });
  if (static_cast<int>(candidates.size()) < n) {
    throw Error(ErrorCode::NotEnoughObjects, fmt::format("need {} changeable objects, scene has {}", n, candidates.size()));
  }
  for (std::size_t i = candidates.size(); i > 1; --i) std::swap(candidates[i - 1], candidates[draw(rng, i)]);

  int changed = 0;
  for (const auto& id : candidates) {
    if (changed == n) break;
    const auto& o = w.objects.at(id);
    std::vector<std::string> receptacles;
    std::vector<Cell> floor;
    if (o.has(Affordance::Pickupable) && !w.concealed(o)) {
      for (const auto& [rid, r] : w.objects) {
        if (rid == id || !r.top_level() || !r.has(Affordance::Receptacle)) continue;
        if (r.has(Affordance::Openable) && !r.state.open) continue;
        if (o.container == rid) continue;
        if (faceable(grid, reachable, r.cell)) receptacles.push_back(rid);
      }
      for (const Cell c : reachable) {
        if (agent_cells.count(c) || has_top_receptacle(w, c)) continue;
        if (o.top_level() && o.cell == c) continue;
        if (faceable(grid, reachable, c)) floor.push_back(c);
      }
    }
    const bool can_flip = o.has(Affordance::Openable) && o.top_level();
    const std::size_t options = receptacles.size() + floor.size() + (can_flip ? 1 : 0);
    if (options == 0) continue;
    const std::size_t pick = draw(rng, options);
    if (pick < receptacles.size()) {
      insert_into(w, id, receptacles[pick]);
    } else if (pick < receptacles.size() + floor.size()) {
      place_on_floor(w, id, floor[pick - receptacles.size()]);
    } else {
      w.objects.at(id).state.open = !w.objects.at(id).state.open;
    }
    ++changed;
  }
  if (changed < n) throw Error(ErrorCode::NotEnoughObjects, fmt::format("only {} of {} objects could change", changed, n));
  return {std::move(w), world};
}

int count_category(const WorldState& world, std::string_view category) {
  return static_cast<int>(std::count_if(world.objects.begin(), world.objects.end(),
                                        [&](const auto& kv) { return text::iequals(kv.second.category, category); }));
}

bool contains_category(const WorldState& world, std::string_view category, std::string_view receptacle) {
  return std::any_of(world.objects.begin(), world.objects.end(), [&](const auto& kv) {
    const auto& o = kv.second;
    if (!text::iequals(o.category, category) || !o.container) return false;
    const auto* r = world.find_object(*o.container);
    return r && matches(*r, receptacle);
  });
}

std::string iqa_answer(const WorldState& world, const TaskSpec& task) {
  if (task.task_type != TaskType::IQA || !task.question_type || task.question_object.empty()) {
    throw Error(ErrorCode::InvalidTask, "task " + task.id + " has no question parameters");
  }
  switch (*task.question_type) {
    case QuestionType::Exists:
      return count_category(world, task.question_object) > 0 ? "True" : "False";
    case QuestionType::Contains:
      return contains_category(world, task.question_object, task.question_receptacle) ? "True" : "False";
    case QuestionType::Counts:
      return std::to_string(count_category(world, task.question_object));
  }
  return {};
}

}  // namespace langworld
