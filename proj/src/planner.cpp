#include "langworld/planner.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "langworld/error.hpp"
#include "langworld/text.hpp"

namespace langworld {

namespace {

[[noreturn]] void unplannable(const std::string& what) { throw Error(ErrorCode::Unplannable, what); }

bool natural(const std::string& a, const std::string& b) { return text::natural_less(a, b); }

bool matches(const ObjectEntity& o, std::string_view pattern) {
  return o.id == pattern || text::iequals(o.category, pattern);
}

// Openable closed ancestors of an object, outermost first.
std::vector<std::string> closed_ancestors(const WorldState& w, const ObjectEntity& o) {
  std::vector<std::string> out;
  const ObjectEntity* cur = &o;
  while (cur->container) {
    cur = w.find_object(*cur->container);
    if (!cur) break;
    if (cur->has(Affordance::Openable) && !cur->state.open) out.push_back(cur->id);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

Cell parse_cell_value(std::string_view v) {
  // "cell:x,y"
  const auto body = v.substr(5);
  const auto comma = body.find(',');
  return {std::stoi(std::string(body.substr(0, comma))), std::stoi(std::string(body.substr(comma + 1)))};
}

// Scratch-world executor that records every call it applies.
class Expert {
public:
  Expert(WorldState world, std::string agent_id, const ActionSpace& space)
      : w_(std::move(world)), agent_(std::move(agent_id)), space_(space) {}

  const WorldState& world() const { return w_; }
  std::vector<ActionCall>& calls() { return calls_; }

  void run(const ActionCall& call) {
    auto step = execute_action(w_, agent_, call);
    if (!step.feedback.ok) unplannable(fmt::format("{} failed: {}", call.text(), step.feedback.message));
    w_ = std::move(step.world);
    calls_.push_back(call);
  }

  void run(std::string_view name, std::vector<std::string> args = {}) { run(make_call(space_, name, std::move(args))); }

  void face(Cell target, std::string_view what) {
    std::vector<NavAction> route;
    try {
      route = approach_actions(navigation_grid(w_, agent_), w_.agent(agent_).pose, target);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoPath) throw;
      throw Error(ErrorCode::NoPath, fmt::format("subtask {}: {}", what, e.what()));
    }
    for (const auto& c : nav_calls(route, space_)) run(c);
  }

  void walk_to(Cell cell, std::string_view what) {
    std::vector<NavAction> route;
    try {
      route = astar_actions(navigation_grid(w_, agent_), w_.agent(agent_).pose, cell);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoPath) throw;
      throw Error(ErrorCode::NoPath, fmt::format("subtask {}: {}", what, e.what()));
    }
    for (const auto& c : nav_calls(route, space_)) run(c);
  }

  // Name used in arguments: the label for colored grid objects, the id otherwise.
  std::string arg(const std::string& id) const {
    const auto& o = w_.objects.at(id);
    return o.color ? o.label() : o.id;
  }

  Cell anchor(const std::string& id) const {
    const auto& top = w_.outermost(w_.objects.at(id));
    if (top.holder) return w_.agent(*top.holder).pose.cell;
    return top.cell;
  }

  void expose(const std::string& id) {
    for (const auto& anc : closed_ancestors(w_, w_.objects.at(id))) {
      face(anchor(anc), "open " + anc);
      run("open", {arg(anc)});
    }
  }

  void fetch(const std::string& id) {
    const auto& o = w_.objects.at(id);
    if (o.holder == agent_) return;
    if (o.holder) unplannable(id + " is held by another agent");
    expose(id);
    face(anchor(id), "pick up " + id);
    run("pick_up", {arg(id)});
  }

  void ensure_on(const std::string& instrument) {
    const auto& t = w_.objects.at(instrument);
    if (t.has(Affordance::Toggleable) && !t.state.toggled) run("toggle_on", {arg(instrument)});
  }

  const std::string& agent_id() const { return agent_; }
  const ActionSpace& space() const { return space_; }

private:
  WorldState w_;
  std::string agent_;
  const ActionSpace& space_;
  std::vector<ActionCall> calls_;
};

std::optional<std::string> pick_instance(const WorldState& w, std::string_view pattern,
                                         const std::function<bool(const ObjectEntity&)>& ok) {
  if (const auto* o = w.find_object(pattern); o && ok(*o)) return o->id;
  std::optional<std::string> best;
  for (const auto& [id, o] : w.objects) {
    if (!matches(o, pattern) || !ok(o)) continue;
    if (!best || natural(id, *best)) best = id;
  }
  return best;
}

std::string instrument_for(const WorldState& w, Affordance a) {
  std::optional<std::string> best;
  for (const auto& [id, o] : w.objects) {
    if (o.has(a) && o.top_level() && (!best || natural(id, *best))) best = id;
  }
  if (!best) unplannable(fmt::format("scene has no {} instrument", affordance_name(a)));
  return *best;
}

std::optional<GoalCondition> state_requirement(const std::vector<GoalCondition>& goal, std::string_view pattern,
                                               std::string_view flag) {
  for (const auto& c : goal) {
    if (c.kind == GoalKind::ObjectState && c.object == pattern && c.flag == flag) return c;
  }
  return std::nullopt;
}

// Picks a droppable cell next to `anchor` with the shortest approach route.
Cell drop_cell_near(const Expert& ex, Cell anchor) {
  const auto& w = ex.world();
  const auto grid = navigation_grid(w, ex.agent_id());
  const GridPose pose = w.agent(ex.agent_id()).pose;
  std::optional<Cell> best;
  std::size_t best_len = 0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const Cell c{anchor.x + dx, anchor.y + dy};
      if (c == anchor || !w.inside_rooms(c) || !grid.is_free(c) || w.agent_at(c)) continue;
      const bool has_recep = std::any_of(w.objects.begin(), w.objects.end(), [&](const auto& kv) {
        return kv.second.top_level() && kv.second.cell == c && kv.second.has(Affordance::Receptacle);
      });
      if (has_recep) continue;
      std::size_t len = 0;
      try {
        len = approach_actions(grid, pose, c).size();
      } catch (const Error&) {
        continue;
      }
      if (!best || len < best_len) {
        best = c;
        best_len = len;
      }
    }
  }
  if (!best) unplannable("no free cell next to the target");
  return *best;
}

void satisfy_object_goals(Expert& ex, const TaskSpec& task) {
  const auto& goal = task.goal;
  // Toggle and openness goals on objects that are not carried.
  for (const auto& c : goal) {
    if (c.kind != GoalKind::ObjectState || (c.flag != "toggled" && c.flag != "open")) continue;
    if (condition_holds(ex.world(), c, std::nullopt)) continue;
    const bool want = c.value == "true";
    const auto id = pick_instance(ex.world(), c.object, [](const ObjectEntity&) { return true; });
    if (!id) unplannable("no object matches " + c.object);
    ex.expose(*id);
    ex.face(ex.anchor(*id), "switch " + *id);
    if (ex.space().find("toggle") && !ex.space().find("toggle_on")) {
      ex.run("toggle", {ex.arg(*id)});
    } else if (c.flag == "toggled") {
      ex.run(want ? "toggle_on" : "toggle_off", {ex.arg(*id)});
    } else {
      ex.run(want ? "open" : "close", {ex.arg(*id)});
    }
  }

  for (const auto& c : goal) {
    if (c.kind == GoalKind::AgentAt) {
      if (condition_holds(ex.world(), c, std::nullopt)) continue;
      const auto id = pick_instance(ex.world(), c.object, [](const ObjectEntity& o) { return !o.holder; });
      if (!id) unplannable("no object matches " + c.object);
      ex.face(ex.anchor(*id), "go to " + *id);
      continue;
    }
    if (c.kind != GoalKind::ObjectIn && c.kind != GoalKind::Holding && c.kind != GoalKind::ObjectNextTo) continue;

    const auto sliced = state_requirement(goal, c.object, "sliced");
    const auto dirty = state_requirement(goal, c.object, "dirty");
    const auto temp = state_requirement(goal, c.object, "temperature");
    bool done = condition_holds(ex.world(), c, std::nullopt);
    for (const auto& req : {sliced, dirty, temp}) {
      if (req && !condition_holds(ex.world(), *req, std::nullopt)) done = false;
    }
    if (done) continue;
    const auto& agent_id = ex.agent_id();
    const auto id = pick_instance(ex.world(), c.object, [&](const ObjectEntity& o) {
      return (!o.holder || o.holder == agent_id) && o.has(Affordance::Pickupable);
    });
    if (!id) unplannable("no pickupable object matches " + c.object);

    if (sliced && sliced->value == "true" && !ex.world().objects.at(*id).state.sliced) {
      ex.expose(*id);
      ex.face(ex.anchor(*id), "slice " + *id);
      ex.run("slice", {ex.arg(*id)});
    }
    ex.fetch(*id);
    if (dirty && dirty->value == "false" && ex.world().objects.at(*id).state.dirty) {
      const auto tool = instrument_for(ex.world(), Affordance::Cleaner);
      ex.face(ex.anchor(tool), "clean " + *id);
      ex.ensure_on(tool);
      ex.run("clean", {ex.arg(*id), ex.arg(tool)});
    }
    if (temp && temperature_name(ex.world().objects.at(*id).state.temperature) != temp->value) {
      const bool hot = temp->value == "hot";
      if (temp->value == "room") unplannable("no action restores room temperature");
      const auto tool = instrument_for(ex.world(), hot ? Affordance::Heater : Affordance::Cooler);
      ex.face(ex.anchor(tool), (hot ? "heat " : "cool ") + *id);
      ex.ensure_on(tool);
      ex.run(hot ? "heat" : "cool", {ex.arg(*id), ex.arg(tool)});
    }

    if (c.kind == GoalKind::ObjectIn) {
      const auto recep = pick_instance(ex.world(), c.other, [](const ObjectEntity& o) {
        return o.top_level() && o.has(Affordance::Receptacle);
      });
      if (!recep) unplannable("no receptacle matches " + c.other);
      ex.face(ex.anchor(*recep), "put " + *id);
      const auto& r = ex.world().objects.at(*recep);
      if (r.has(Affordance::Openable) && !r.state.open) ex.run("open", {ex.arg(*recep)});
      if (ex.space().find("put")) {
        ex.run("put", {ex.arg(*id), ex.arg(*recep)});
      } else {
        ex.run("drop", {ex.arg(*id)});
      }
    } else if (c.kind == GoalKind::ObjectNextTo) {
      const auto other = pick_instance(ex.world(), c.other, [&](const ObjectEntity& o) { return o.id != *id && !o.holder; });
      if (!other) unplannable("no object matches " + c.other);
      const Cell target = drop_cell_near(ex, ex.anchor(*other));
      ex.face(target, "drop " + *id);
      ex.run("drop", {ex.arg(*id)});
    }
  }
}

// Centre-most reachable cell of a room, ties by y then x.
std::optional<Cell> room_centre(const WorldState& w, const OccupancyGrid& grid, const Room& room, Cell from) {
  std::set<Cell> seen{from};
  std::vector<Cell> frontier{from};
  while (!frontier.empty()) {
    const Cell c = frontier.back();
    frontier.pop_back();
    for (int h = 0; h < 4; ++h) {
      const Cell n = c + forward_vector(static_cast<Heading>(h));
      if (!seen.count(n) && grid.can_step(c, n)) {
        seen.insert(n);
        frontier.push_back(n);
      }
    }
  }
  const int cx2 = room.bounds.x0 + room.bounds.x1;
  const int cy2 = room.bounds.y0 + room.bounds.y1;
  std::optional<Cell> best;
  auto key = [&](Cell c) { return std::make_tuple(std::abs(2 * c.x - cx2) + std::abs(2 * c.y - cy2), c.y, c.x); };
  for (const Cell c : seen) {
    if (!room.bounds.contains(c) || (w.room_at(c) && w.room_at(c)->id != room.id)) continue;
    if (!best || key(c) < key(*best)) best = c;
  }
  return best;
}

void iqa_sweep(Expert& ex) {
  std::vector<const Room*> rooms;
  for (const auto& r : ex.world().rooms) rooms.push_back(&r);
  std::sort(rooms.begin(), rooms.end(), [](const Room* a, const Room* b) { return natural(a->id, b->id); });
  for (const Room* room : rooms) {
    const Cell here = ex.world().agent(ex.agent_id()).pose.cell;
    const Room* current = ex.world().room_at(here);
    if (rooms.size() > 1 && (!current || current->id != room->id)) {
      const auto centre = room_centre(ex.world(), navigation_grid(ex.world(), ex.agent_id()), *room, here);
      if (!centre) unplannable("room " + room->id + " is unreachable");
      ex.walk_to(*centre, "explore " + room->id);
    }
    std::vector<std::string> containers;
    for (const auto& [id, o] : ex.world().objects) {
      if (o.top_level() && o.has(Affordance::Openable) && o.has(Affordance::Receptacle) && !o.state.open &&
          room->bounds.contains(o.cell)) {
        containers.push_back(id);
      }
    }
    std::sort(containers.begin(), containers.end(), natural);
    for (const auto& id : containers) {
      ex.face(ex.anchor(id), "open " + id);
      ex.run("open", {ex.arg(id)});
    }
  }
}

}  // namespace

std::vector<ActionCall> nav_calls(const std::vector<NavAction>& route, const ActionSpace& space) {
  std::vector<ActionCall> out;
  out.reserve(route.size());
  for (NavAction a : route) out.push_back(make_call(space, nav_action_name(a)));
  return out;
}

std::vector<Subtask> plan_subtasks(const StatusDiff& diff, const WorldState& world, const ActionSpace& space) {
  std::map<std::string, bool, std::less<>> open_now;
  for (const auto& [id, o] : world.objects) {
    if (o.has(Affordance::Openable)) open_now[id] = o.state.open;
  }
  std::map<std::string, bool, std::less<>> open_target = open_now;
  std::vector<const DiffEntry*> moved;
  for (const auto& e : diff.entries) {
    if (!world.find_object(e.object_id)) unplannable("diff names unknown object " + e.object_id);
    if (e.kind == DiffKind::Openness) {
      open_target[e.object_id] = e.target_value == "true";
    } else if (e.kind == DiffKind::Moved) {
      moved.push_back(&e);
    } else if (e.kind != DiffKind::Held) {
      unplannable(fmt::format("{} change of {} is not restorable", diff_kind_name(e.kind), e.object_id));
    }
  }
  std::sort(moved.begin(), moved.end(), [](const DiffEntry* a, const DiffEntry* b) { return natural(a->object_id, b->object_id); });

  auto call = [&](std::string_view name, const std::string& arg) { return make_call(space, name, {arg}); };
  auto cell_of = [&](const std::string& id) { return world.outermost(world.objects.at(id)).cell; };
  std::vector<Subtask> plan;
  auto open_first = [&](const std::string& id) {
    if (open_now.count(id) && !open_now[id]) {
      plan.push_back({id, {call("open", id)}, cell_of(id), std::nullopt});
      open_now[id] = true;
    }
  };

  for (const DiffEntry* e : moved) {
    const auto& obj = world.objects.at(e->object_id);
    if (!obj.holder) {
      std::vector<std::string> chain;
      for (const ObjectEntity* cur = &obj; cur->container;) {
        cur = &world.objects.at(*cur->container);
        chain.push_back(cur->id);
      }
      std::reverse(chain.begin(), chain.end());
      for (const auto& anc : chain) open_first(anc);
      plan.push_back({obj.id, {call("pick_up", obj.id)}, cell_of(obj.id), std::nullopt});
    }
    const std::string_view target = e->target_value;
    if (target.rfind("in:", 0) == 0) {
      const std::string recep(target.substr(3));
      if (!world.find_object(recep)) unplannable("unknown receptacle " + recep);
      open_first(recep);
      plan.push_back({obj.id, {call("drop", obj.id)}, cell_of(recep), std::nullopt});
    } else if (target.rfind("cell:", 0) == 0) {
      plan.push_back({obj.id, {call("drop", obj.id)}, parse_cell_value(target), std::nullopt});
    } else {
      unplannable("cannot restore placement " + std::string(target));
    }
  }

  std::vector<std::string> openables;
  for (const auto& [id, open] : open_now) openables.push_back(id);
  std::sort(openables.begin(), openables.end(), natural);
  for (const auto& id : openables) {
    if (open_now[id] == open_target[id]) continue;
    plan.push_back({id, {call(open_target[id] ? "open" : "close", id)}, cell_of(id), std::nullopt});
  }
  return plan;
}

std::vector<ActionCall> generate_trajectory(const WorldState& world, const TaskSpec& task) {
  if (task.roles.empty()) unplannable("task has no roles");
  const auto& role = task.roles.front();
  const auto& space = builtin_action_space(role.action_space);
  Expert ex(world, role.agent_id, space);

  switch (task.task_type) {
    case TaskType::Rearrangement: {
      if (!task.target_state) unplannable("rearrangement task without target state");
      const auto diff = compare_status(world, *task.target_state);
      for (const auto& sub : plan_subtasks(diff, world, space)) {
        ex.face(ex.anchor(sub.object_id) == sub.target_cell ? ex.anchor(sub.object_id) : sub.target_cell,
                sub.operations.front().text());
        for (const auto& op : sub.operations) ex.run(op);
      }
      break;
    }
    case TaskType::IQA:
      iqa_sweep(ex);
      ex.run("answer", {iqa_answer(world, task)});
      break;
    case TaskType::IG:
    case TaskType::Household:
      satisfy_object_goals(ex, task);
      break;
    default:
      unplannable(fmt::format("no expert for {} tasks", task_type_name(task.task_type)));
  }
  return std::move(ex.calls());
}

std::string trajectory_jsonl(const std::vector<ActionCall>& calls, std::string_view agent_id) {
  std::string out;
  for (std::size_t i = 0; i < calls.size(); ++i) {
    Json line = {{"step", i}, {"agent", std::string(agent_id)}, {"action", calls[i].spec.name}, {"args", calls[i].args}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::vector<ActionCall> parse_trajectory_jsonl(std::string_view text, const ActionSpace& space) {
  std::vector<ActionCall> out;
  for (const auto& line : text::split_lines(text)) {
    if (text::trim(line).empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      json_util::schema_fail("trajectory", e.what());
    }
    const auto name = json_util::as_string(json_util::require(j, "action", "trajectory"), "trajectory");
    std::vector<std::string> args;
    if (const auto* a = json_util::optional(j, "args")) {
      for (const auto& v : json_util::as_array(*a, "trajectory")) args.push_back(json_util::as_string(v, "trajectory"));
    }
    try {
      out.push_back(make_call(space, name, std::move(args)));
    } catch (const Error& e) {
      json_util::schema_fail("trajectory", e.what());
    }
  }
  return out;
}

}  // namespace langworld
