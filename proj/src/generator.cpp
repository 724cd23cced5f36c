#include "langworld/generator.hpp"

#include <algorithm>
#include <deque>
#include <random>
#include <set>

#include <fmt/format.h>

#include "langworld/error.hpp"
#include "langworld/navigation.hpp"
#include "langworld/planner.hpp"
#include "langworld/scene_io.hpp"
#include "langworld/text.hpp"

namespace langworld {

namespace {

using A = Affordance;

constexpr int kAttempts = 64;

class Builder {
public:
  explicit Builder(std::mt19937_64& rng) : rng_(rng) {}

  WorldState w;

  std::size_t pick(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(rng_() % n); }
  bool coin(int one_in) { return pick(static_cast<std::size_t>(one_in)) == 0; }
  template <class T>
  const T& choose(const std::vector<T>& v) { return v.at(pick(v.size())); }

  void room(std::string id, RoomCategory cat, Rect r) { w.rooms.push_back({std::move(id), cat, r}); }

  AgentBody& agent(std::string id, Cell c, Heading h, AgentConfig cfg) {
    AgentBody a;
    a.id = id;
    a.pose = {c, h};
    a.config = std::move(cfg);
    return w.agents.emplace(id, std::move(a)).first->second;
  }

  ObjectEntity& object(const std::string& category, Cell c, Affordances affs, std::string id = {}) {
    if (id.empty()) id = fmt::format("{}_{}", category, counts_[category]++);
    ObjectEntity o;
    o.id = id;
    o.category = category;
    o.cell = c;
    o.affordances = affs;
    o.ordinal = ordinal_++;
    return w.objects.emplace(id, std::move(o)).first->second;
  }

  ObjectEntity& inside(const std::string& category, const std::string& receptacle, Affordances affs,
                       std::string id = {}) {
    const auto oid = object(category, w.objects.at(receptacle).cell, affs, std::move(id)).id;
    insert_into(w, oid, receptacle);
    return w.objects.at(oid);
  }

  bool occupied(Cell c) const {
    if (w.agent_at(c)) return true;
    return std::any_of(w.objects.begin(), w.objects.end(),
                       [&](const auto& kv) { return kv.second.top_level() && kv.second.cell == c; });
  }

  std::vector<Cell> free_cells(const Rect& r) const {
    std::vector<Cell> out;
    for (int y = r.y0; y <= r.y1; ++y) {
      for (int x = r.x0; x <= r.x1; ++x) {
        if (!occupied({x, y})) out.push_back({x, y});
      }
    }
    return out;
  }

  // Places a top-level object on a random free cell keeping the layout navigable.
  ObjectEntity* furniture(const std::string& category, const Rect& r, Affordances affs) {
    for (int i = 0; i < kAttempts; ++i) {
      const auto cells = free_cells(r);
      if (cells.empty()) return nullptr;
      const Cell c = choose(cells);
      auto& o = object(category, c, affs);
      if (navigable()) return &w.objects.at(o.id);
      const auto id = o.id;
      w.objects.erase(id);
      --counts_[category];
      --ordinal_;
    }
    return nullptr;
  }

  // Every free cell is reachable from the first agent and every top-level object is faceable.
  bool navigable() const {
    if (w.agents.empty()) return true;
    const auto grid = occupancy_grid(w);
    const Cell start = w.agents.begin()->second.pose.cell;
    if (!grid.is_free(start)) return false;
    std::set<Cell> seen{start};
    std::deque<Cell> q{start};
    while (!q.empty()) {
      const Cell c = q.front();
      q.pop_front();
      for (int h = 0; h < 4; ++h) {
        const Cell n = c + forward_vector(static_cast<Heading>(h));
        if (!seen.count(n) && grid.can_step(c, n)) {
          seen.insert(n);
          q.push_back(n);
        }
      }
    }
    const Rect ext = w.extent();
    for (int y = ext.y0; y <= ext.y1; ++y) {
      for (int x = ext.x0; x <= ext.x1; ++x) {
        if (grid.is_free({x, y}) && !seen.count({x, y})) return false;
      }
    }
    for (const auto& [id, o] : w.objects) {
      if (!o.top_level()) continue;
      bool faceable = false;
      for (int h = 0; h < 4 && !faceable; ++h) {
        const Cell n = o.cell + forward_vector(static_cast<Heading>(h));
        faceable = seen.count(n) && !grid.wall_between(n, o.cell);
      }
      if (!faceable) return false;
    }
    return true;
  }

private:
  std::mt19937_64& rng_;
  std::map<std::string, int> counts_;
  int ordinal_ = 0;
};

AgentConfig cone_config(double view, double md, int capacity) {
  AgentConfig c;
  c.view_distance = view;
  c.view_shape.kind = ViewShape::Kind::Cone;
  c.view_shape.half_angle_degrees = 60.0;
  c.manipulate_distance = md;
  c.inventory_capacity = capacity;
  return c;
}

Rect single_room(Builder& b, RoomCategory cat, int min_side, int max_side) {
  const int span = max_side - min_side + 1;
  const int wdt = min_side + static_cast<int>(b.pick(span));
  const int hgt = min_side + static_cast<int>(b.pick(span));
  const Rect r{0, 0, wdt - 1, hgt - 1};
  b.room(std::string(room_category_name(cat)) + "_0", cat, r);
  return r;
}

void place_agent(Builder& b, const std::string& id, const Rect& r, AgentConfig cfg) {
  const auto cells = b.free_cells(r);
  b.agent(id, b.choose(cells), static_cast<Heading>(b.pick(4)), std::move(cfg));
}

RoleBinding solo(std::string space) { return {"agent_0", Role::Solo, std::move(space)}; }

std::string with_article(std::string_view noun) { return fmt::format("{} {}", text::article(noun), noun); }

// ---------------------------------------------------------------------------

const std::vector<std::string> kColors = {"red", "green", "blue", "purple", "yellow", "grey"};

std::optional<Scenario> try_ig(Builder& b) {
  const int side = 7 + static_cast<int>(b.pick(3));
  const Rect r{0, 0, side - 1, side - 1};
  b.room("room_0", RoomCategory::Generic, r);
  AgentConfig cfg;
  cfg.view_distance = 7;
  cfg.view_shape.kind = ViewShape::Kind::Rect;
  cfg.view_shape.side_steps = 3;
  cfg.manipulate_distance = 1.0;
  cfg.inventory_capacity = 1;
  place_agent(b, "agent_0", r, cfg);

  std::set<std::string> labels;
  const int n = 3 + static_cast<int>(b.pick(3));
  for (int i = 0; i < n; ++i) {
    const std::string cat = b.choose(std::vector<std::string>{"key", "ball", "box"});
    const std::string color = b.choose(kColors);
    if (!labels.insert(color + " " + cat).second) continue;
    Affordances affs{A::Blocking};
    if (cat != "box") affs.set(A::Pickupable);
    auto* o = b.furniture(cat, r, affs);
    if (!o) return std::nullopt;
    o->color = color;
  }

  std::vector<std::string> movable, all;
  for (const auto& [id, o] : b.w.objects) {
    all.push_back(id);
    if (o.has(A::Pickupable)) movable.push_back(id);
  }
  if (movable.empty() || all.size() < 2) return std::nullopt;

  TaskSpec t;
  t.task_type = TaskType::IG;
  t.roles = {solo("ig")};
  const auto variant = b.pick(3);
  GoalCondition c;
  if (variant == 0) {
    const auto& o = b.w.objects.at(b.choose(movable));
    c.kind = GoalKind::Holding;
    c.object = o.id;
    c.description = fmt::format("You need to pick up the {}.", o.label());
    t.instruction = fmt::format("pick up the {}", o.label());
  } else if (variant == 1) {
    const auto& o = b.w.objects.at(b.choose(all));
    c.kind = GoalKind::AgentAt;
    c.object = o.id;
    c.description = fmt::format("You need to go to the {}.", o.label());
    t.instruction = fmt::format("go to the {}", o.label());
  } else {
    const auto& o = b.w.objects.at(b.choose(movable));
    std::vector<std::string> others;
    for (const auto& id : all) {
      if (id != o.id) others.push_back(id);
    }
    const auto& other = b.w.objects.at(b.choose(others));
    c.kind = GoalKind::ObjectNextTo;
    c.object = o.id;
    c.other = other.id;
    c.description = fmt::format("The {} needs to be next to the {}.", o.label(), other.label());
    t.instruction = fmt::format("put the {} next to the {}", o.label(), other.label());
  }
  t.goal = {c};
  return Scenario{std::move(b.w), std::move(t)};
}

// ---------------------------------------------------------------------------

struct FurnitureKind {
  std::string category;
  Affordances affs;
};

const std::vector<FurnitureKind> kRearrangeFurniture = {
    {"diningtable", {A::Receptacle, A::Blocking}},
    {"sidetable", {A::Receptacle, A::Blocking}},
    {"sofa", {A::Receptacle, A::Blocking}},
    {"drawer", {A::Receptacle, A::Openable, A::Blocking}},
    {"cabinet", {A::Receptacle, A::Openable, A::Blocking}},
    {"fridge", {A::Receptacle, A::Openable, A::Cooler, A::Blocking}},
};

const std::vector<std::string> kSmallItems = {"apple", "book", "mug", "pen", "vase", "remotecontrol", "bowl", "plate", "candle"};

std::optional<Scenario> try_rearrangement(Builder& b, std::uint64_t seed) {
  const Rect r = single_room(b, RoomCategory::LivingRoom, 8, 10);
  place_agent(b, "agent_0", r, cone_config(8.0, 1.5, 1));

  auto kinds = kRearrangeFurniture;
  std::vector<std::string> receptacles;
  const int n_furniture = 4 + static_cast<int>(b.pick(3));
  for (int i = 0; i < n_furniture; ++i) {
    const auto& k = kinds[b.pick(kinds.size())];
    auto* o = b.furniture(k.category, r, k.affs);
    if (!o) return std::nullopt;
    if (o->has(A::Openable)) o->state.open = b.coin(3);
    receptacles.push_back(o->id);
  }
  const int n_items = 4 + static_cast<int>(b.pick(3));
  for (int i = 0; i < n_items; ++i) {
    const auto& cat = b.choose(kSmallItems);
    if (b.coin(4)) {
      if (!b.furniture(cat, r, {A::Pickupable})) return std::nullopt;
    } else {
      b.inside(cat, b.choose(receptacles), {A::Pickupable});
    }
  }

  const int n = 1 + static_cast<int>(b.pick(3));
  Shuffled s;
  try {
    s = randomize_rearrangement(b.w, n, seed ^ 0x9e3779b97f4a7c15ULL);
  } catch (const Error&) {
    return std::nullopt;
  }
  TaskSpec t;
  t.task_type = TaskType::Rearrangement;
  t.roles = {solo("rearrangement")};
  t.instruction = "Restore the room to its original arrangement.";
  t.initial_diff = compare_status(s.shuffled, s.target).entries;
  t.target_state = std::move(s.target);
  return Scenario{std::move(s.shuffled), std::move(t)};
}

// ---------------------------------------------------------------------------

const std::vector<FurnitureKind> kIqaFurniture = {
    {"fridge", {A::Receptacle, A::Openable, A::Cooler, A::Blocking}},
    {"cabinet", {A::Receptacle, A::Openable, A::Blocking}},
    {"drawer", {A::Receptacle, A::Openable, A::Blocking}},
    {"microwave", {A::Receptacle, A::Openable, A::Heater, A::Blocking}},
    {"countertop", {A::Receptacle, A::Blocking}},
    {"diningtable", {A::Receptacle, A::Blocking}},
};

const std::vector<std::string> kIqaItems = {"apple", "egg", "mug", "bread", "tomato", "potato"};

std::string plural(std::string_view noun) {
  if (!noun.empty() && (noun.back() == 'o')) return std::string(noun) + "es";
  return std::string(noun) + "s";
}

std::optional<Scenario> try_iqa(Builder& b) {
  const Rect r = single_room(b, RoomCategory::Kitchen, 8, 10);
  b.w.feedback_units = FeedbackUnits::Meters;
  b.w.step_size_meters = 0.25;
  place_agent(b, "agent_0", r, cone_config(8.0, 1.5, 1));

  std::vector<std::string> receptacles;
  for (const auto& k : kIqaFurniture) {
    auto* o = b.furniture(k.category, r, k.affs);
    if (!o) return std::nullopt;
    receptacles.push_back(o->id);
  }
  for (const auto& cat : kIqaItems) {
    const auto copies = b.pick(3);
    for (std::size_t i = 0; i < copies; ++i) b.inside(cat, b.choose(receptacles), {A::Pickupable});
  }

  TaskSpec t;
  t.task_type = TaskType::IQA;
  t.roles = {solo("iqa")};
  t.question_type = static_cast<QuestionType>(b.pick(3));
  t.question_object = b.choose(kIqaItems);
  switch (*t.question_type) {
    case QuestionType::Exists:
      t.instruction = fmt::format("Is there {} in the room?", with_article(t.question_object));
      break;
    case QuestionType::Contains:
      t.question_receptacle = b.choose(kIqaFurniture).category;
      t.instruction = fmt::format("Is there {} in the {}?", with_article(t.question_object), t.question_receptacle);
      break;
    case QuestionType::Counts:
      t.instruction = fmt::format("How many {} are there in the room?", plural(t.question_object));
      break;
  }
  t.expected_answer = iqa_answer(b.w, t);
  return Scenario{std::move(b.w), std::move(t)};
}

// ---------------------------------------------------------------------------

const std::vector<FurnitureKind> kHouseholdFurniture = {
    {"countertop", {A::Receptacle, A::Blocking}},
    {"diningtable", {A::Receptacle, A::Blocking}},
    {"sinkbasin", {A::Receptacle, A::Cleaner, A::Toggleable, A::Blocking}},
    {"microwave", {A::Receptacle, A::Openable, A::Heater, A::Toggleable, A::Blocking}},
    {"fridge", {A::Receptacle, A::Openable, A::Cooler, A::Blocking}},
    {"cabinet", {A::Receptacle, A::Openable, A::Blocking}},
    {"desklamp", {A::Toggleable, A::Blocking}},
};

struct HouseholdItem {
  std::string category;
  Affordances affs;
  bool dirty = false;
};

const std::vector<HouseholdItem> kHouseholdItems = {
    {"apple", {A::Pickupable, A::Sliceable}, false},
    {"lettuce", {A::Pickupable, A::Sliceable}, true},
    {"potato", {A::Pickupable, A::Sliceable}, false},
    {"mug", {A::Pickupable}, true},
    {"book", {A::Pickupable}, false},
};

bool build_household_room(Builder& b, const Rect& r) {
  std::vector<std::string> holders;
  for (const auto& k : kHouseholdFurniture) {
    auto* o = b.furniture(k.category, r, k.affs);
    if (!o) return false;
    if (k.category == "countertop" || k.category == "diningtable" || k.category == "fridge" || k.category == "cabinet") {
      holders.push_back(o->id);
    }
  }
  for (const auto& item : kHouseholdItems) {
    auto& o = b.inside(item.category, b.choose(holders), item.affs);
    o.state.dirty = item.dirty;
  }
  return true;
}

GoalCondition in(std::string object, std::string receptacle) {
  GoalCondition c;
  c.kind = GoalKind::ObjectIn;
  c.object = std::move(object);
  c.other = std::move(receptacle);
  return c;
}

GoalCondition state(std::string object, std::string flag, std::string value) {
  GoalCondition c;
  c.kind = GoalKind::ObjectState;
  c.object = std::move(object);
  c.flag = std::move(flag);
  c.value = std::move(value);
  return c;
}

void household_goal(Builder& b, TaskSpec& t, bool allow_look) {
  const std::vector<std::string> places = {"countertop", "diningtable", "cabinet", "fridge", "sinkbasin"};
  const std::vector<std::string> tables = {"countertop", "diningtable"};
  const auto variant = b.pick(allow_look ? 6 : 5);
  switch (variant) {
    case 0: {
      const auto obj = b.choose(std::vector<std::string>{"apple", "potato", "mug", "book", "lettuce"});
      const auto dest = b.choose(places);
      t.goal = {in(obj, dest)};
      t.instruction = fmt::format("put {} in {}.", with_article(obj), dest);
      break;
    }
    case 1: {
      const auto obj = b.choose(std::vector<std::string>{"lettuce", "mug"});
      const auto dest = b.choose(tables);
      t.goal = {state(obj, "dirty", "false"), in(obj, dest)};
      t.instruction = fmt::format("put a clean {} in {}.", obj, dest);
      break;
    }
    case 2: {
      const auto obj = b.choose(std::vector<std::string>{"apple", "potato", "mug"});
      const auto dest = b.choose(tables);
      t.goal = {state(obj, "temperature", "hot"), in(obj, dest)};
      t.instruction = fmt::format("put a hot {} in {}.", obj, dest);
      break;
    }
    case 3: {
      const auto obj = b.choose(std::vector<std::string>{"apple", "potato", "lettuce", "mug"});
      const auto dest = b.choose(tables);
      t.goal = {state(obj, "temperature", "cold"), in(obj, dest)};
      t.instruction = fmt::format("put a cool {} in {}.", obj, dest);
      break;
    }
    case 4: {
      const auto obj = b.choose(std::vector<std::string>{"apple", "potato", "lettuce"});
      const auto dest = b.choose(tables);
      t.goal = {state(obj, "sliced", "true"), in(obj, dest)};
      t.instruction = fmt::format("put a sliced {} in {}.", obj, dest);
      break;
    }
    default: {
      GoalCondition hold;
      hold.kind = GoalKind::Holding;
      hold.object = "book";
      t.goal = {state("desklamp", "toggled", "true"), hold};
      t.instruction = "look at book under the desklamp.";
      break;
    }
  }
}

std::optional<Scenario> try_household(Builder& b) {
  const Rect r = single_room(b, RoomCategory::Kitchen, 8, 10);
  place_agent(b, "agent_0", r, cone_config(8.0, 1.5, 1));
  if (!build_household_room(b, r)) return std::nullopt;
  TaskSpec t;
  t.task_type = TaskType::Household;
  t.roles = {solo("household")};
  household_goal(b, t, true);
  return Scenario{std::move(b.w), std::move(t)};
}

std::optional<Scenario> try_ma_teach(Builder& b) {
  const Rect r = single_room(b, RoomCategory::Kitchen, 8, 10);
  place_agent(b, "follower", r, cone_config(8.0, 1.5, 1));
  auto commander = cone_config(40.0, 1.5, 0);
  place_agent(b, "commander", r, commander);
  b.w.agents.at("commander").name = "commander";
  b.w.agents.at("follower").name = "follower";
  if (!build_household_room(b, r)) return std::nullopt;
  TaskSpec t;
  t.task_type = TaskType::MATeach;
  t.roles = {{"commander", Role::Commander, "ma_teach_commander"}, {"follower", Role::Follower, "ma_teach_follower"}};
  household_goal(b, t, false);
  return Scenario{std::move(b.w), std::move(t)};
}

// ---------------------------------------------------------------------------

void wall_between_rooms(WorldState& w, const std::vector<std::pair<Cell, Cell>>& doors) {
  const Rect ext = w.extent();
  for (int y = ext.y0; y <= ext.y1; ++y) {
    for (int x = ext.x0; x <= ext.x1; ++x) {
      for (Cell d : {Cell{1, 0}, Cell{0, 1}}) {
        const Cell a{x, y};
        const Cell c = a + d;
        const Room* ra = w.room_at(a);
        const Room* rc = w.room_at(c);
        if (!ra || !rc || ra->id == rc->id) continue;
        const bool door = std::any_of(doors.begin(), doors.end(), [&](const auto& p) {
          return (p.first == a && p.second == c) || (p.first == c && p.second == a);
        });
        if (!door) w.walls.insert(*make_edge(a, c));
      }
    }
  }
}

void mawah_house(Builder& b) {
  b.room("livingroom_0", RoomCategory::LivingRoom, {0, 0, 5, 4});
  b.room("kitchen_0", RoomCategory::Kitchen, {6, 0, 13, 4});
  b.room("bedroom_0", RoomCategory::Bedroom, {0, 5, 5, 9});
  b.room("bathroom_0", RoomCategory::Bathroom, {6, 5, 13, 9});
  wall_between_rooms(b.w, {{{5, 2}, {6, 2}}, {{2, 4}, {2, 5}}, {{5, 7}, {6, 7}}, {{13, 4}, {13, 5}}});

  AgentConfig cfg;
  cfg.manipulate_distance = 1.0;
  cfg.inventory_capacity = 2;
  b.agent("alice", {8, 2}, Heading::North, cfg).name = "Alice";
  b.agent("bob", {3, 7}, Heading::North, cfg).name = "Bob";

  const Affordances cupboard{A::Receptacle, A::Openable, A::Blocking};
  for (int i = 0; i < 4; ++i) b.object("kitchencabinet", {7 + i, 4}, cupboard);
  for (int i = 0; i < 4; ++i) b.object("kitchencabinet", {7 + i, 0}, cupboard);
  b.object("stove", {11, 0}, {A::Receptacle, A::Heater, A::Toggleable, A::Blocking});
  b.object("dishwasher", {12, 0}, cupboard);
  b.object("fridge", {13, 0}, {A::Receptacle, A::Openable, A::Cooler, A::Blocking});
  b.object("fridge", {11, 4}, {A::Receptacle, A::Openable, A::Cooler, A::Blocking});
  b.object("microwave", {12, 4}, {A::Receptacle, A::Openable, A::Heater, A::Toggleable, A::Blocking});
  b.object("coffeetable", {2, 2}, {A::Receptacle, A::Blocking});
  b.object("cabinet", {0, 9}, cupboard);
}

TaskSpec mawah_task() {
  TaskSpec t;
  t.task_type = TaskType::MAWAH;
  t.roles = {{"alice", Role::Peer, "ma_wah"}, {"bob", Role::Peer, "ma_wah"}};
  t.goal = {in("wine", "coffeetable_0")};
  t.goal.front().description = "One wine needs to be on coffeetable_0.";
  t.instruction = "Find and put 1 wine onto the coffeetable_0.";
  t.placement_target = "coffeetable_0";
  t.step_limit = default_step_limit(TaskType::MAWAH);
  return t;
}

std::optional<Scenario> try_mawah(Builder& b) {
  mawah_house(b);
  std::vector<std::string> hiding;
  for (const auto& [id, o] : b.w.objects) {
    if (o.has(A::Openable)) hiding.push_back(id);
  }
  for (const char* cat : {"book", "book", "book", "juice", "pudding"}) b.inside(cat, b.choose(hiding), {A::Pickupable});
  b.inside("wine", b.choose(hiding), {A::Pickupable});
  TaskSpec t = mawah_task();
  return Scenario{std::move(b.w), std::move(t)};
}

bool solvable_by_expert(const Scenario& s) {
  TaskSpec probe = s.task;
  if (probe.task_type == TaskType::MATeach) {
    probe.task_type = TaskType::Household;
    probe.roles = {{"follower", Role::Solo, "household"}};
  }
  try {
    generate_trajectory(s.scene, probe);
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

std::string generated_scene_id(TaskType type, std::uint64_t seed) {
  auto name = text::lower(task_type_name(type));
  name = text::replace_all(name, "-", "_");
  return fmt::format("{}_{:06}", name, seed);
}

Scenario generate_task(TaskType type, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Builder b(rng);
    b.w.seed = seed;
    std::optional<Scenario> s;
    switch (type) {
      case TaskType::IG: s = try_ig(b); break;
      case TaskType::Rearrangement: s = try_rearrangement(b, rng()); break;
      case TaskType::IQA: s = try_iqa(b); break;
      case TaskType::Household: s = try_household(b); break;
      case TaskType::MATeach: s = try_ma_teach(b); break;
      case TaskType::MAWAH: s = try_mawah(b); break;
    }
    if (!s) continue;
    const auto id = generated_scene_id(type, seed);
    s->scene.scene_id = id;
    s->task.id = id;
    s->task.scene_ref = id;
    if (s->task.target_state) {
      s->task.target_state->scene_id = id + "_target";
      s->task.target_state_ref = id + "_target";
    }
    if (type != TaskType::MAWAH) s->task.step_limit = default_step_limit(type);
    if (type != TaskType::IQA && type != TaskType::MAWAH && check_goal(s->scene, s->task).success) continue;
    if (type != TaskType::MAWAH && !solvable_by_expert(*s)) continue;
    if (type != TaskType::MATeach && type != TaskType::MAWAH) {
      const auto len = static_cast<int>(generate_trajectory(s->scene, s->task).size());
      s->task.step_limit = std::max(s->task.step_limit, 2 * len);
    }
    validate_world(s->scene);
    validate_task(s->task);
    return std::move(*s);
  }
  throw Error(ErrorCode::InvalidTask, fmt::format("no valid {} task for seed {}", task_type_name(type), seed));
}

Scenario mawah_transcript_scenario() {
  std::mt19937_64 rng(0);
  Builder b(rng);
  mawah_house(b);
  b.inside("book", "kitchencabinet_2", {A::Pickupable}, "book_1");
  b.inside("book", "kitchencabinet_5", {A::Pickupable}, "book_2");
  b.inside("wine", "fridge_0", {A::Pickupable});
  b.inside("pudding", "coffeetable_0", {A::Pickupable});
  b.inside("juice", "coffeetable_0", {A::Pickupable});
  b.inside("juice", "coffeetable_0", {A::Pickupable});
  b.inside("book", "cabinet_0", {A::Pickupable}, "book_3");
  b.w.scene_id = "ma_wah_transcript";
  TaskSpec t = mawah_task();
  t.id = "ma_wah_transcript";
  t.scene_ref = "ma_wah_transcript";
  validate_world(b.w);
  return Scenario{std::move(b.w), std::move(t)};
}

}  // namespace langworld
