#include "langworld/world.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "langworld/error.hpp"
#include "langworld/text.hpp"

namespace langworld {

namespace {

constexpr std::array<std::string_view, 9> kAffordanceNames = {
    "pickupable", "openable", "toggleable", "sliceable", "receptacle", "heater", "cooler", "cleaner", "blocking",
};

constexpr std::array<std::string_view, 5> kRoomNames = {"livingroom", "kitchen", "bedroom", "bathroom", "generic"};

constexpr std::array<std::string_view, 7> kDiffNames = {
    "moved", "openness", "toggled", "sliced", "temperature", "dirty", "held",
};

std::string_view bool_text(bool b) { return b ? "true" : "false"; }

void sync_contents(WorldState& world, const ObjectEntity& parent) {
  for (const auto& child_id : parent.contents) {
    auto* child = world.find_object(child_id);
    if (!child) continue;
    child->cell = parent.cell;
    sync_contents(world, *child);
  }
}

void erase_value(std::vector<std::string>& v, const std::string& value) {
  v.erase(std::remove(v.begin(), v.end(), value), v.end());
}

ObjectEntity& require_object(WorldState& world, const std::string& id) {
  auto* obj = world.find_object(id);
  if (!obj) throw Error(ErrorCode::ConsistencyError, "unknown object " + id);
  return *obj;
}

}  // namespace

std::string_view affordance_name(Affordance a) { return kAffordanceNames[static_cast<std::size_t>(a)]; }

std::optional<Affordance> parse_affordance(std::string_view name) {
  const auto n = text::lower(text::trim(name));
  for (std::size_t i = 0; i < kAffordanceNames.size(); ++i) {
    if (kAffordanceNames[i] == n) return static_cast<Affordance>(i);
  }
  return std::nullopt;
}

std::vector<Affordance> Affordances::list() const {
  std::vector<Affordance> out;
  for (std::size_t i = 0; i < kAffordanceNames.size(); ++i) {
    const auto a = static_cast<Affordance>(i);
    if (has(a)) out.push_back(a);
  }
  return out;
}

std::string_view temperature_name(Temperature t) {
  switch (t) {
    case Temperature::Room: return "room";
    case Temperature::Hot: return "hot";
    case Temperature::Cold: return "cold";
  }
  return "room";
}

std::optional<Temperature> parse_temperature(std::string_view name) {
  const auto n = text::lower(text::trim(name));
  if (n == "room") return Temperature::Room;
  if (n == "hot") return Temperature::Hot;
  if (n == "cold") return Temperature::Cold;
  return std::nullopt;
}

std::string ObjectEntity::label() const { return color ? *color + " " + category : id; }

double AgentConfig::half_angle_degrees() const {
  if (view_shape.half_angle_degrees) return *view_shape.half_angle_degrees;
  if (focal_length) return std::atan(1.0 / (2.0 * *focal_length)) * 180.0 / std::numbers::pi;
  return 60.0;
}

std::string_view room_category_name(RoomCategory c) { return kRoomNames[static_cast<std::size_t>(c)]; }

std::optional<RoomCategory> parse_room_category(std::string_view name) {
  const auto n = text::lower(text::trim(name));
  for (std::size_t i = 0; i < kRoomNames.size(); ++i) {
    if (kRoomNames[i] == n) return static_cast<RoomCategory>(i);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// WorldState

const ObjectEntity* WorldState::find_object(std::string_view id) const {
  auto it = objects.find(id);
  return it == objects.end() ? nullptr : &it->second;
}

ObjectEntity* WorldState::find_object(std::string_view id) {
  auto it = objects.find(id);
  return it == objects.end() ? nullptr : &it->second;
}

const AgentBody* WorldState::find_agent(std::string_view id) const {
  auto it = agents.find(id);
  return it == agents.end() ? nullptr : &it->second;
}

AgentBody* WorldState::find_agent(std::string_view id) {
  auto it = agents.find(id);
  return it == agents.end() ? nullptr : &it->second;
}

const AgentBody& WorldState::agent(std::string_view id) const {
  if (const auto* a = find_agent(id)) return *a;
  throw Error(ErrorCode::UnknownAgent, std::string(id));
}

AgentBody& WorldState::agent(std::string_view id) {
  if (auto* a = find_agent(id)) return *a;
  throw Error(ErrorCode::UnknownAgent, std::string(id));
}

const Room* WorldState::room_at(Cell c) const {
  for (const auto& r : rooms) {
    if (r.bounds.contains(c)) return &r;
  }
  return nullptr;
}

const Room* WorldState::find_room(std::string_view id_or_category) const {
  for (const auto& r : rooms) {
    if (r.id == id_or_category) return &r;
  }
  const auto cat = parse_room_category(id_or_category);
  if (!cat) return nullptr;
  for (const auto& r : rooms) {
    if (r.category == *cat) return &r;
  }
  return nullptr;
}

bool WorldState::inside_rooms(Cell c) const { return room_at(c) != nullptr; }

Rect WorldState::extent() const {
  if (rooms.empty()) return {};
  Rect out = rooms.front().bounds;
  for (const auto& r : rooms) {
    out.x0 = std::min(out.x0, r.bounds.x0);
    out.y0 = std::min(out.y0, r.bounds.y0);
    out.x1 = std::max(out.x1, r.bounds.x1);
    out.y1 = std::max(out.y1, r.bounds.y1);
  }
  return out;
}

bool WorldState::has_wall(Cell a, Cell b) const {
  const auto e = make_edge(a, b);
  return e && walls.count(*e) != 0;
}

const AgentBody* WorldState::agent_at(Cell c) const {
  for (const auto& [id, a] : agents) {
    if (a.pose.cell == c) return &a;
  }
  return nullptr;
}

bool WorldState::concealed(const ObjectEntity& obj) const {
  const ObjectEntity* cur = &obj;
  // Depth guard: the loader rejects cycles, this only protects against hand-built worlds.
  for (std::size_t depth = 0; cur->container && depth <= objects.size(); ++depth) {
    const auto* parent = find_object(*cur->container);
    if (!parent) return false;
    if (parent->has(Affordance::Openable) && !parent->state.open) return true;
    cur = parent;
  }
  return false;
}

const ObjectEntity& WorldState::outermost(const ObjectEntity& obj) const {
  const ObjectEntity* cur = &obj;
  for (std::size_t depth = 0; cur->container && depth <= objects.size(); ++depth) {
    const auto* parent = find_object(*cur->container);
    if (!parent) break;
    cur = parent;
  }
  return *cur;
}

std::string WorldState::room_display_name(const Room& room) const {
  const auto n = std::count_if(rooms.begin(), rooms.end(), [&](const Room& r) { return r.category == room.category; });
  if (n == 1 && room.category != RoomCategory::Generic) return std::string(room_category_name(room.category));
  return room.id;
}

// ---------------------------------------------------------------------------
// Occupancy

OccupancyGrid::OccupancyGrid(Rect extent)
    : extent_(extent),
      cells_(static_cast<std::size_t>(extent.width()) * static_cast<std::size_t>(extent.height()), CellState::Free),
      wall_mask_(cells_.size(), 0) {}

std::size_t OccupancyGrid::index(Cell c) const {
  return static_cast<std::size_t>(c.y - extent_.y0) * static_cast<std::size_t>(extent_.width()) +
         static_cast<std::size_t>(c.x - extent_.x0);
}

CellState OccupancyGrid::at(Cell c) const {
  if (!in_extent(c) || cells_.empty()) return CellState::Blocked;
  return cells_[index(c)];
}

void OccupancyGrid::set(Cell c, CellState s) {
  if (in_extent(c) && !cells_.empty()) cells_[index(c)] = s;
}

void OccupancyGrid::add_wall(Cell a, Cell b) {
  const auto ha = heading_between(a, b);
  if (!ha) return;
  if (in_extent(a)) wall_mask_[index(a)] |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(*ha));
  if (in_extent(b)) wall_mask_[index(b)] |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(opposite(*ha)));
}

bool OccupancyGrid::wall_between(Cell a, Cell b) const {
  const auto h = heading_between(a, b);
  if (!h) return false;
  if (in_extent(a)) return (wall_mask_[index(a)] >> static_cast<unsigned>(*h)) & 1u;
  if (in_extent(b)) return (wall_mask_[index(b)] >> static_cast<unsigned>(opposite(*h))) & 1u;
  return false;
}

bool OccupancyGrid::can_step(Cell from, Cell to) const {
  return manhattan(from, to) == 1 && is_free(to) && !wall_between(from, to);
}

OccupancyGrid occupancy_grid(const WorldState& world) {
  const Rect ext = world.extent();
  OccupancyGrid grid(ext);
  for (int y = ext.y0; y <= ext.y1; ++y) {
    for (int x = ext.x0; x <= ext.x1; ++x) {
      if (!world.inside_rooms({x, y})) grid.set({x, y}, CellState::Blocked);
    }
  }
  for (const auto& [id, obj] : world.objects) {
    if (obj.top_level() && obj.has(Affordance::Blocking)) grid.set(obj.cell, CellState::Blocked);
  }
  for (const auto& e : world.walls) grid.add_wall(e.a, e.b);
  return grid;
}

// ---------------------------------------------------------------------------
// State comparison

std::string_view diff_kind_name(DiffKind k) { return kDiffNames[static_cast<std::size_t>(k)]; }

std::optional<DiffKind> parse_diff_kind(std::string_view name) {
  const auto n = text::lower(text::trim(name));
  for (std::size_t i = 0; i < kDiffNames.size(); ++i) {
    if (kDiffNames[i] == n) return static_cast<DiffKind>(i);
  }
  return std::nullopt;
}

std::set<std::string> StatusDiff::object_ids() const {
  std::set<std::string> out;
  for (const auto& e : entries) out.insert(e.object_id);
  return out;
}

const DiffEntry* StatusDiff::find(std::string_view object_id, DiffKind kind) const {
  for (const auto& e : entries) {
    if (e.object_id == object_id && e.kind == kind) return &e;
  }
  return nullptr;
}

std::string placement_value(const ObjectEntity& obj) {
  if (obj.holder) return "held";
  if (obj.container) return "in:" + *obj.container;
  return "cell:" + std::to_string(obj.cell.x) + "," + std::to_string(obj.cell.y);
}

StatusDiff compare_status(const WorldState& start, const WorldState& target) {
  if (start.objects.size() != target.objects.size()) {
    throw Error(ErrorCode::IdMismatch, "object id sets differ");
  }
  StatusDiff diff;
  auto add = [&](const std::string& id, DiffKind kind, std::string a, std::string b) {
    if (a != b) diff.entries.push_back({id, kind, std::move(a), std::move(b)});
  };
  for (const auto& [id, a] : start.objects) {
    const auto* b = target.find_object(id);
    if (!b) throw Error(ErrorCode::IdMismatch, "object " + id + " missing from target");
    if (!a.holder && !b->holder) add(id, DiffKind::Moved, placement_value(a), placement_value(*b));
    add(id, DiffKind::Openness, std::string(bool_text(a.state.open)), std::string(bool_text(b->state.open)));
    add(id, DiffKind::Toggled, std::string(bool_text(a.state.toggled)), std::string(bool_text(b->state.toggled)));
    add(id, DiffKind::Sliced, std::string(bool_text(a.state.sliced)), std::string(bool_text(b->state.sliced)));
    add(id, DiffKind::Temperature, std::string(temperature_name(a.state.temperature)),
        std::string(temperature_name(b->state.temperature)));
    add(id, DiffKind::Dirty, std::string(bool_text(a.state.dirty)), std::string(bool_text(b->state.dirty)));
    add(id, DiffKind::Held, a.holder.value_or("none"), b->holder.value_or("none"));
  }
  return diff;
}

// ---------------------------------------------------------------------------
// Mutation primitives

void detach_object(WorldState& world, const std::string& object_id) {
  auto& obj = require_object(world, object_id);
  if (obj.container) {
    if (auto* parent = world.find_object(*obj.container)) erase_value(parent->contents, object_id);
    obj.container.reset();
  }
  if (obj.holder) {
    if (auto* holder = world.find_agent(*obj.holder)) erase_value(holder->inventory, object_id);
    obj.holder.reset();
  }
}

void place_on_floor(WorldState& world, const std::string& object_id, Cell cell) {
  detach_object(world, object_id);
  auto& obj = require_object(world, object_id);
  obj.cell = cell;
  sync_contents(world, obj);
}

void insert_into(WorldState& world, const std::string& object_id, const std::string& receptacle_id) {
  detach_object(world, object_id);
  auto& recep = require_object(world, receptacle_id);
  auto& obj = require_object(world, object_id);
  recep.contents.push_back(object_id);
  obj.container = receptacle_id;
  obj.cell = recep.cell;
  sync_contents(world, obj);
}

void give_to_agent(WorldState& world, const std::string& object_id, const std::string& agent_id) {
  detach_object(world, object_id);
  auto& agent = world.agent(agent_id);
  auto& obj = require_object(world, object_id);
  agent.inventory.push_back(object_id);
  obj.holder = agent_id;
  obj.cell = agent.pose.cell;
  sync_contents(world, obj);
}

void move_agent(WorldState& world, const std::string& agent_id, Cell cell) {
  auto& agent = world.agent(agent_id);
  agent.pose.cell = cell;
  for (const auto& held : agent.inventory) {
    if (auto* obj = world.find_object(held)) {
      obj->cell = cell;
      sync_contents(world, *obj);
    }
  }
}

}  // namespace langworld
