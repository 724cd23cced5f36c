#include "langworld/perception.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "langworld/error.hpp"
#include "langworld/text.hpp"

namespace langworld {

namespace {

constexpr std::array<std::string_view, 8> kDirectionNames = {
    "front", "front-left", "front-right", "left", "right", "rear-left", "rear-right", "rear",
};

constexpr std::array<std::string_view, 8> kDirectionPhrases = {
    "in front of",   "in front and left of", "in front and right of", "on the left of",
    "on the right of", "at the left rear of",  "at the right rear of",  "behind",
};

constexpr double kAngleEps = 1e-9;

int dot(Cell a, Cell b) { return a.x * b.x + a.y * b.y; }

// Forward and rightward components of `point` relative to the pose.
std::pair<int, int> local_coords(const GridPose& pose, Cell point) {
  const Cell d = point - pose.cell;
  return {dot(d, forward_vector(pose.heading)), dot(d, right_vector(pose.heading))};
}

double distance_between(Cell a, Cell b) { return std::hypot(double(a.x - b.x), double(a.y - b.y)); }

bool has_blocker(const WorldState& world, const OccupancyGrid& grid, Cell c) {
  return !grid.is_free(c) && world.inside_rooms(c);
}

std::vector<std::string> natural_sorted(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end(), [](const std::string& a, const std::string& b) { return text::natural_less(a, b); });
  return ids;
}

std::vector<const ObjectEntity*> by_ordinal(const WorldState& world, const std::vector<std::string>& ids) {
  std::vector<const ObjectEntity*> out;
  for (const auto& id : ids) {
    if (const auto* o = world.find_object(id)) out.push_back(o);
  }
  std::stable_sort(out.begin(), out.end(), [](const ObjectEntity* a, const ObjectEntity* b) {
    if (a->ordinal != b->ordinal) return a->ordinal < b->ordinal;
    return a->id < b->id;
  });
  return out;
}

bool contents_visible(const ObjectEntity& obj) {
  return obj.has(Affordance::Receptacle) && (!obj.has(Affordance::Openable) || obj.state.open);
}

// Anchor cell of a visible-candidate object, or nothing when it is held (directly or via a held receptacle).
std::optional<Cell> anchor_cell(const WorldState& world, const ObjectEntity& obj) {
  if (obj.holder) return std::nullopt;
  const auto& top = world.outermost(obj);
  if (top.holder) return std::nullopt;
  return top.cell;
}

void sort_items(std::vector<VisibleItem>& items) {
  std::sort(items.begin(), items.end(), [](const VisibleItem& a, const VisibleItem& b) {
    if (a.direction != b.direction) return a.direction < b.direction;
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.object_id < b.object_id;
  });
}

VisibleItem make_item(const GridPose& pose, const ObjectEntity& obj, Cell anchor) {
  VisibleItem item;
  item.object_id = obj.id;
  item.distance = distance_between(pose.cell, anchor);
  item.direction = anchor == pose.cell ? Direction::Front : relative_direction(pose, anchor);
  item.contents_visible = contents_visible(obj);
  return item;
}

// --- ego_grid ---------------------------------------------------------------

std::string grid_label(const ObjectEntity& obj) { return "a " + obj.label(); }

std::string render_ego_grid(const WorldState& world, const AgentBody& agent, const VisibleSet& visible) {
  std::vector<std::string> front, left, right, behind;
  for (const auto& item : visible.items) {
    const auto& obj = world.objects.at(item.object_id);
    const auto anchor = *anchor_cell(world, obj);
    const auto [fwd, lat] = local_coords(agent.pose, anchor);
    auto label = grid_label(obj);
    if (lat < 0) left.push_back(std::move(label));
    else if (lat > 0) right.push_back(std::move(label));
    else if (fwd > 0) front.push_back(std::move(label));
    else behind.push_back(std::move(label));
  }
  // Sections keep the visible-set order (distance, then id).
  std::vector<std::string> parts;
  if (!front.empty()) parts.push_back("You can see " + text::join(front, ",") + " in front of you");
  if (!left.empty()) parts.push_back("You can see " + text::join(left, ",") + " on your left");
  if (!right.empty()) parts.push_back("You can see " + text::join(right, ",") + " on your right");
  if (!behind.empty()) parts.push_back("You can see " + text::join(behind, ",") + " behind you");
  std::string out = parts.empty() ? "You can see nothing ahead." : text::join(parts, "; ") + ".";

  const Cell ahead = agent.pose.cell + forward_vector(agent.pose.heading);
  std::vector<std::string> manipulable;
  for (const auto& item : visible.items) {
    const auto& obj = world.objects.at(item.object_id);
    if (obj.top_level() && obj.cell == ahead) manipulable.push_back(grid_label(obj));
  }
  if (!manipulable.empty()) out += "\nManipulable object: " + text::join(manipulable, ",") + ".";
  return out;
}

// --- ego_scene --------------------------------------------------------------

std::string scene_phrase(const WorldState& world, const ObjectEntity& obj, const VisibleSet& visible) {
  std::string out;
  if (obj.has(Affordance::Openable)) out = (obj.state.open ? "an opened " : "a closed ") + obj.id;
  else out = "a " + obj.id;
  if (!obj.has(Affordance::Receptacle) || !contents_visible(obj)) return out;
  std::vector<std::string> inner;
  for (const auto& child_id : obj.contents) {
    if (!visible.contains(child_id)) continue;
    inner.push_back(scene_phrase(world, world.objects.at(child_id), visible));
  }
  if (!inner.empty()) {
    out += ", there is " + text::join(inner, ", ") + ", on it";
  } else if (obj.has(Affordance::Openable)) {
    out += ", it's empty";
  }
  return out;
}

std::string render_ego_scene(const WorldState& world, const VisibleSet& visible) {
  std::array<std::vector<std::string>, 4> sections;  // front, left, right, behind
  for (const auto& item : visible.items) {
    const auto& obj = world.objects.at(item.object_id);
    // Contents are inlined under their receptacle.
    if (obj.container && visible.contains(*obj.container)) continue;
    std::size_t s = 0;
    switch (item.direction) {
      case Direction::Front: s = 0; break;
      case Direction::FrontLeft:
      case Direction::Left: s = 1; break;
      case Direction::FrontRight:
      case Direction::Right: s = 2; break;
      case Direction::RearLeft:
      case Direction::RearRight:
      case Direction::Rear: s = 3; break;
    }
    sections[s].push_back(obj.id);
  }
  static constexpr std::array<std::string_view, 4> kHeads = {
      "In front of you, You see ", "On your left, you see ", "On your right, you see ", "Behind you, you see "};
  std::vector<std::string> parts;
  for (std::size_t s = 0; s < sections.size(); ++s) {
    if (sections[s].empty()) continue;
    std::vector<std::string> phrases;
    for (const auto& id : natural_sorted(sections[s])) phrases.push_back(scene_phrase(world, world.objects.at(id), visible));
    parts.push_back(std::string(kHeads[s]) + text::join(phrases, "; ") + ".");
  }
  if (parts.empty()) {
    return "You see nothing. You can try to take action like move_ahead, turn_left or turn_right to explore the room.";
  }
  return text::join(parts, " ");
}

// --- room_summary -----------------------------------------------------------

std::string join_ids(const std::vector<const ObjectEntity*>& objs) {
  std::vector<std::string> ids;
  for (const auto* o : objs) ids.push_back(o->id);
  return text::join(ids, ", ");
}

std::string holding_text(const std::vector<std::string>& inventory) {
  return inventory.empty() ? "nothing" : text::join(inventory, ", ");
}

// What the belief knows about a room: "coffeetable_0", "unchecked containers a, b", or empty.
std::string room_findings(const WorldState& world, const BeliefState& belief, const Room& room) {
  std::vector<std::string> surfaces_ids;
  std::vector<std::string> unchecked_ids;
  for (const auto& [id, rec] : belief.found_objects) {
    if (rec.room != room.id) continue;
    const auto* obj = world.find_object(id);
    if (!obj || !obj->has(Affordance::Receptacle)) continue;
    if (obj->has(Affordance::Openable)) {
      if (!belief.checked_containers.count(id)) unchecked_ids.push_back(id);
    } else if (obj->top_level()) {
      surfaces_ids.push_back(id);
    }
  }
  const auto surfaces = by_ordinal(world, surfaces_ids);
  const auto unchecked = by_ordinal(world, unchecked_ids);
  std::string out = join_ids(surfaces);
  if (!unchecked.empty()) {
    if (!out.empty()) out += ", and ";
    out += unchecked.size() == 1 ? "an unchecked container " + unchecked.front()->id
                                 : "unchecked containers " + join_ids(unchecked);
  }
  return out;
}

std::string render_room_summary(const WorldState& world, const AgentBody& agent, const BeliefState& belief) {
  std::vector<std::string> parts;
  if (belief.placement_target) {
    if (belief.placed_objects.empty()) {
      parts.push_back("You have not put anything onto the " + *belief.placement_target + " yet.");
    } else {
      parts.push_back("You have already found and put " + text::join(belief.placed_objects, ", ") + " onto the " +
                      *belief.placement_target + ".");
    }
  }
  parts.push_back("You are holding " + holding_text(agent.inventory) + ".");

  const Room* here = world.room_at(agent.pose.cell);
  if (here) {
    auto found = room_findings(world, belief, *here);
    parts.push_back("You are in the " + world.room_display_name(*here) + ", where you found " +
                    (found.empty() ? std::string("nothing") : found) + ".");
  }

  for (const auto& [id, other] : world.agents) {
    if (id == agent.id) continue;
    const Room* there = world.room_at(other.pose.cell);
    if (here && there == here) {
      parts.push_back("You also see " + other.display_name() + " here in the " + world.room_display_name(*here) +
                      ", they are holding " + holding_text(other.inventory) + ".");
    } else if (auto it = belief.last_seen_agents.find(id); it != belief.last_seen_agents.end()) {
      const Room* seen = world.find_room(it->second.room);
      const std::string room_name = seen ? world.room_display_name(*seen) : it->second.room;
      parts.push_back("Last time you saw " + other.display_name() + " was in the " + room_name +
                      ", they were holding " + holding_text(it->second.holding) + ".");
    } else {
      parts.push_back("You don't know where " + other.display_name() + " is.");
    }
  }

  for (const auto& room : world.rooms) {
    if (here && room.id == here->id) continue;
    const auto name = world.room_display_name(room);
    if (!belief.explored_rooms.count(room.id)) {
      parts.push_back("The " + name + " is unexplored.");
      continue;
    }
    const auto found = room_findings(world, belief, room);
    parts.push_back(found.empty() ? "You found nothing in the " + name + "."
                                  : "You found " + found + " in the " + name + ".");
  }
  return text::join(parts, " ");
}

void mark_found(BeliefState& belief, const WorldState& world, const std::string& id) {
  const auto* obj = world.find_object(id);
  if (!obj) return;
  const auto anchor = anchor_cell(world, *obj);
  if (!anchor) return;
  const Room* room = world.room_at(*anchor);
  belief.found_objects[id] = {room ? room->id : std::string(), *anchor};
}

void append_placed(BeliefState& belief, const WorldState& world) {
  if (!belief.placement_target) return;
  const auto* target = world.find_object(*belief.placement_target);
  if (!target) return;
  for (const auto& id : target->contents) {
    if (std::find(belief.placed_objects.begin(), belief.placed_objects.end(), id) == belief.placed_objects.end()) {
      belief.placed_objects.push_back(id);
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view direction_name(Direction d) { return kDirectionNames[static_cast<std::size_t>(d)]; }

std::optional<Direction> parse_direction(std::string_view name) {
  for (std::size_t i = 0; i < kDirectionNames.size(); ++i) {
    if (kDirectionNames[i] == name) return static_cast<Direction>(i);
  }
  return std::nullopt;
}

std::string_view direction_phrase(Direction d) { return kDirectionPhrases[static_cast<std::size_t>(d)]; }

double bearing_degrees(const GridPose& pose, Cell point) {
  const auto [fwd, lat] = local_coords(pose, point);
  return std::atan2(-double(lat), double(fwd)) * 180.0 / std::numbers::pi;
}

Direction direction_for_bearing(double degrees) {
  const double a = std::fabs(degrees);
  const bool left = degrees > 0;
  if (a <= 22.5) return Direction::Front;
  if (a <= 67.5) return left ? Direction::FrontLeft : Direction::FrontRight;
  if (a <= 112.5) return left ? Direction::Left : Direction::Right;
  if (a <= 157.5) return left ? Direction::RearLeft : Direction::RearRight;
  return Direction::Rear;
}

Direction relative_direction(const GridPose& pose, Cell point) {
  if (point == pose.cell) throw Error(ErrorCode::SamePoint, "point coincides with observer at " + to_string(point));
  return direction_for_bearing(bearing_degrees(pose, point));
}

std::string compass_octant(const Rect& bounds, Cell point) {
  if (!bounds.contains(point)) throw Error(ErrorCode::OutOfRoom, to_string(point) + " is outside the room");
  const int col = (point.x - bounds.x0) * 3 / bounds.width();
  const int row = (point.y - bounds.y0) * 3 / bounds.height();
  static constexpr std::array<std::array<std::string_view, 3>, 3> kNames = {{
      {"southwest", "south", "southeast"},
      {"west", "center", "east"},
      {"northwest", "north", "northeast"},
  }};
  return std::string(kNames[row][col]);
}

const VisibleItem* VisibleSet::find(std::string_view id) const {
  for (const auto& item : items) {
    if (item.object_id == id) return &item;
  }
  return nullptr;
}

std::vector<std::string> VisibleSet::ids() const {
  std::vector<std::string> out;
  for (const auto& item : items) out.push_back(item.object_id);
  return out;
}

bool line_of_sight(const WorldState& world, const OccupancyGrid& grid, Cell from, Cell to) {
  const int nx = std::abs(to.x - from.x);
  const int ny = std::abs(to.y - from.y);
  const int sx = to.x > from.x ? 1 : -1;
  const int sy = to.y > from.y ? 1 : -1;
  auto blocks_cell = [&](Cell c) { return c != from && c != to && has_blocker(world, grid, c); };

  Cell cur = from;
  int ix = 0;
  int iy = 0;
  while (ix < nx || iy < ny) {
    // Sign of the crossing order between the next vertical and next horizontal grid line.
    const long long decision = static_cast<long long>(1 + 2 * ix) * ny - static_cast<long long>(1 + 2 * iy) * nx;
    if (decision == 0) {
      const Cell hx{cur.x + sx, cur.y};
      const Cell hy{cur.x, cur.y + sy};
      const Cell diag{cur.x + sx, cur.y + sy};
      if (grid.wall_between(cur, hx) || grid.wall_between(cur, hy) || grid.wall_between(hx, diag) ||
          grid.wall_between(hy, diag)) {
        return false;
      }
      if (blocks_cell(hx) || blocks_cell(hy) || blocks_cell(diag)) return false;
      cur = diag;
      ++ix;
      ++iy;
    } else if (decision < 0) {
      const Cell next{cur.x + sx, cur.y};
      if (grid.wall_between(cur, next) || blocks_cell(next)) return false;
      cur = next;
      ++ix;
    } else {
      const Cell next{cur.x, cur.y + sy};
      if (grid.wall_between(cur, next) || blocks_cell(next)) return false;
      cur = next;
      ++iy;
    }
  }
  return true;
}

std::set<Cell> visible_cells(const WorldState& world, const AgentBody& agent) {
  std::set<Cell> out;
  const Cell origin = agent.pose.cell;
  const auto& cfg = agent.config;
  if (cfg.oracle_vision) {
    for (const auto& room : world.rooms) {
      for (int y = room.bounds.y0; y <= room.bounds.y1; ++y) {
        for (int x = room.bounds.x0; x <= room.bounds.x1; ++x) {
          if (Cell{x, y} != origin) out.insert({x, y});
        }
      }
    }
    return out;
  }

  const auto grid = occupancy_grid(world);
  const int reach = static_cast<int>(std::floor(cfg.view_distance + kAngleEps));
  auto consider = [&](Cell c) {
    if (c == origin || !world.inside_rooms(c)) return;
    if (line_of_sight(world, grid, origin, c)) out.insert(c);
  };

  if (cfg.view_shape.kind == ViewShape::Kind::Rect) {
    const Cell f = forward_vector(agent.pose.heading);
    const Cell r = right_vector(agent.pose.heading);
    const int side = cfg.view_shape.side_steps;
    for (int depth = 1; depth <= reach; ++depth) {
      for (int lat = -side; lat <= side; ++lat) {
        consider({origin.x + depth * f.x + lat * r.x, origin.y + depth * f.y + lat * r.y});
      }
    }
    return out;
  }

  const double half = cfg.half_angle_degrees();
  for (int dy = -reach; dy <= reach; ++dy) {
    for (int dx = -reach; dx <= reach; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const Cell c{origin.x + dx, origin.y + dy};
      if (std::hypot(double(dx), double(dy)) > cfg.view_distance + kAngleEps) continue;
      if (std::fabs(bearing_degrees(agent.pose, c)) > half + kAngleEps) continue;
      consider(c);
    }
  }
  return out;
}

VisibleSet field_of_view(const WorldState& world, std::string_view agent_id) {
  const auto& agent = world.agent(agent_id);
  const auto cells = visible_cells(world, agent);
  VisibleSet vs;
  for (const auto& [id, obj] : world.objects) {
    const auto anchor = anchor_cell(world, obj);
    if (!anchor || !cells.count(*anchor) || world.concealed(obj)) continue;
    vs.items.push_back(make_item(agent.pose, obj, *anchor));
  }
  sort_items(vs.items);
  return vs;
}

VisibleSet room_view(const WorldState& world, std::string_view agent_id) {
  const auto& agent = world.agent(agent_id);
  VisibleSet vs;
  const Room* room = world.room_at(agent.pose.cell);
  if (!room) return vs;
  for (const auto& [id, obj] : world.objects) {
    const auto anchor = anchor_cell(world, obj);
    if (!anchor || !room->bounds.contains(*anchor) || world.concealed(obj)) continue;
    vs.items.push_back(make_item(agent.pose, obj, *anchor));
  }
  sort_items(vs.items);
  return vs;
}

BeliefState initial_belief(const WorldState& world, std::optional<std::string> placement_target) {
  BeliefState b;
  b.placement_target = std::move(placement_target);
  append_placed(b, world);
  return b;
}

std::string_view observation_style_name(ObservationStyle s) {
  switch (s) {
    case ObservationStyle::EgoGrid: return "ego_grid";
    case ObservationStyle::EgoScene: return "ego_scene";
    case ObservationStyle::RoomSummary: return "room_summary";
  }
  return "ego_scene";
}

std::optional<ObservationStyle> parse_observation_style(std::string_view name) {
  if (name == "ego_grid") return ObservationStyle::EgoGrid;
  if (name == "ego_scene") return ObservationStyle::EgoScene;
  if (name == "room_summary") return ObservationStyle::RoomSummary;
  return std::nullopt;
}

Observation render_observation(const WorldState& world, std::string_view agent_id, ObservationStyle style,
                               const BeliefState* belief, int step) {
  const auto& agent = world.agent(agent_id);
  Observation obs;
  obs.agent_id = agent.id;
  obs.style = style;
  obs.step = step;
  switch (style) {
    case ObservationStyle::EgoGrid:
      obs.visible = field_of_view(world, agent_id);
      obs.text = render_ego_grid(world, agent, obs.visible);
      break;
    case ObservationStyle::EgoScene:
      obs.visible = field_of_view(world, agent_id);
      obs.text = render_ego_scene(world, obs.visible);
      break;
    case ObservationStyle::RoomSummary: {
      if (!belief) throw Error(ErrorCode::MissingBelief, "room_summary needs a belief state");
      obs.visible = room_view(world, agent_id);
      const auto current = update_belief(*belief, world, agent_id, obs);
      obs.text = render_room_summary(world, agent, current);
      break;
    }
  }
  return obs;
}

std::string render_room_layout(const WorldState& world, const Room& room) {
  static constexpr std::array<std::string_view, 9> kOrder = {
      "north", "northeast", "east", "southeast", "south", "southwest", "west", "northwest", "center"};
  std::map<std::string, std::vector<std::string>> buckets;
  for (const auto& [id, obj] : world.objects) {
    if (!obj.top_level() || !room.bounds.contains(obj.cell)) continue;
    buckets[compass_octant(room.bounds, obj.cell)].push_back(id);
  }
  std::vector<std::string> parts;
  for (auto octant : kOrder) {
    auto it = buckets.find(std::string(octant));
    if (it == buckets.end()) continue;
    std::vector<std::string> phrases;
    for (const auto& id : natural_sorted(it->second)) {
      const auto& obj = world.objects.at(id);
      std::string p;
      if (obj.has(Affordance::Openable)) p = (obj.state.open ? "an opened " : "a closed ") + id;
      else p = "a " + id;
      if (!obj.contents.empty()) {
        std::vector<std::string> inner;
        for (const auto& c : obj.contents) inner.push_back("a " + c);
        p += ", in/on it you can see " + text::join(inner, ", ");
      }
      phrases.push_back(std::move(p));
    }
    const std::string where = octant == "center" ? "In the center of the room" : "In the " + std::string(octant) + " of the room";
    parts.push_back(where + ", there is " + text::join(phrases, "; ") + ".");
  }
  return text::join(parts, " ");
}

BeliefState update_belief(BeliefState belief, const WorldState& world, std::string_view agent_id,
                          const BeliefEvent& event) {
  const auto& agent = world.agent(agent_id);
  if (const auto* obs = std::get_if<Observation>(&event)) {
    for (const auto& item : obs->visible.items) {
      mark_found(belief, world, item.object_id);
      const auto& obj = world.objects.at(item.object_id);
      if (obj.has(Affordance::Openable) && obj.has(Affordance::Receptacle) && obj.state.open) {
        belief.checked_containers.insert(obj.id);
      }
    }
    if (obs->style == ObservationStyle::RoomSummary) {
      if (const Room* room = world.room_at(agent.pose.cell)) {
        belief.explored_rooms.insert(room->id);
        for (const auto& [id, other] : world.agents) {
          if (id == agent.id || world.room_at(other.pose.cell) != room) continue;
          belief.last_seen_agents[id] = {room->id, other.inventory, obs->step};
        }
      }
    }
    if (belief.placement_target && obs->visible.contains(*belief.placement_target)) append_placed(belief, world);
    return belief;
  }

  const auto& fb = std::get<Feedback>(event);
  if (fb.explored_room) belief.explored_rooms.insert(*fb.explored_room);
  if (fb.checked_container) {
    belief.checked_containers.insert(*fb.checked_container);
    mark_found(belief, world, *fb.checked_container);
  }
  for (const auto& id : fb.revealed) mark_found(belief, world, id);
  return belief;
}

}  // namespace langworld
