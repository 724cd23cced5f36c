#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "langworld/geometry.hpp"

namespace langworld {

enum class Affordance : std::uint8_t {
  Pickupable,
  Openable,
  Toggleable,
  Sliceable,
  Receptacle,
  Heater,
  Cooler,
  Cleaner,
  Blocking,
};

std::string_view affordance_name(Affordance a);
std::optional<Affordance> parse_affordance(std::string_view name);

class Affordances {
public:
  Affordances() = default;
  Affordances(std::initializer_list<Affordance> list) {
    for (Affordance a : list) set(a);
  }

  bool has(Affordance a) const { return (bits_ & bit(a)) != 0; }
  void set(Affordance a) { bits_ |= bit(a); }
  void clear(Affordance a) { bits_ &= static_cast<std::uint16_t>(~bit(a)); }
  std::vector<Affordance> list() const;

  bool operator==(const Affordances&) const = default;

private:
  static std::uint16_t bit(Affordance a) { return static_cast<std::uint16_t>(1u << static_cast<unsigned>(a)); }
  std::uint16_t bits_ = 0;
};

enum class Temperature : std::uint8_t { Room, Hot, Cold };

std::string_view temperature_name(Temperature t);
std::optional<Temperature> parse_temperature(std::string_view name);

struct ObjectState {
  bool open = false;
  bool toggled = false;
  bool sliced = false;
  bool dirty = false;
  Temperature temperature = Temperature::Room;

  bool operator==(const ObjectState&) const = default;
};

struct ObjectEntity {
  std::string id;
  std::string category;
  // Display color, used by grid-style worlds where objects are referred to as "red key".
  std::optional<std::string> color;
  Cell cell;
  Affordances affordances;
  ObjectState state;
  std::vector<std::string> contents;
  // Receptacle that directly contains this object.
  std::optional<std::string> container;
  // Agent currently holding this object.
  std::optional<std::string> holder;
  // Position in the scene document; narrations list objects in this order.
  int ordinal = 0;

  bool has(Affordance a) const { return affordances.has(a); }
  bool top_level() const { return !container && !holder; }
  // "red key" when a color is set, the id otherwise.
  std::string label() const;

  bool operator==(const ObjectEntity&) const = default;
};

struct ViewShape {
  enum class Kind : std::uint8_t { Cone, Rect };
  Kind kind = Kind::Cone;
  // Cone only. When unset the half angle is derived from the focal length, then defaults to 60.
  std::optional<double> half_angle_degrees;
  // Rect only: lateral reach on each side.
  int side_steps = 3;

  bool operator==(const ViewShape&) const = default;
};

struct AgentConfig {
  double view_distance = 8.0;
  ViewShape view_shape;
  std::optional<double> focal_length;
  double manipulate_distance = 1.0;
  int inventory_capacity = 1;
  bool oracle_vision = false;

  double half_angle_degrees() const;

  bool operator==(const AgentConfig&) const = default;
};

struct AgentBody {
  std::string id;
  std::optional<std::string> name;
  GridPose pose;
  std::vector<std::string> inventory;
  AgentConfig config;

  const std::string& display_name() const { return name ? *name : id; }

  bool operator==(const AgentBody&) const = default;
};

enum class RoomCategory : std::uint8_t { LivingRoom, Kitchen, Bedroom, Bathroom, Generic };

std::string_view room_category_name(RoomCategory c);
std::optional<RoomCategory> parse_room_category(std::string_view name);

struct Room {
  std::string id;
  RoomCategory category = RoomCategory::Generic;
  Rect bounds;

  bool operator==(const Room&) const = default;
};

// How movement feedback reports distance: "1 step" or "'0.25' meter(s)".
enum class FeedbackUnits : std::uint8_t { Steps, Meters };

struct WorldState {
  std::string scene_id;
  std::vector<Room> rooms;
  std::set<Edge> walls;
  std::map<std::string, ObjectEntity, std::less<>> objects;
  std::map<std::string, AgentBody, std::less<>> agents;
  double step_size_meters = 1.0;
  FeedbackUnits feedback_units = FeedbackUnits::Steps;
  std::uint64_t seed = 0;

  const ObjectEntity* find_object(std::string_view id) const;
  ObjectEntity* find_object(std::string_view id);
  const AgentBody* find_agent(std::string_view id) const;
  AgentBody* find_agent(std::string_view id);
  // Throws Error(UnknownAgent).
  const AgentBody& agent(std::string_view id) const;
  AgentBody& agent(std::string_view id);

  const Room* room_at(Cell c) const;
  const Room* find_room(std::string_view id_or_category) const;
  bool inside_rooms(Cell c) const;
  // Bounding box of all rooms.
  Rect extent() const;
  bool has_wall(Cell a, Cell b) const;
  const AgentBody* agent_at(Cell c) const;

  // True when some ancestor receptacle is openable and closed.
  bool concealed(const ObjectEntity& obj) const;
  // Outermost receptacle (or the object itself) of a contained object.
  const ObjectEntity& outermost(const ObjectEntity& obj) const;
  // Human readable room name: the category when unique in the scene, else the room id.
  std::string room_display_name(const Room& room) const;

  bool operator==(const WorldState&) const = default;
};

// ---------------------------------------------------------------------------
// Occupancy

enum class CellState : std::uint8_t { Free, Blocked };

class OccupancyGrid {
public:
  OccupancyGrid() = default;
  explicit OccupancyGrid(Rect extent);

  const Rect& extent() const { return extent_; }
  bool in_extent(Cell c) const { return extent_.contains(c); }
  // Cells outside the extent read as blocked.
  CellState at(Cell c) const;
  bool is_free(Cell c) const { return at(c) == CellState::Free; }
  void set(Cell c, CellState s);

  void add_wall(Cell a, Cell b);
  bool wall_between(Cell a, Cell b) const;
  // One orthogonal step from `from` to `to` that enters a free cell without crossing a wall.
  bool can_step(Cell from, Cell to) const;

  bool operator==(const OccupancyGrid&) const = default;

private:
  std::size_t index(Cell c) const;

  Rect extent_;
  std::vector<CellState> cells_;
  // Per cell: bit i set when the edge towards Heading(i) is a wall.
  std::vector<std::uint8_t> wall_mask_;
};

// Blocked: outside every room, or holding a top-level `blocking` object.
OccupancyGrid occupancy_grid(const WorldState& world);

// ---------------------------------------------------------------------------
// State comparison

enum class DiffKind : std::uint8_t { Moved, Openness, Toggled, Sliced, Temperature, Dirty, Held };

std::string_view diff_kind_name(DiffKind k);
std::optional<DiffKind> parse_diff_kind(std::string_view name);

struct DiffEntry {
  std::string object_id;
  DiffKind kind = DiffKind::Moved;
  std::string start_value;
  std::string target_value;

  bool operator==(const DiffEntry&) const = default;
};

struct StatusDiff {
  std::vector<DiffEntry> entries;

  bool empty() const { return entries.empty(); }
  std::set<std::string> object_ids() const;
  const DiffEntry* find(std::string_view object_id, DiffKind kind) const;
};

// Placement of an object as used by `Moved` diff values: "in:<receptacle>" or "cell:x,y".
// Held objects report "held".
std::string placement_value(const ObjectEntity& obj);

// Entries are ordered by (object id, kind). Throws Error(IdMismatch) when id sets differ.
StatusDiff compare_status(const WorldState& start, const WorldState& target);

// ---------------------------------------------------------------------------
// Mutation primitives. They keep contents/holder/cell bookkeeping consistent and
// perform no feasibility checks.

void detach_object(WorldState& world, const std::string& object_id);
void place_on_floor(WorldState& world, const std::string& object_id, Cell cell);
void insert_into(WorldState& world, const std::string& object_id, const std::string& receptacle_id);
void give_to_agent(WorldState& world, const std::string& object_id, const std::string& agent_id);
void move_agent(WorldState& world, const std::string& agent_id, Cell cell);

}  // namespace langworld
