#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "langworld/feedback.hpp"
#include "langworld/world.hpp"

namespace langworld {

enum class Direction : std::uint8_t { Front, FrontLeft, FrontRight, Left, Right, RearLeft, RearRight, Rear };

// "front", "front-left", ...
std::string_view direction_name(Direction d);
std::optional<Direction> parse_direction(std::string_view name);
// Phrase used when localizing an object relative to an agent: "in front and left of", "at the left rear of".
std::string_view direction_phrase(Direction d);

// Left-positive bearing of `point` as seen from `pose`, in degrees within (-180, 180].
double bearing_degrees(const GridPose& pose, Cell point);
// Buckets of 45 degrees centred on front; boundaries go to the more frontal bucket.
Direction direction_for_bearing(double degrees);
// Throws SamePoint when point is the observer cell.
Direction relative_direction(const GridPose& pose, Cell point);

// "north", "northeast", ..., or "center". Throws OutOfRoom.
std::string compass_octant(const Rect& bounds, Cell point);

struct VisibleItem {
  std::string object_id;
  Direction direction = Direction::Front;
  double distance = 0;
  bool contents_visible = false;

  bool operator==(const VisibleItem&) const = default;
};

struct VisibleSet {
  std::vector<VisibleItem> items;

  bool contains(std::string_view id) const { return find(id) != nullptr; }
  const VisibleItem* find(std::string_view id) const;
  std::vector<std::string> ids() const;

  bool operator==(const VisibleSet&) const = default;
};

// Supercover visibility test between two cell centres. Walls crossed or touched at a
// corner block, as does any blocking top-level object on an intermediate cell.
bool line_of_sight(const WorldState& world, const OccupancyGrid& grid, Cell from, Cell to);

// Cells the agent can currently see (its own cell excluded).
std::set<Cell> visible_cells(const WorldState& world, const AgentBody& agent);
VisibleSet field_of_view(const WorldState& world, std::string_view agent_id);
// Every unconcealed object in the agent's current room; used by room-level narration.
VisibleSet room_view(const WorldState& world, std::string_view agent_id);

struct FoundRecord {
  std::string room;
  Cell cell;

  bool operator==(const FoundRecord&) const = default;
};

struct AgentSighting {
  std::string room;
  std::vector<std::string> holding;
  int step = 0;

  bool operator==(const AgentSighting&) const = default;
};

struct BeliefState {
  std::set<std::string> explored_rooms;
  std::set<std::string> checked_containers;
  std::map<std::string, FoundRecord> found_objects;
  std::map<std::string, AgentSighting> last_seen_agents;
  std::vector<std::string> placed_objects;
  // Receptacle that collects the task's objects, when the task has one.
  std::optional<std::string> placement_target;

  bool operator==(const BeliefState&) const = default;
};

// Starting belief: placed objects are read from the target receptacle.
BeliefState initial_belief(const WorldState& world, std::optional<std::string> placement_target);

enum class ObservationStyle : std::uint8_t { EgoGrid, EgoScene, RoomSummary };

std::string_view observation_style_name(ObservationStyle s);
std::optional<ObservationStyle> parse_observation_style(std::string_view name);

struct Observation {
  std::string agent_id;
  ObservationStyle style = ObservationStyle::EgoScene;
  std::string text;
  VisibleSet visible;
  int step = 0;

  bool operator==(const Observation&) const = default;
};

// Throws UnknownAgent, or MissingBelief for room_summary without a belief.
Observation render_observation(const WorldState& world, std::string_view agent_id, ObservationStyle style,
                               const BeliefState* belief = nullptr, int step = 0);

// "In the north of the room, there is a cabinet_2; a sink_1, in/on it you can see a dishsponge_0. ..."
std::string render_room_layout(const WorldState& world, const Room& room);

using BeliefEvent = std::variant<Observation, Feedback>;

BeliefState update_belief(BeliefState belief, const WorldState& world, std::string_view agent_id,
                          const BeliefEvent& event);

}  // namespace langworld
