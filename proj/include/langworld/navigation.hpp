#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "langworld/geometry.hpp"
#include "langworld/world.hpp"

namespace langworld {

enum class NavAction : std::uint8_t { MoveAhead, TurnLeft, TurnRight };

std::string_view nav_action_name(NavAction a);
GridPose apply_nav(GridPose pose, NavAction a);

// Shortest action sequence over (cell, heading), all actions cost 1.
// Without `face` the path ends on goal_cell with any heading; with it the final heading must match.
// Throws NoPath.
std::vector<NavAction> astar_actions(const OccupancyGrid& grid, GridPose start, Cell goal_cell,
                                     std::optional<Heading> face = std::nullopt);

// Ends on a free 4-neighbour of `target`, facing it, with no wall in between. `target` itself
// may be blocked. Throws NoPath.
std::vector<NavAction> approach_actions(const OccupancyGrid& grid, GridPose start, Cell target);

// True when the pose is already on a valid approach cell of `target`.
bool facing_adjacent(const OccupancyGrid& grid, GridPose pose, Cell target);

// Occupancy as seen by one agent: other agents' cells are blocked.
OccupancyGrid navigation_grid(const WorldState& world, std::string_view agent_id);

}  // namespace langworld
