#include "langworld/navigation.hpp"

#include <algorithm>
#include <functional>
#include <queue>

#include "langworld/error.hpp"

namespace langworld {

namespace {

struct Node {
  int f;
  long seq;
  int state;

  bool operator>(const Node& o) const { return f != o.f ? f > o.f : seq > o.seq; }
};

constexpr NavAction kExpansion[] = {NavAction::MoveAhead, NavAction::TurnLeft, NavAction::TurnRight};

std::vector<NavAction> search(const OccupancyGrid& grid, GridPose start,
                              const std::function<bool(GridPose)>& is_goal,
                              const std::function<int(Cell)>& heuristic) {
  const Rect ext = grid.extent();
  const int w = ext.width();
  const int h = ext.height();
  if (!ext.contains(start.cell)) throw Error(ErrorCode::NoPath, "start " + to_string(start.cell) + " outside the map");
  const int n = w * h * 4;
  auto encode = [&](GridPose p) { return ((p.cell.y - ext.y0) * w + (p.cell.x - ext.x0)) * 4 + static_cast<int>(p.heading); };
  auto decode = [&](int s) {
    const int c = s / 4;
    return GridPose{{ext.x0 + c % w, ext.y0 + c / w}, static_cast<Heading>(s % 4)};
  };

  std::vector<int> g(n, -1);
  std::vector<int> parent(n, -1);
  std::vector<std::int8_t> via(n, -1);
  std::vector<bool> closed(n, false);
  std::priority_queue<Node, std::vector<Node>, std::greater<>> open;
  long seq = 0;

  const int s0 = encode(start);
  g[s0] = 0;
  open.push({heuristic(start.cell), seq++, s0});
  while (!open.empty()) {
    const Node cur = open.top();
    open.pop();
    if (closed[cur.state]) continue;
    closed[cur.state] = true;
    const GridPose pose = decode(cur.state);
    if (is_goal(pose)) {
      std::vector<NavAction> out;
      for (int s = cur.state; s != s0; s = parent[s]) out.push_back(static_cast<NavAction>(via[s]));
      std::reverse(out.begin(), out.end());
      return out;
    }
    for (NavAction a : kExpansion) {
      const GridPose next = apply_nav(pose, a);
      if (a == NavAction::MoveAhead && !grid.can_step(pose.cell, next.cell)) continue;
      const int ns = encode(next);
      const int ng = g[cur.state] + 1;
      if (closed[ns] || (g[ns] >= 0 && g[ns] <= ng)) continue;
      g[ns] = ng;
      parent[ns] = cur.state;
      via[ns] = static_cast<std::int8_t>(a);
      open.push({ng + heuristic(next.cell), seq++, ns});
    }
  }
  throw Error(ErrorCode::NoPath, "no path from " + to_string(start.cell));
}

}  // namespace

std::string_view nav_action_name(NavAction a) {
  switch (a) {
    case NavAction::MoveAhead: return "move_ahead";
    case NavAction::TurnLeft: return "turn_left";
    case NavAction::TurnRight: return "turn_right";
  }
  return "move_ahead";
}

GridPose apply_nav(GridPose pose, NavAction a) {
  switch (a) {
    case NavAction::MoveAhead: return {pose.cell + forward_vector(pose.heading), pose.heading};
    case NavAction::TurnLeft: return turn_left(pose);
    case NavAction::TurnRight: return turn_right(pose);
  }
  return pose;
}

std::vector<NavAction> astar_actions(const OccupancyGrid& grid, GridPose start, Cell goal_cell,
                                     std::optional<Heading> face) {
  if (!grid.is_free(goal_cell)) throw Error(ErrorCode::NoPath, "goal " + to_string(goal_cell) + " is blocked");
  return search(
      grid, start,
      [&](GridPose p) { return p.cell == goal_cell && (!face || p.heading == *face); },
      [&](Cell c) { return manhattan(c, goal_cell); });
}

bool facing_adjacent(const OccupancyGrid& grid, GridPose pose, Cell target) {
  return pose.cell + forward_vector(pose.heading) == target && !grid.wall_between(pose.cell, target);
}

std::vector<NavAction> approach_actions(const OccupancyGrid& grid, GridPose start, Cell target) {
  return search(
      grid, start, [&](GridPose p) { return facing_adjacent(grid, p, target); },
      [&](Cell c) { return std::max(0, manhattan(c, target) - 1); });
}

OccupancyGrid navigation_grid(const WorldState& world, std::string_view agent_id) {
  OccupancyGrid grid = occupancy_grid(world);
  for (const auto& [id, agent] : world.agents) {
    if (id != agent_id) grid.set(agent.pose.cell, CellState::Blocked);
  }
  return grid;
}

}  // namespace langworld
