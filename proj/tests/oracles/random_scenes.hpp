#pragma once

#include <random>
#include <string>

#include "langworld/scene_io.hpp"
#include "langworld/world.hpp"

namespace oracle {

// Random single-agent scene for visibility checks: walls, blockers, closed and open
// receptacles with contents, loose objects.
inline langworld::WorldState random_fov_scene(std::mt19937_64& rng, int max_side = 20) {
  using namespace langworld;
  std::uniform_int_distribution<int> side(3, max_side);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  WorldState w;
  const int width = side(rng);
  const int height = side(rng);
  if (unit(rng) < 0.3 && width >= 6) {
    const int split = width / 2;
    w.rooms.push_back({"room_0", RoomCategory::Kitchen, {0, 0, split - 1, height - 1}});
    w.rooms.push_back({"room_1", RoomCategory::Bedroom, {split, 0, width - 1, height - 1}});
  } else {
    w.rooms.push_back({"room_0", RoomCategory::Generic, {0, 0, width - 1, height - 1}});
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (x + 1 < width && unit(rng) < 0.08) w.walls.insert(*make_edge({x, y}, {x + 1, y}));
      if (y + 1 < height && unit(rng) < 0.08) w.walls.insert(*make_edge({x, y}, {x, y + 1}));
    }
  }

  int next = 0;
  auto add = [&](const std::string& category, Cell c, Affordances aff) -> ObjectEntity& {
    ObjectEntity o;
    o.id = category + "_" + std::to_string(next);
    o.category = category;
    o.cell = c;
    o.affordances = aff;
    o.ordinal = next++;
    return w.objects.emplace(o.id, o).first->second;
  };

  std::vector<Cell> free_cells;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double r = unit(rng);
      if (r < 0.08) {
        add("pillar", {x, y}, {Affordance::Blocking});
      } else if (r < 0.14) {
        auto& box = add("cabinet", {x, y}, {Affordance::Blocking, Affordance::Receptacle, Affordance::Openable});
        box.state.open = unit(rng) < 0.5;
        const std::string box_id = box.id;
        const int n = static_cast<int>(unit(rng) * 3);
        for (int i = 0; i < n; ++i) {
          const std::string child = add("cup", {x, y}, {Affordance::Pickupable}).id;
          insert_into(w, child, box_id);
        }
      } else if (r < 0.18) {
        const std::string table = add("table", {x, y}, {Affordance::Receptacle}).id;
        const std::string child = add("apple", {x, y}, {Affordance::Pickupable}).id;
        insert_into(w, child, table);
        free_cells.push_back({x, y});
      } else {
        if (r < 0.30) add("ball", {x, y}, {Affordance::Pickupable});
        free_cells.push_back({x, y});
      }
    }
  }
  if (free_cells.empty()) {
    w.objects.clear();
    free_cells.push_back({0, 0});
  }

  AgentBody a;
  a.id = "agent_0";
  a.pose.cell = free_cells[std::uniform_int_distribution<std::size_t>(0, free_cells.size() - 1)(rng)];
  a.pose.heading = static_cast<Heading>(std::uniform_int_distribution<int>(0, 3)(rng));
  a.config.view_distance = std::uniform_int_distribution<int>(1, 10)(rng) + (unit(rng) < 0.3 ? 0.5 : 0.0);
  a.config.manipulate_distance = 1.0;
  const double shape = unit(rng);
  if (shape < 0.4) {
    a.config.view_shape.kind = ViewShape::Kind::Rect;
    a.config.view_shape.side_steps = std::uniform_int_distribution<int>(0, 4)(rng);
  } else if (shape < 0.6) {
    a.config.view_shape.half_angle_degrees = std::uniform_int_distribution<int>(10, 90)(rng);
  } else if (shape < 0.75) {
    a.config.focal_length = 0.2 + unit(rng);
  }
  a.config.oracle_vision = unit(rng) < 0.08;
  // Sometimes the agent holds something; held objects are never visible.
  if (unit(rng) < 0.2) {
    a.config.inventory_capacity = 1;
    auto& held = add("key", a.pose.cell, {Affordance::Pickupable});
    held.holder = a.id;
    a.inventory.push_back(held.id);
  }
  w.agents.emplace(a.id, a);
  validate_world(w);
  return w;
}

}  // namespace oracle
