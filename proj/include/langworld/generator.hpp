#pragma once

#include <cstdint>

#include "langworld/task.hpp"
#include "langworld/world.hpp"

namespace langworld {

struct Scenario {
  WorldState scene;
  TaskSpec task;
};

// Seeded procedural task. Single-agent families are solvable by the expert; their step limit
// is raised to twice the expert length when that exceeds the default.
Scenario generate_task(TaskType type, std::uint64_t seed);

// Four-room house with two agents; the wine starts in fridge_0 and goes on coffeetable_0.
Scenario mawah_transcript_scenario();

// Scene and task ids used by generate_task.
std::string generated_scene_id(TaskType type, std::uint64_t seed);

}  // namespace langworld
