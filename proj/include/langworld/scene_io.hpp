#pragma once

#include <filesystem>

#include "langworld/json_util.hpp"
#include "langworld/world.hpp"

namespace langworld {

inline constexpr std::string_view kSceneSchema = "langworld/scene@1";

// Parses and validates a scene document. Throws SchemaError or ConsistencyError.
WorldState load_scene(const Json& doc);
WorldState load_scene_file(const std::filesystem::path& path);

// Canonical document; load_scene(scene_to_json(w)) == w.
Json scene_to_json(const WorldState& world);

// Checks every cross-object invariant of a built world. Throws ConsistencyError.
void validate_world(const WorldState& world);

Json read_json_file(const std::filesystem::path& path);

}  // namespace langworld
