#pragma once

#include <filesystem>
#include <string>

#include "langworld/scene_io.hpp"

namespace testing_support {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(LANGWORLD_FIXTURE_DIR) / name;
}

inline langworld::WorldState scene_from(const std::string& json_text) {
  return langworld::load_scene(langworld::Json::parse(json_text));
}

// One rectangular room with a single solo agent.
inline langworld::Json room_doc(int w, int h, langworld::Cell agent = {0, 0}, const char* heading = "North") {
  return {
      {"schema", "langworld/scene@1"},
      {"rooms", {{{"id", "room_0"}, {"category", "generic"}, {"bounds", {0, 0, w - 1, h - 1}}}}},
      {"objects", langworld::Json::array()},
      {"agents", {{{"id", "agent_0"}, {"cell", {agent.x, agent.y}}, {"heading", heading}}}},
  };
}

inline langworld::Json object_doc(const std::string& id, const std::string& category, langworld::Cell c,
                                  std::initializer_list<const char*> affordances) {
  langworld::Json o = {{"id", id}, {"category", category}, {"cell", {c.x, c.y}}, {"affordances", langworld::Json::array()}};
  for (const char* a : affordances) o["affordances"].push_back(a);
  return o;
}

}  // namespace testing_support
