#include "langworld/scene_io.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "langworld/text.hpp"

namespace langworld {

namespace json_util {

Cell as_cell(const Json& v, std::string_view where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    schema_fail(where, "expected [x, y]");
  }
  return {static_cast<int>(std::lround(v[0].get<double>())), static_cast<int>(std::lround(v[1].get<double>()))};
}

Json cell_json(Cell c) { return Json::array({c.x, c.y}); }

}  // namespace json_util

using namespace json_util;

namespace {

[[noreturn]] void inconsistent(const std::string& what) { throw Error(ErrorCode::ConsistencyError, what); }

Rect parse_bounds(const Json& v, std::string_view where) {
  if (!v.is_array() || v.size() != 4) schema_fail(where, "expected [x0, y0, x1, y1]");
  int b[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (!v[i].is_number()) schema_fail(where, "expected numeric bounds");
    b[i] = static_cast<int>(std::lround(v[i].get<double>()));
  }
  if (b[2] < b[0] || b[3] < b[1]) schema_fail(where, "bounds are inverted");
  return {b[0], b[1], b[2], b[3]};
}

ObjectState parse_state(const Json& v, std::string_view where) {
  ObjectState s;
  if (!v.is_object()) schema_fail(where, "expected an object");
  if (const auto* f = optional(v, "open")) s.open = as_bool(*f, where);
  if (const auto* f = optional(v, "toggled")) s.toggled = as_bool(*f, where);
  if (const auto* f = optional(v, "sliced")) s.sliced = as_bool(*f, where);
  if (const auto* f = optional(v, "dirty")) s.dirty = as_bool(*f, where);
  if (const auto* f = optional(v, "temperature")) {
    const auto t = parse_temperature(as_string(*f, where));
    if (!t) schema_fail(where, "unknown temperature");
    s.temperature = *t;
  }
  return s;
}

AgentConfig parse_config(const Json& v, std::string_view where) {
  AgentConfig c;
  if (!v.is_object()) schema_fail(where, "expected an object");
  if (const auto* f = optional(v, "view_distance")) c.view_distance = as_number(*f, where);
  if (const auto* f = optional(v, "focal_length")) {
    c.focal_length = as_number(*f, where);
    if (*c.focal_length <= 0) schema_fail(where, "focal_length must be positive");
  }
  if (const auto* f = optional(v, "manipulate_distance")) c.manipulate_distance = as_number(*f, where);
  if (const auto* f = optional(v, "inventory_capacity")) c.inventory_capacity = static_cast<int>(as_integer(*f, where));
  if (const auto* f = optional(v, "oracle_vision")) c.oracle_vision = as_bool(*f, where);
  if (const auto* shape = optional(v, "view_shape")) {
    const auto kind = text::lower(as_string(require(*shape, "kind", where), where));
    if (kind == "cone") {
      c.view_shape.kind = ViewShape::Kind::Cone;
      if (const auto* h = optional(*shape, "half_angle")) c.view_shape.half_angle_degrees = as_number(*h, where);
    } else if (kind == "rect") {
      c.view_shape.kind = ViewShape::Kind::Rect;
      if (const auto* s = optional(*shape, "side_steps")) c.view_shape.side_steps = static_cast<int>(as_integer(*s, where));
    } else {
      schema_fail(where, "unknown view_shape kind '" + kind + "'");
    }
  }
  return c;
}

Json config_json(const AgentConfig& c) {
  Json shape;
  if (c.view_shape.kind == ViewShape::Kind::Cone) {
    shape = {{"kind", "cone"}};
    if (c.view_shape.half_angle_degrees) shape["half_angle"] = *c.view_shape.half_angle_degrees;
  } else {
    shape = {{"kind", "rect"}, {"side_steps", c.view_shape.side_steps}};
  }
  Json out = {
      {"view_distance", c.view_distance},
      {"view_shape", shape},
      {"manipulate_distance", c.manipulate_distance},
      {"inventory_capacity", c.inventory_capacity},
      {"oracle_vision", c.oracle_vision},
  };
  if (c.focal_length) out["focal_length"] = *c.focal_length;
  return out;
}

}  // namespace

WorldState load_scene(const Json& doc) {
  if (!doc.is_object()) schema_fail("scene", "expected an object");
  if (const auto* s = optional(doc, "schema")) {
    if (as_string(*s, "schema") != kSceneSchema) schema_fail("schema", "unsupported scene schema");
  }
  WorldState w;
  if (const auto* f = optional(doc, "id")) w.scene_id = as_string(*f, "id");
  if (const auto* f = optional(doc, "step_size_meters")) {
    w.step_size_meters = as_number(*f, "step_size_meters");
    if (w.step_size_meters <= 0) schema_fail("step_size_meters", "must be positive");
  }
  if (const auto* f = optional(doc, "feedback_units")) {
    const auto u = text::lower(as_string(*f, "feedback_units"));
    if (u == "steps") w.feedback_units = FeedbackUnits::Steps;
    else if (u == "meters") w.feedback_units = FeedbackUnits::Meters;
    else schema_fail("feedback_units", "expected 'steps' or 'meters'");
  }
  if (const auto* f = optional(doc, "seed")) {
    if (!f->is_number_unsigned() && !f->is_number_integer()) schema_fail("seed", "expected an integer");
    w.seed = f->get<std::uint64_t>();
  }

  for (const auto& r : as_array(require(doc, "rooms", "scene"), "rooms")) {
    Room room;
    room.id = as_string(require(r, "id", "rooms[]"), "rooms[].id");
    const auto cat = parse_room_category(as_string(require(r, "category", "rooms[]"), "rooms[].category"));
    if (!cat) schema_fail("rooms[].category", "unknown room category");
    room.category = *cat;
    room.bounds = parse_bounds(require(r, "bounds", "rooms[]"), "rooms[].bounds");
    w.rooms.push_back(std::move(room));
  }
  if (w.rooms.empty()) schema_fail("rooms", "at least one room is required");

  if (const auto* walls = optional(doc, "walls")) {
    for (const auto& e : as_array(*walls, "walls")) {
      if (!e.is_array() || e.size() != 2) schema_fail("walls[]", "expected [cellA, cellB]");
      const auto edge = make_edge(as_cell(e[0], "walls[]"), as_cell(e[1], "walls[]"));
      if (!edge) schema_fail("walls[]", "wall cells must be orthogonally adjacent");
      w.walls.insert(*edge);
    }
  }

  // Pending containment links; validated once every object is known.
  std::vector<std::pair<std::string, std::string>> links;
  int ordinal = 0;
  if (const auto* objects = optional(doc, "objects")) {
    for (const auto& o : as_array(*objects, "objects")) {
      ObjectEntity obj;
      obj.id = as_string(require(o, "id", "objects[]"), "objects[].id");
      const std::string where = "objects[" + obj.id + "]";
      obj.category = as_string(require(o, "category", where), where + ".category");
      if (const auto* c = optional(o, "color")) obj.color = as_string(*c, where + ".color");
      if (const auto* affs = optional(o, "affordances")) {
        for (const auto& a : as_array(*affs, where + ".affordances")) {
          const auto aff = parse_affordance(as_string(a, where + ".affordances"));
          if (!aff) schema_fail(where + ".affordances", "unknown affordance");
          obj.affordances.set(*aff);
        }
      }
      if (const auto* s = optional(o, "state")) obj.state = parse_state(*s, where + ".state");
      const auto* cell = optional(o, "cell");
      const auto* container = optional(o, "container");
      if (cell) obj.cell = as_cell(*cell, where + ".cell");
      if (container) links.emplace_back(as_string(*container, where + ".container"), obj.id);
      if (const auto* contents = optional(o, "contents")) {
        for (const auto& c : as_array(*contents, where + ".contents")) {
          links.emplace_back(obj.id, as_string(c, where + ".contents"));
        }
      }
      obj.ordinal = ordinal++;
      if (!w.objects.emplace(obj.id, obj).second) inconsistent("duplicate object id " + obj.id);
    }
  }

  for (const auto& [parent_id, child_id] : links) {
    auto* parent = w.find_object(parent_id);
    auto* child = w.find_object(child_id);
    if (!parent) inconsistent("unknown receptacle " + parent_id);
    if (!child) inconsistent("contents reference unknown id " + child_id);
    if (parent_id == child_id) inconsistent(child_id + " contains itself");
    if (child->container) {
      if (*child->container == parent_id) continue;
      inconsistent(child_id + " appears in more than one receptacle");
    }
    child->container = parent_id;
    parent->contents.push_back(child_id);
  }

  if (const auto* agents = optional(doc, "agents")) {
    for (const auto& a : as_array(*agents, "agents")) {
      AgentBody body;
      body.id = as_string(require(a, "id", "agents[]"), "agents[].id");
      const std::string where = "agents[" + body.id + "]";
      if (const auto* n = optional(a, "name")) body.name = as_string(*n, where + ".name");
      body.pose.cell = as_cell(require(a, "cell", where), where + ".cell");
      if (const auto* h = optional(a, "heading")) {
        const auto heading = parse_heading(as_string(*h, where + ".heading"));
        if (!heading) schema_fail(where + ".heading", "unknown heading");
        body.pose.heading = *heading;
      }
      if (const auto* c = optional(a, "config")) body.config = parse_config(*c, where + ".config");
      if (const auto* inv = optional(a, "inventory")) {
        for (const auto& item : as_array(*inv, where + ".inventory")) {
          body.inventory.push_back(as_string(item, where + ".inventory"));
        }
      }
      if (!w.agents.emplace(body.id, body).second) inconsistent("duplicate agent id " + body.id);
    }
  }
  for (auto& [agent_id, body] : w.agents) {
    for (const auto& item : body.inventory) {
      auto* obj = w.find_object(item);
      if (!obj) inconsistent(agent_id + " holds unknown object " + item);
      if (obj->holder || obj->container) inconsistent(item + " is held while placed elsewhere");
      obj->holder = agent_id;
    }
  }

  // Cells of contained and held objects follow their parents.
  for (auto& [id, obj] : w.objects) {
    if (!obj.top_level()) continue;
    std::vector<std::string> stack(obj.contents.begin(), obj.contents.end());
    std::set<std::string> seen{id};
    while (!stack.empty()) {
      const auto cur = stack.back();
      stack.pop_back();
      if (!seen.insert(cur).second) inconsistent("containment cycle at " + cur);
      auto& child = w.objects.at(cur);
      child.cell = obj.cell;
      stack.insert(stack.end(), child.contents.begin(), child.contents.end());
    }
  }
  for (const auto& [agent_id, body] : w.agents) move_agent(w, agent_id, body.pose.cell);

  validate_world(w);
  return w;
}

void validate_world(const WorldState& w) {
  if (w.step_size_meters <= 0) inconsistent("step_size_meters must be positive");
  std::set<std::string> room_ids;
  for (std::size_t i = 0; i < w.rooms.size(); ++i) {
    if (!room_ids.insert(w.rooms[i].id).second) inconsistent("duplicate room id " + w.rooms[i].id);
    for (std::size_t j = i + 1; j < w.rooms.size(); ++j) {
      if (w.rooms[i].bounds.overlaps(w.rooms[j].bounds)) {
        inconsistent("rooms " + w.rooms[i].id + " and " + w.rooms[j].id + " overlap");
      }
    }
  }

  for (const auto& [id, obj] : w.objects) {
    if (obj.id != id) inconsistent("object key mismatch for " + id);
    if (!obj.contents.empty() && !obj.has(Affordance::Receptacle)) inconsistent(id + " has contents but is not a receptacle");
    if (obj.state.open && !obj.has(Affordance::Openable)) inconsistent(id + " is open but not openable");
    if (obj.container && obj.holder) inconsistent(id + " is both contained and held");
    if (obj.holder) {
      if (!obj.has(Affordance::Pickupable)) inconsistent(id + " is held but not pickupable");
      const auto* holder = w.find_agent(*obj.holder);
      if (!holder) inconsistent(id + " held by unknown agent");
      if (std::find(holder->inventory.begin(), holder->inventory.end(), id) == holder->inventory.end()) {
        inconsistent(id + " missing from holder inventory");
      }
    }
    if (obj.container) {
      const auto* parent = w.find_object(*obj.container);
      if (!parent) inconsistent(id + " is inside unknown receptacle");
      if (std::count(parent->contents.begin(), parent->contents.end(), id) != 1) {
        inconsistent(id + " missing from receptacle contents");
      }
      if (parent->cell != obj.cell) inconsistent(id + " does not share its receptacle's cell");
    }
    for (const auto& child : obj.contents) {
      const auto* c = w.find_object(child);
      if (!c) inconsistent("contents reference unknown id " + child);
      if (!c->container || *c->container != id) inconsistent(child + " back-reference mismatch");
    }
    std::size_t depth = 0;
    for (const ObjectEntity* cur = &obj; cur->container; cur = w.find_object(*cur->container)) {
      if (++depth > w.objects.size()) inconsistent("containment cycle at " + id);
    }
    if (obj.top_level() && !w.inside_rooms(obj.cell)) inconsistent(id + " lies outside every room");
  }

  const auto grid = occupancy_grid(w);
  std::set<Cell> agent_cells;
  for (const auto& [id, a] : w.agents) {
    if (a.id != id) inconsistent("agent key mismatch for " + id);
    if (!w.inside_rooms(a.pose.cell)) inconsistent("agent " + id + " is outside bounds");
    if (!grid.is_free(a.pose.cell)) inconsistent("agent " + id + " stands on a blocked cell");
    if (!agent_cells.insert(a.pose.cell).second) inconsistent("agents share cell " + to_string(a.pose.cell));
    if (a.config.view_distance <= 0) inconsistent("agent " + id + " view_distance must be positive");
    if (a.config.manipulate_distance > a.config.view_distance) {
      inconsistent("agent " + id + " manipulate_distance exceeds view_distance");
    }
    if (a.config.inventory_capacity < 0) inconsistent("agent " + id + " inventory_capacity is negative");
    if (static_cast<int>(a.inventory.size()) > a.config.inventory_capacity) {
      inconsistent("agent " + id + " inventory exceeds capacity");
    }
    if (a.config.view_shape.kind == ViewShape::Kind::Rect && a.config.view_shape.side_steps < 0) {
      inconsistent("agent " + id + " side_steps is negative");
    }
    for (const auto& item : a.inventory) {
      const auto* obj = w.find_object(item);
      if (!obj || obj->holder != id) inconsistent("agent " + id + " inventory mismatch for " + item);
    }
  }
}

Json scene_to_json(const WorldState& w) {
  Json doc;
  doc["schema"] = kSceneSchema;
  if (!w.scene_id.empty()) doc["id"] = w.scene_id;
  doc["step_size_meters"] = w.step_size_meters;
  doc["feedback_units"] = w.feedback_units == FeedbackUnits::Steps ? "steps" : "meters";
  doc["seed"] = w.seed;
  doc["rooms"] = Json::array();
  for (const auto& r : w.rooms) {
    doc["rooms"].push_back({{"id", r.id},
                            {"category", room_category_name(r.category)},
                            {"bounds", {r.bounds.x0, r.bounds.y0, r.bounds.x1, r.bounds.y1}}});
  }
  doc["walls"] = Json::array();
  for (const auto& e : w.walls) doc["walls"].push_back({cell_json(e.a), cell_json(e.b)});

  std::vector<const ObjectEntity*> ordered;
  for (const auto& [id, obj] : w.objects) ordered.push_back(&obj);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const ObjectEntity* a, const ObjectEntity* b) { return a->ordinal < b->ordinal; });
  doc["objects"] = Json::array();
  for (const auto* obj : ordered) {
    Json o = {{"id", obj->id}, {"category", obj->category}};
    if (obj->color) o["color"] = *obj->color;
    if (obj->top_level()) o["cell"] = cell_json(obj->cell);
    o["affordances"] = Json::array();
    for (Affordance a : obj->affordances.list()) o["affordances"].push_back(affordance_name(a));
    o["state"] = {{"open", obj->state.open},
                  {"toggled", obj->state.toggled},
                  {"sliced", obj->state.sliced},
                  {"dirty", obj->state.dirty},
                  {"temperature", temperature_name(obj->state.temperature)}};
    if (!obj->contents.empty()) o["contents"] = obj->contents;
    doc["objects"].push_back(std::move(o));
  }

  doc["agents"] = Json::array();
  for (const auto& [id, a] : w.agents) {
    Json j = {{"id", a.id},
              {"cell", cell_json(a.pose.cell)},
              {"heading", heading_name(a.pose.heading)},
              {"config", config_json(a.config)}};
    if (a.name) j["name"] = *a.name;
    if (!a.inventory.empty()) j["inventory"] = a.inventory;
    doc["agents"].push_back(std::move(j));
  }
  return doc;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SchemaError, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
}

WorldState load_scene_file(const std::filesystem::path& path) { return load_scene(read_json_file(path)); }

}  // namespace langworld
