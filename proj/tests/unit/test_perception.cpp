#include <doctest.h>

#include <random>

#include "langworld/error.hpp"
#include "langworld/perception.hpp"
#include "oracles/fov_oracle.hpp"
#include "oracles/random_scenes.hpp"
#include "support.hpp"

using namespace langworld;
using namespace testing_support;

namespace {

Json grid_agent(Json doc, int depth = 7, int side = 3) {
  doc["agents"][0]["config"] = {{"view_distance", depth}, {"view_shape", {{"kind", "rect"}, {"side_steps", side}}}};
  return doc;
}

Json colored(Json o, const char* color) {
  o["color"] = color;
  return o;
}

}  // namespace

TEST_CASE("relative direction buckets") {
  const GridPose north{{0, 0}, Heading::North};
  CHECK(relative_direction(north, {0, 3}) == Direction::Front);
  CHECK(relative_direction(north, {-1, -1}) == Direction::RearLeft);
  CHECK(relative_direction(north, {-1, 1}) == Direction::FrontLeft);
  CHECK(relative_direction(north, {2, 0}) == Direction::Right);
  CHECK(relative_direction(north, {0, -4}) == Direction::Rear);
  CHECK(relative_direction(GridPose{{0, 0}, Heading::East}, {0, 1}) == Direction::Left);
  CHECK_THROWS_AS(relative_direction(north, {0, 0}), Error);
}

TEST_CASE("boundary bearings go to the more frontal bucket") {
  // Oracle: the stated rule applied to each boundary.
  struct Case {
    double deg;
    Direction expected;
  };
  const Case cases[] = {
      {22.5, Direction::Front},       {-22.5, Direction::Front},     {67.5, Direction::FrontLeft},
      {-67.5, Direction::FrontRight}, {112.5, Direction::Left},      {-112.5, Direction::Right},
      {157.5, Direction::RearLeft},   {-157.5, Direction::RearRight}, {45.0, Direction::FrontLeft},
  };
  for (const auto& c : cases) {
    CAPTURE(c.deg);
    CHECK(direction_for_bearing(c.deg) == c.expected);
  }
  CHECK(direction_for_bearing(180.0) == Direction::Rear);
}

TEST_CASE("compass octants") {
  const Rect room{0, 0, 8, 8};
  CHECK(compass_octant(room, {4, 8}) == "north");
  CHECK(compass_octant(room, {8, 8}) == "northeast");
  CHECK(compass_octant(room, {4, 4}) == "center");
  CHECK(compass_octant(room, {0, 0}) == "southwest");
  CHECK_THROWS_AS(compass_octant(room, {9, 0}), Error);
}

TEST_CASE("rect field of view") {
  Json doc = grid_agent(room_doc(9, 9, {4, 0}));
  doc["objects"].push_back(colored(object_doc("key_0", "key", {4, 2}, {"pickupable"}), "blue"));
  doc["objects"].push_back(colored(object_doc("box_0", "box", {6, 2}, {"pickupable"}), "red"));
  const auto w = load_scene(doc);
  const auto vs = field_of_view(w, "agent_0");
  REQUIRE(vs.items.size() == 2);
  CHECK(vs.items[0].object_id == "key_0");
  CHECK(vs.items[0].direction == Direction::Front);
  CHECK(vs.items[0].distance == doctest::Approx(2.0));

  const auto obs = render_observation(w, "agent_0", ObservationStyle::EgoGrid);
  CHECK(obs.text == "You can see a blue key in front of you; You can see a red box on your right.");
}

TEST_CASE("ego_grid empty view and manipulable line") {
  auto doc = grid_agent(room_doc(3, 3, {1, 0}));
  CHECK(render_observation(load_scene(doc), "agent_0", ObservationStyle::EgoGrid).text == "You can see nothing ahead.");
  doc["objects"].push_back(colored(object_doc("key_0", "key", {1, 1}, {"pickupable"}), "red"));
  CHECK(render_observation(load_scene(doc), "agent_0", ObservationStyle::EgoGrid).text ==
        "You can see a red key in front of you.\nManipulable object: a red key.");
}

TEST_CASE("closed receptacles conceal their contents") {
  Json doc = room_doc(4, 4);
  doc["objects"].push_back(object_doc("fridge_0", "fridge", {0, 2}, {"openable", "receptacle", "blocking"}));
  doc["objects"].push_back({{"id", "potato_0"}, {"category", "potato"}, {"container", "fridge_0"}, {"affordances", {"pickupable"}}});
  auto w = load_scene(doc);
  CHECK_FALSE(field_of_view(w, "agent_0").contains("potato_0"));
  w.objects.at("fridge_0").state.open = true;
  const auto vs = field_of_view(w, "agent_0");
  CHECK(vs.contains("potato_0"));
  CHECK(vs.find("fridge_0")->contents_visible);
}

TEST_CASE("walls occlude") {
  Json doc = room_doc(3, 5, {1, 0});
  doc["objects"].push_back(object_doc("ball_0", "ball", {1, 3}, {"pickupable"}));
  CHECK(field_of_view(load_scene(doc), "agent_0").contains("ball_0"));
  doc["walls"] = {{{1, 1}, {1, 2}}};
  CHECK_FALSE(field_of_view(load_scene(doc), "agent_0").contains("ball_0"));
}

TEST_CASE("blocking objects occlude what lies behind but are themselves visible") {
  Json doc = room_doc(3, 5, {1, 0});
  doc["objects"].push_back(object_doc("cabinet_0", "cabinet", {1, 2}, {"blocking"}));
  doc["objects"].push_back(object_doc("ball_0", "ball", {1, 4}, {"pickupable"}));
  const auto vs = field_of_view(load_scene(doc), "agent_0");
  CHECK(vs.contains("cabinet_0"));
  CHECK_FALSE(vs.contains("ball_0"));
}

TEST_CASE("diagonal corners block when any adjacent wall touches them") {
  Json doc = room_doc(3, 3, {0, 0});
  doc["objects"].push_back(object_doc("ball_0", "ball", {2, 2}, {"pickupable"}));
  CHECK(field_of_view(load_scene(doc), "agent_0").contains("ball_0"));
  doc["walls"] = {{{1, 1}, {2, 1}}};
  CHECK_FALSE(field_of_view(load_scene(doc), "agent_0").contains("ball_0"));
}

TEST_CASE("field of view matches the brute-force oracle on random scenes") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 150; ++trial) {
    const auto w = oracle::random_fov_scene(rng);
    const auto expected = oracle::visible_objects(w, "agent_0");
    const auto got = field_of_view(w, "agent_0");
    CAPTURE(trial);
    REQUIRE(got.items.size() == expected.size());
    for (const auto& item : got.items) {
      auto it = expected.find(item.object_id);
      REQUIRE(it != expected.end());
      CHECK(item.distance == doctest::Approx(it->second.distance));
      CHECK(direction_name(item.direction) == it->second.direction);
    }
  }
}

TEST_CASE("rotating heading and scene together preserves the visible set") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const auto w = oracle::random_fov_scene(rng, 12);
    // Rotate the scene by -90 degrees about the origin: (x, y) -> (y, -x); headings turn right with it.
    WorldState r = w;
    auto rot = [](Cell c) { return Cell{c.y, -c.x}; };
    for (auto& room : r.rooms) {
      const Cell a = rot({room.bounds.x0, room.bounds.y0});
      const Cell b = rot({room.bounds.x1, room.bounds.y1});
      room.bounds = {std::min(a.x, b.x), std::min(a.y, b.y), std::max(a.x, b.x), std::max(a.y, b.y)};
    }
    r.walls.clear();
    for (const auto& e : w.walls) r.walls.insert(*make_edge(rot(e.a), rot(e.b)));
    for (auto& [id, obj] : r.objects) obj.cell = rot(obj.cell);
    for (auto& [id, a] : r.agents) {
      a.pose.cell = rot(a.pose.cell);
      a.pose.heading = turn_right(a.pose.heading);
    }
    const auto before = field_of_view(w, "agent_0");
    const auto after = field_of_view(r, "agent_0");
    CAPTURE(trial);
    REQUIRE(before.items.size() == after.items.size());
    for (const auto& item : before.items) {
      const auto* other = after.find(item.object_id);
      REQUIRE(other != nullptr);
      CHECK(other->direction == item.direction);
    }
  }
}

TEST_CASE("ego_scene phrasing") {
  Json doc = room_doc(5, 5, {2, 0});
  doc["objects"].push_back(object_doc("dresser_0", "dresser", {2, 3}, {"receptacle", "blocking"}));
  doc["objects"].push_back({{"id", "pillow_0"}, {"category", "pillow"}, {"container", "dresser_0"}, {"affordances", {"pickupable"}}});
  doc["objects"].push_back({{"id", "laptop_0"},
                            {"category", "laptop"},
                            {"container", "dresser_0"},
                            {"affordances", {"openable", "receptacle", "pickupable"}},
                            {"state", {{"open", true}}}});
  doc["objects"].push_back(object_doc("drawer_0", "drawer", {0, 2}, {"openable", "receptacle", "blocking"}));
  const auto w = load_scene(doc);
  const auto text = render_observation(w, "agent_0", ObservationStyle::EgoScene).text;
  CHECK(text ==
        "In front of you, You see a dresser_0, there is a pillow_0, an opened laptop_0, it's empty, on it. "
        "On your left, you see a closed drawer_0.");

  const auto empty = load_scene(room_doc(2, 2));
  CHECK(render_observation(empty, "agent_0", ObservationStyle::EgoScene).text ==
        "You see nothing. You can try to take action like move_ahead, turn_left or turn_right to explore the room.");
}

TEST_CASE("room summary needs a belief") {
  const auto w = load_scene(room_doc(2, 2));
  CHECK_THROWS_AS(render_observation(w, "agent_0", ObservationStyle::RoomSummary), Error);
  CHECK_THROWS_AS(render_observation(w, "nobody", ObservationStyle::EgoScene), Error);
}

namespace {

Json two_room_doc() {
  Json doc = {
      {"schema", "langworld/scene@1"},
      {"rooms",
       {{{"id", "kitchen_0"}, {"category", "kitchen"}, {"bounds", {0, 0, 4, 4}}},
        {{"id", "bedroom_0"}, {"category", "bedroom"}, {"bounds", {5, 0, 9, 4}}}}},
      {"objects", Json::array()},
      {"agents",
       {{{"id", "alice"}, {"name", "Alice"}, {"cell", {1, 1}}, {"config", {{"inventory_capacity", 2}}}},
        {{"id", "bob"}, {"name", "Bob"}, {"cell", {6, 1}}, {"config", {{"inventory_capacity", 2}}}}}},
  };
  doc["objects"].push_back(object_doc("cabinet_0", "cabinet", {0, 4}, {"openable", "receptacle", "blocking"}));
  doc["objects"].push_back(object_doc("fridge_0", "fridge", {4, 4}, {"openable", "receptacle", "blocking"}));
  doc["objects"].push_back({{"id", "wine_0"}, {"category", "wine"}, {"container", "fridge_0"}, {"affordances", {"pickupable"}}});
  doc["objects"].push_back(object_doc("table_0", "table", {7, 4}, {"receptacle", "blocking"}));
  return doc;
}

}  // namespace

TEST_CASE("room summary narration and belief updates") {
  auto w = load_scene(two_room_doc());
  auto belief = initial_belief(w, std::string("table_0"));
  auto obs = render_observation(w, "alice", ObservationStyle::RoomSummary, &belief);
  CHECK(obs.text ==
        "You have not put anything onto the table_0 yet. You are holding nothing. You are in the kitchen, where you "
        "found unchecked containers cabinet_0, fridge_0. You don't know where Bob is. The bedroom is unexplored.");
  belief = update_belief(belief, w, "alice", obs);
  CHECK(belief.explored_rooms.count("kitchen_0") == 1);

  // Checking a container removes it from the unchecked list.
  w.objects.at("fridge_0").state.open = true;
  Feedback fb = Feedback::success("You opened fridge_0.");
  fb.checked_container = "fridge_0";
  fb.revealed = {"wine_0"};
  const auto after = update_belief(belief, w, "alice", fb);
  CHECK(after.checked_containers.count("fridge_0") == 1);
  CHECK(after.found_objects.count("wine_0") == 1);
  CHECK(update_belief(after, w, "alice", fb) == after);
  const auto text = render_observation(w, "alice", ObservationStyle::RoomSummary, &after).text;
  CHECK(text.find("where you found an unchecked container cabinet_0.") != std::string::npos);

  // Bob walks in holding the wine: Alice records the sighting.
  give_to_agent(w, "wine_0", "bob");
  move_agent(w, "bob", {2, 1});
  auto seen = render_observation(w, "alice", ObservationStyle::RoomSummary, &after, 5);
  CHECK(seen.text.find("You also see Bob here in the kitchen, they are holding wine_0.") != std::string::npos);
  auto b2 = update_belief(after, w, "alice", seen);
  REQUIRE(b2.last_seen_agents.count("bob") == 1);
  CHECK(b2.last_seen_agents.at("bob").holding == std::vector<std::string>{"wine_0"});
  CHECK(b2.last_seen_agents.at("bob").step == 5);
  move_agent(w, "bob", {6, 1});
  CHECK(render_observation(w, "alice", ObservationStyle::RoomSummary, &b2).text.find(
            "Last time you saw Bob was in the kitchen, they were holding wine_0.") != std::string::npos);
}

TEST_CASE("room layout description") {
  Json doc = room_doc(9, 9, {4, 4});
  doc["objects"].push_back(object_doc("sink_1", "sink", {4, 8}, {"receptacle", "blocking"}));
  doc["objects"].push_back({{"id", "dishsponge_0"}, {"category", "dishsponge"}, {"container", "sink_1"}, {"affordances", {"pickupable"}}});
  doc["objects"].push_back(object_doc("cabinet_13", "cabinet", {3, 8}, {"openable", "receptacle", "blocking"}));
  doc["objects"].push_back(object_doc("cabinet_2", "cabinet", {5, 8}, {"openable", "receptacle", "blocking"}));
  doc["objects"].push_back(object_doc("lightswitch_0", "lightswitch", {8, 8}, {}));
  const auto w = load_scene(doc);
  CHECK(render_room_layout(w, w.rooms[0]) ==
        "In the north of the room, there is a closed cabinet_2; a closed cabinet_13; a sink_1, in/on it you can see a "
        "dishsponge_0. In the northeast of the room, there is a lightswitch_0.");
}
