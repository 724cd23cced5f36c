#include <doctest.h>

#include "langworld/error.hpp"
#include "langworld/generator.hpp"
#include "langworld/planner.hpp"
#include "langworld/scene_io.hpp"
#include "support.hpp"

using namespace langworld;
using namespace testing_support;

namespace {

WorldState pantry(bool fridge_open) {
  Json doc = room_doc(6, 6, {2, 1}, "North");
  doc["agents"][0]["config"] = {{"manipulate_distance", 1.5}, {"inventory_capacity", 1}};
  auto fridge = object_doc("fridge_0", "fridge", {1, 4}, {"receptacle", "openable", "blocking"});
  fridge["state"] = {{"open", fridge_open}};
  fridge["contents"] = {"apple_0"};
  doc["objects"] = {
      fridge,
      object_doc("apple_0", "apple", {1, 4}, {"pickupable"}),
      object_doc("diningtable_0", "diningtable", {4, 4}, {"receptacle", "blocking"}),
  };
  return load_scene(doc);
}

WorldState apple_on_table(bool fridge_open) {
  auto w = pantry(fridge_open);
  insert_into(w, "apple_0", "diningtable_0");
  return w;
}

struct Replay {
  WorldState world;
  bool all_ok = true;
  std::optional<std::string> answer;
  std::string first_failure;
};

Replay replay(const Scenario& s, const std::vector<ActionCall>& calls) {
  Replay r{s.scene};
  for (const auto& c : calls) {
    auto step = execute_action(r.world, s.task.roles.front().agent_id, c);
    if (!step.feedback.ok && r.all_ok) {
      r.all_ok = false;
      r.first_failure = c.text() + ": " + step.feedback.message;
    }
    if (c.spec.name == "answer") r.answer = c.args.at(0);
    r.world = std::move(step.world);
  }
  return r;
}

std::vector<std::string> names(const std::vector<ActionCall>& calls) {
  std::vector<std::string> out;
  for (const auto& c : calls) out.push_back(c.text());
  return out;
}

}  // namespace

TEST_CASE("plan_subtasks opens the container, moves the object, restores openness") {
  const auto start = pantry(false);
  const auto target = apple_on_table(false);
  const auto plan = plan_subtasks(compare_status(start, target), start);
  REQUIRE(plan.size() == 4);
  CHECK(plan[0].operations.front().text() == "open [fridge_0]");
  CHECK(plan[1].operations.front().text() == "pick_up [apple_0]");
  CHECK(plan[1].target_cell == Cell{1, 4});
  CHECK(plan[2].operations.front().text() == "drop [apple_0]");
  CHECK(plan[2].target_cell == Cell{4, 4});
  CHECK(plan[3].operations.front().text() == "close [fridge_0]");
}

TEST_CASE("plan_subtasks leaves an open container open when the target wants it open") {
  const auto start = pantry(true);
  const auto plan = plan_subtasks(compare_status(start, apple_on_table(true)), start);
  REQUIRE(plan.size() == 2);
  CHECK(plan[0].operations.front().text() == "pick_up [apple_0]");
  CHECK(plan[1].operations.front().text() == "drop [apple_0]");
}

TEST_CASE("plan_subtasks rejects unrestorable changes") {
  const auto start = pantry(false);
  auto target = start;
  target.objects.at("apple_0").state.sliced = true;
  CHECK_THROWS_AS(plan_subtasks(compare_status(start, target), start), Error);
}

TEST_CASE("expert trajectory for a hand-built rearrangement replays cleanly") {
  Scenario s{pantry(false), {}};
  s.task.task_type = TaskType::Rearrangement;
  s.task.roles = {{"agent_0", Role::Solo, "rearrangement"}};
  s.task.target_state = apple_on_table(false);
  s.task.initial_diff = compare_status(s.scene, *s.task.target_state).entries;
  const auto calls = generate_trajectory(s.scene, s.task);
  const auto r = replay(s, calls);
  CHECK_MESSAGE(r.all_ok, r.first_failure);
  CHECK(compare_status(r.world, *s.task.target_state).empty());
  CHECK(check_goal(r.world, s.task).success);
}

TEST_CASE("expert fails with NoPath when the target is sealed off") {
  Json doc = room_doc(5, 5, {0, 0}, "North");
  doc["objects"] = {
      object_doc("wall_0", "wall", {3, 4}, {"blocking"}), object_doc("wall_1", "wall", {4, 3}, {"blocking"}),
      object_doc("wall_2", "wall", {3, 3}, {"blocking"}), object_doc("key_0", "key", {4, 4}, {"pickupable"}),
  };
  Scenario s{load_scene(doc), {}};
  s.task.task_type = TaskType::IG;
  s.task.roles = {{"agent_0", Role::Solo, "ig"}};
  GoalCondition c;
  c.kind = GoalKind::Holding;
  c.object = "key_0";
  s.task.goal = {c};
  try {
    generate_trajectory(s.scene, s.task);
    FAIL("expected NoPath");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoPath);
    CHECK(std::string(e.what()).find("key_0") != std::string::npos);
  }
}

TEST_CASE("multi-agent tasks have no expert") {
  const auto s = mawah_transcript_scenario();
  CHECK_THROWS_AS(generate_trajectory(s.scene, s.task), Error);
}

TEST_CASE("expert trajectories replay with success for every single-agent family") {
  for (TaskType type : {TaskType::IG, TaskType::Rearrangement, TaskType::IQA, TaskType::Household}) {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
      CAPTURE(task_type_name(type));
      CAPTURE(seed);
      const auto s = generate_task(type, seed);
      const auto calls = generate_trajectory(s.scene, s.task);
      CHECK(static_cast<int>(calls.size()) <= s.task.step_limit);
      const auto r = replay(s, calls);
      CHECK_MESSAGE(r.all_ok, r.first_failure);
      CHECK(check_goal(r.world, s.task, r.answer).success);
      for (const auto& [id, a] : r.world.agents) CHECK(static_cast<int>(a.inventory.size()) <= a.config.inventory_capacity);
    }
  }
}

TEST_CASE("generated tasks are deterministic per seed and valid") {
  for (TaskType type : {TaskType::IG, TaskType::Rearrangement, TaskType::IQA, TaskType::Household, TaskType::MATeach,
                        TaskType::MAWAH}) {
    CAPTURE(task_type_name(type));
    const auto a = generate_task(type, 7);
    const auto b = generate_task(type, 7);
    CHECK(scene_to_json(a.scene) == scene_to_json(b.scene));
    CHECK(task_to_json(a.task) == task_to_json(b.task));
    CHECK_NOTHROW(validate_world(a.scene));
    CHECK_NOTHROW(validate_task(a.task));
    CHECK(a.task.task_type == type);
    CHECK(a.task.scene_ref == a.scene.scene_id);
    if (type != TaskType::IQA && type != TaskType::MAWAH) CHECK_FALSE(check_goal(a.scene, a.task).success);
  }
  CHECK(scene_to_json(generate_task(TaskType::IG, 1).scene) != scene_to_json(generate_task(TaskType::IG, 2).scene));
}

TEST_CASE("generated families use their configured step limits and views") {
  CHECK(generate_task(TaskType::MAWAH, 3).task.step_limit == 30);
  CHECK(generate_task(TaskType::MATeach, 3).task.step_limit == 50);
  const auto ig = generate_task(TaskType::IG, 3);
  const auto& cfg = ig.scene.agent("agent_0").config;
  CHECK(cfg.view_shape.kind == ViewShape::Kind::Rect);
  CHECK(cfg.view_distance == 7.0);
  CHECK(cfg.view_shape.side_steps == 3);
  const auto iqa = generate_task(TaskType::IQA, 3);
  CHECK(iqa.scene.feedback_units == FeedbackUnits::Meters);
  CHECK(iqa.task.expected_answer == iqa_answer(iqa.scene, iqa.task));
}

TEST_CASE("trajectory jsonl round-trips") {
  const auto s = generate_task(TaskType::Household, 4);
  const auto calls = generate_trajectory(s.scene, s.task);
  const auto text = trajectory_jsonl(calls, "agent_0");
  const auto back = parse_trajectory_jsonl(text, builtin_action_space("household"));
  CHECK(names(back) == names(calls));
  CHECK(text.find("\"agent\":\"agent_0\"") != std::string::npos);
  CHECK_THROWS_AS(parse_trajectory_jsonl("{not json", builtin_action_space("household")), Error);
  CHECK_THROWS_AS(parse_trajectory_jsonl(R"({"action":"fly"})", builtin_action_space("household")), Error);
}

TEST_CASE("recorded MA-WAH actions complete the transcript scenario") {
  const auto s = mawah_transcript_scenario();
  const auto& space = builtin_action_space("ma_wah");
  const std::vector<std::pair<std::string, std::string>> script = {
      {"alice", "go_check [kitchencabinet_0]"}, {"bob", "go_check [cabinet_0]"},
      {"alice", "go_check [kitchencabinet_1]"}, {"bob", "go_explore [kitchen]"},
      {"alice", "go_check [kitchencabinet_2]"}, {"bob", "go_check [fridge_0]"},
      {"alice", "go_check [kitchencabinet_3]"}, {"bob", "go_grab [wine_0]"},
      {"alice", "go_check [kitchencabinet_4]"}, {"bob", "go_explore [livingroom]"},
      {"alice", "go_check [kitchencabinet_5]"}, {"bob", "go_put [coffeetable_0]"},
  };
  WorldState w = s.scene;
  for (std::size_t i = 0; i < script.size(); ++i) {
    CAPTURE(script[i].second);
    CHECK_FALSE(check_goal(w, s.task).success);
    auto parsed = parse_action(script[i].second, space);
    REQUIRE(std::holds_alternative<ActionCall>(parsed));
    auto step = execute_action(w, script[i].first, std::get<ActionCall>(parsed));
    CHECK(step.feedback.ok);
    w = std::move(step.world);
  }
  CHECK(check_goal(w, s.task).success);
  CHECK(w.objects.at("wine_0").container == std::optional<std::string>("coffeetable_0"));
}
