#include <doctest.h>

#include "langworld/error.hpp"
#include "langworld/generator.hpp"
#include "langworld/planner.hpp"
#include "langworld/runtime.hpp"
#include "langworld/text.hpp"

using namespace langworld;

namespace {

std::shared_ptr<AgentBackend> scripted(std::vector<std::string> replies, std::string label = "scripted") {
  return std::make_shared<ScriptedBackend>(std::move(replies), std::move(label));
}

std::vector<std::string> expert_script(const Scenario& sc) {
  std::vector<std::string> out = {"YES."};
  for (const auto& c : generate_trajectory(sc.scene, sc.task)) out.push_back("Act: " + c.text());
  return out;
}

Limits limits_for(StrategyKind k = StrategyKind::Act) {
  Limits l;
  l.strategy = Strategy::of(k);
  return l;
}

std::vector<const TranscriptEvent*> of_kind(const Episode& e, EventKind k) {
  std::vector<const TranscriptEvent*> out;
  for (const auto& ev : e.events) {
    if (ev.kind == k) out.push_back(&ev);
  }
  return out;
}

// Every message the backend was sent, recorded per call.
struct Recorder {
  std::vector<std::vector<ChatMessage>> calls;
  std::vector<std::string> replies;
  std::size_t next = 0;

  std::shared_ptr<AgentBackend> backend() {
    return std::make_shared<FunctionBackend>([this](const std::vector<ChatMessage>& m) {
      calls.push_back(m);
      if (next >= replies.size()) throw Error(ErrorCode::BackendError, "script exhausted");
      return replies[next++];
    });
  }
};

}  // namespace

TEST_CASE("expert trajectory through a scripted agent succeeds") {
  for (auto type : {TaskType::IG, TaskType::Rearrangement, TaskType::IQA, TaskType::Household}) {
    const auto sc = generate_task(type, 5);
    const auto id = sc.task.roles.front().agent_id;
    const auto e = run_episode(sc.scene, sc.task, {{id, scripted(expert_script(sc))}}, limits_for());
    CAPTURE(task_type_name(type));
    CHECK(e.outcome.success);
    CHECK(e.score.goal_sr == 1.0);
    CHECK(e.score.steps == static_cast<int>(generate_trajectory(sc.scene, sc.task).size()));
    CHECK(e.events.back().payload["outcome"] == "Success");
    if (type == TaskType::Rearrangement) {
      CHECK(e.score.misplaced_pct == 0.0);
      CHECK(e.score.fixed_strict_pct == 100.0);
    }
    if (type == TaskType::IQA) CHECK(e.score.answer_correct == true);
    for (const auto* f : of_kind(e, EventKind::Feedback)) CHECK(f->payload["ok"] == true);
  }
}

TEST_CASE("thoughts get OK and take no step") {
  const auto sc = generate_task(TaskType::IG, 2);
  const auto id = sc.task.roles.front().agent_id;
  Recorder r;
  r.replies = {"YES", "Thought: I should look around first.", "Act: turn_left", "Act: stop [N/A]"};
  const auto e = run_episode(sc.scene, sc.task, {{id, r.backend()}}, limits_for(StrategyKind::ReAct));
  REQUIRE(r.calls.size() == 4);
  CHECK(r.calls[2].back().text == "OK.");
  const auto thoughts = of_kind(e, EventKind::Thought);
  REQUIRE(thoughts.size() == 1);
  CHECK(thoughts[0]->step == 0);
  CHECK(of_kind(e, EventKind::Action).front()->step == 0);
  CHECK(r.calls[3].back().text.rfind("Feedback: Action succeeded. Turned left by '90' degrees.\nObs: ", 0) == 0);
  CHECK(e.score.steps == 2);
  CHECK(e.score.llm_calls == 4);
  CHECK(e.outcome.failure == FailureKind::Stopped);
}

TEST_CASE("a thought and an action in one reply execute together") {
  const auto sc = generate_task(TaskType::IG, 2);
  const auto id = sc.task.roles.front().agent_id;
  const auto e = run_episode(sc.scene, sc.task, {{id, scripted({"YES", "Thought: turn.\nAct: turn_right", "Act: stop [x]"})}},
                             limits_for(StrategyKind::ReAct));
  CHECK(of_kind(e, EventKind::Thought).size() == 1);
  CHECK(of_kind(e, EventKind::Action).front()->payload["text"] == "turn_right");
}

TEST_CASE("step limit and budget") {
  const auto sc = generate_task(TaskType::IG, 2);
  const auto id = sc.task.roles.front().agent_id;
  std::vector<std::string> spin = {"YES"};
  for (int i = 0; i < 200; ++i) spin.push_back("Act: turn_left");

  SUBCASE("step limit") {
    auto l = limits_for();
    l.step_limit = 5;
    const auto e = run_episode(sc.scene, sc.task, {{id, scripted(spin)}}, l);
    CHECK(e.outcome.failure == FailureKind::StepLimit);
    CHECK(e.score.steps == 5);
    CHECK_FALSE(e.score.success);
  }
  SUBCASE("call budget") {
    auto l = limits_for();
    l.llm_call_cap = 3;
    const auto e = run_episode(sc.scene, sc.task, {{id, scripted(spin)}}, l);
    CHECK(e.outcome.failure == FailureKind::BudgetExceeded);
    CHECK(e.score.llm_calls == 3);
  }
  SUBCASE("endless thinking is stopped by the budget") {
    auto l = limits_for(StrategyKind::ReAct);
    l.llm_call_cap = 10;
    std::vector<std::string> think = {"YES"};
    for (int i = 0; i < 50; ++i) think.push_back("Thought: hmm");
    const auto e = run_episode(sc.scene, sc.task, {{id, scripted(think)}}, l);
    CHECK(e.outcome.failure == FailureKind::BudgetExceeded);
    CHECK(e.score.steps == 0);
  }
  SUBCASE("exhausted backend") {
    const auto e = run_episode(sc.scene, sc.task, {{id, scripted({"YES"})}}, limits_for());
    CHECK(e.outcome.failure == FailureKind::BackendError);
  }
}

TEST_CASE("setup needs a YES") {
  const auto sc = generate_task(TaskType::IG, 2);
  const auto id = sc.task.roles.front().agent_id;
  const auto e = run_episode(sc.scene, sc.task, {{id, scripted({"I cannot play."})}}, limits_for());
  CHECK(e.outcome.failure == FailureKind::SetupFailed);
  CHECK_THROWS_AS(run_episode(sc.scene, sc.task, {}, limits_for()), Error);
}

TEST_CASE("malformed replies get one reminder before wasting a turn") {
  const auto sc = generate_task(TaskType::IG, 2);
  const auto id = sc.task.roles.front().agent_id;
  Recorder r;
  r.replies = {"YES", "hmm", "still nothing", "Act: stop [x]"};
  const auto e = run_episode(sc.scene, sc.task, {{id, r.backend()}}, limits_for());
  REQUIRE(r.calls.size() == 4);
  CHECK(r.calls[2].back().text.find("did not contain a valid action") != std::string::npos);
  CHECK(r.calls[3].back().text.rfind("Feedback: Action failed.", 0) == 0);
  const auto acts = of_kind(e, EventKind::Action);
  REQUIRE(acts.size() == 2);
  CHECK(acts[0]->payload["valid"] == false);
  CHECK(e.score.steps == 2);
}

TEST_CASE("schedule_turns") {
  CHECK(schedule_turns(generate_task(TaskType::IG, 1).task).cycle == std::vector<std::string>{"agent_0"});
  const auto teach = schedule_turns(generate_task(TaskType::MATeach, 1).task);
  CHECK(teach.cycle == std::vector<std::string>{"commander", "follower"});
  CHECK(teach.at(2) == "commander");
  CHECK(schedule_turns(mawah_transcript_scenario().task).cycle == std::vector<std::string>{"alice", "bob"});
}

TEST_CASE("route_message") {
  const auto teach = generate_task(TaskType::MATeach, 1);
  const auto d = route_message(teach.task, teach.scene, "commander", "chat", "Please pick up the pillow from the dresser.", false);
  CHECK(d.to == std::vector<std::string>{"follower"});
  CHECK(d.line == "commander: Please pick up the pillow from the dresser.");

  const auto solo = generate_task(TaskType::IG, 1);
  try {
    route_message(solo.task, solo.scene, "agent_0", "chat", "hello", true);
    FAIL("expected NoRecipient");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoRecipient);
  }
  CHECK_THROWS_AS(route_message(teach.task, teach.scene, "follower", "ask", "where?", false), Error);
  CHECK(route_message(teach.task, teach.scene, "follower", "ask", "where?", true).to == std::vector<std::string>{"human"});
}

TEST_CASE("commander chat reaches the follower's next prompt") {
  const auto sc = generate_task(TaskType::MATeach, 1);
  Recorder follower;
  follower.replies = {"YES.", "Act: no_op", "Act: no_op"};
  const auto e = run_episode(sc.scene, sc.task,
                             {{"commander", scripted({"YES.", "Act: chat [Please pick up the pillow from the dresser.]", "Act: stop [done]"})},
                              {"follower", follower.backend()}},
                             limits_for());
  REQUIRE(follower.calls.size() >= 2);
  CHECK(follower.calls[1].back().text.rfind("commander: Please pick up the pillow from the dresser.\n", 0) == 0);
  const auto chats = of_kind(e, EventKind::Chat);
  REQUIRE(chats.size() == 1);
  CHECK(chats[0]->payload["line"] == "commander: Please pick up the pillow from the dresser.");
  const auto acts = of_kind(e, EventKind::Action);
  REQUIRE(acts.size() == 3);
  CHECK(acts[0]->agent_id == "commander");
  CHECK(acts[1]->agent_id == "follower");
  CHECK(acts[2]->agent_id == "commander");
}

TEST_CASE("ask reaches the human and the answer comes back") {
  auto sc = generate_task(TaskType::Household, 1);
  sc.task.roles.front().action_space = "household_ask";
  const auto id = sc.task.roles.front().agent_id;

  SUBCASE("answered") {
    Recorder r;
    r.replies = {"YES.", "Act: ask [Where is the lettuce?]", "Act: stop [x]"};
    EpisodeHooks hooks;
    std::string asked;
    hooks.human = [&](std::string_view, std::string_view q) {
      asked = std::string(q);
      return std::optional<std::string>("On the counter.");
    };
    const auto e = run_episode(sc.scene, sc.task, {{id, r.backend()}}, limits_for(), hooks);
    CHECK(asked == "Where is the lettuce?");
    REQUIRE(r.calls.size() == 3);
    CHECK(r.calls[2].back().text.rfind("Human: On the counter.\nFeedback: Action succeeded.", 0) == 0);
    CHECK(of_kind(e, EventKind::Ask).size() == 1);
    CHECK(of_kind(e, EventKind::HumanAnswer).size() == 1);
    CHECK(replay_episode(e).consistent);
  }
  SUBCASE("timeout fails the turn") {
    EpisodeHooks silent;
    silent.human = [](std::string_view, std::string_view) { return std::optional<std::string>{}; };
    const auto e = run_episode(sc.scene, sc.task, {{id, scripted({"YES.", "Act: ask [Where?]", "Act: stop [x]"})}}, limits_for(), silent);
    const auto fbs = of_kind(e, EventKind::Feedback);
    REQUIRE(fbs.size() == 2);
    CHECK(fbs[0]->payload["ok"] == false);
    CHECK(replay_episode(e).consistent);
  }
  SUBCASE("no human channel") {
    const auto e = run_episode(sc.scene, sc.task, {{id, scripted({"YES.", "Act: ask [Where?]", "Act: stop [x]"})}}, limits_for());
    CHECK(of_kind(e, EventKind::Feedback)[0]->payload["message"] == "Action failed. Nobody can answer your question.");
    CHECK(replay_episode(e).consistent);
  }
}

TEST_CASE("episodes persist, replay and detect tampering") {
  const auto sc = generate_task(TaskType::Household, 4);
  const auto id = sc.task.roles.front().agent_id;
  auto l = limits_for();
  l.expert_len = static_cast<int>(generate_trajectory(sc.scene, sc.task).size());
  const auto e = run_episode(sc.scene, sc.task, {{id, scripted(expert_script(sc))}}, l);
  const auto jsonl = episode_to_jsonl(e);
  const auto back = episode_from_jsonl(jsonl);
  CHECK(episode_to_jsonl(back) == jsonl);
  CHECK(replay_episode(back).consistent);

  auto tampered = back;
  std::size_t idx = 0;
  for (std::size_t i = 0; i < tampered.events.size(); ++i) {
    if (tampered.events[i].kind == EventKind::Feedback) {
      idx = i;
      break;
    }
  }
  tampered.events[idx].payload["message"] = "Action succeeded. Something else.";
  const auto r = replay_episode(tampered);
  CHECK_FALSE(r.consistent);
  CHECK(r.first_divergence == idx);

  auto wrong_score = back;
  wrong_score.score.steps += 1;
  CHECK(replay_episode(wrong_score).first_divergence == wrong_score.events.size());

  CHECK_THROWS_AS(episode_from_jsonl("{}"), Error);
  CHECK_THROWS_AS(episode_from_jsonl("not json\n"), Error);
}

TEST_CASE("rearrangement episodes round-trip with their target state") {
  const auto sc = generate_task(TaskType::Rearrangement, 8);
  const auto id = sc.task.roles.front().agent_id;
  const auto e = run_episode(sc.scene, sc.task, {{id, scripted(expert_script(sc))}}, limits_for());
  const auto back = episode_from_jsonl(episode_to_jsonl(e));
  REQUIRE(back.task.target_state);
  CHECK(*back.task.target_state == *sc.task.target_state);
  CHECK(replay_episode(back).consistent);
}

TEST_CASE("identical inputs give identical transcripts") {
  for (auto type : {TaskType::IG, TaskType::IQA}) {
    const auto sc = generate_task(type, 9);
    const auto id = sc.task.roles.front().agent_id;
    const auto a = run_episode(sc.scene, sc.task, {{id, scripted(expert_script(sc))}}, limits_for());
    const auto b = run_episode(sc.scene, sc.task, {{id, scripted(expert_script(sc))}}, limits_for());
    CHECK(episode_to_jsonl(a) == episode_to_jsonl(b));
  }
}

TEST_CASE("reflexion runs a second trial with the reflection in memory") {
  const auto sc = generate_task(TaskType::IG, 2);
  const auto id = sc.task.roles.front().agent_id;
  Recorder r;
  r.replies = {"YES", "Act: stop [x]", "Pick up the key before stopping."};
  for (const auto& s : expert_script(sc)) r.replies.push_back(s);
  const auto e = run_episode(sc.scene, sc.task, {{id, r.backend()}}, limits_for(StrategyKind::Reflexion));
  CHECK(e.outcome.success);
  CHECK(e.trials == 2);
  CHECK(r.calls[2].front().text.find("New plan:") != std::string::npos);
  CHECK(r.calls[3].front().text.find("Your memory from last trails is: Pick up the key before stopping.") != std::string::npos);
  CHECK(e.score.llm_calls == static_cast<int>(r.replies.size()));
  CHECK(replay_episode(episode_from_jsonl(episode_to_jsonl(e))).consistent);
}

TEST_CASE("events stream to the sink in order") {
  const auto sc = generate_task(TaskType::IG, 2);
  const auto id = sc.task.roles.front().agent_id;
  std::vector<TranscriptEvent> seen;
  EpisodeHooks hooks;
  hooks.on_event = [&](const TranscriptEvent& ev) { seen.push_back(ev); };
  const auto e = run_episode(sc.scene, sc.task, {{id, scripted(expert_script(sc))}}, limits_for(), hooks);
  CHECK(seen == e.events);
}
