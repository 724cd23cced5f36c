#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include "langworld/error.hpp"
#include "langworld/generator.hpp"
#include "langworld/promptkit.hpp"
#include "langworld/text.hpp"
#include "support.hpp"

using namespace langworld;
using namespace testing_support;

namespace {

Scenario family_scenario(TaskType t) {
  if (t == TaskType::MAWAH) return mawah_transcript_scenario();
  return generate_task(t, 3);
}

std::string family_slug(TaskType t) {
  auto s = text::lower(task_type_name(t));
  return text::replace_all(s, "-", "_");
}

std::string strategy_slug(StrategyKind k) {
  auto s = text::lower(strategy_name(k));
  return text::replace_all(s, "+", "_");
}

// System prompt and first turn for every role of the task.
std::string render_all(const Scenario& sc, StrategyKind k) {
  const auto strategy = Strategy::of(k);
  std::string out;
  for (const auto& role : sc.task.roles) {
    const auto belief = initial_belief(sc.scene, sc.task.placement_target);
    const auto obs = render_observation(sc.scene, role.agent_id, sc.task.observation_style(), &belief, 0);
    out += "=== " + role.agent_id + " system\n";
    out += build_system_prompt(sc.task, sc.scene, role.agent_id, strategy) + "\n";
    out += "=== " + role.agent_id + " turn\n";
    out += build_task_prompt(sc.task, sc.scene, role.agent_id, strategy, obs.text) + "\n";
  }
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<TaskType> kFamilies = {TaskType::IG,        TaskType::Rearrangement, TaskType::IQA,
                                         TaskType::Household, TaskType::MATeach,       TaskType::MAWAH};

}  // namespace

TEST_CASE("prompts match the golden fixtures") {
  const bool update = std::getenv("LANGWORLD_UPDATE_GOLDEN") != nullptr;
  for (auto t : kFamilies) {
    const auto sc = family_scenario(t);
    for (auto k : kAllStrategies) {
      const auto path = fixture("golden/" + family_slug(t) + "_" + strategy_slug(k) + ".txt");
      const auto got = render_all(sc, k);
      if (update) {
        std::filesystem::create_directories(path.parent_path());
        std::ofstream(path, std::ios::binary) << got;
      }
      INFO(path.string());
      REQUIRE(std::filesystem::exists(path));
      CHECK(got == slurp(path));
    }
  }
}

TEST_CASE("rendered prompts leave no slot unbound") {
  const std::regex slot(R"(\{[a-z_]+\})");
  for (auto t : kFamilies) {
    const auto sc = family_scenario(t);
    for (auto k : kAllStrategies) CHECK_FALSE(std::regex_search(render_all(sc, k), slot));
  }
}

TEST_CASE("view descriptions follow the agent configuration") {
  const auto ig = generate_task(TaskType::IG, 1);
  const auto id = ig.task.roles.front().agent_id;
  CHECK(build_system_prompt(ig.task, ig.scene, id, Strategy::of(StrategyKind::ReAct))
            .find("You can see at most 7 step(s) in front of you, 3 step(s) on your left") != std::string::npos);

  const auto re = generate_task(TaskType::Rearrangement, 1);
  CHECK(build_system_prompt(re.task, re.scene, re.task.roles.front().agent_id, Strategy::of(StrategyKind::Act))
            .find("You can see at most 8.0 step(s) in front of you; 60 degrees on your left") != std::string::npos);
}

TEST_CASE("strategy-specific prompt content") {
  const auto sc = generate_task(TaskType::Household, 2);
  const auto id = sc.task.roles.front().agent_id;
  const auto obs = render_observation(sc.scene, id, sc.task.observation_style()).text;

  SUBCASE("Act drops thought rules and exemplar thoughts") {
    const auto p = build_system_prompt(sc.task, sc.scene, id, Strategy::of(StrategyKind::Act));
    CHECK(p.find("Thought") == std::string::npos);
    CHECK(build_task_prompt(sc.task, sc.scene, id, Strategy::of(StrategyKind::Act), obs).find("think") == std::string::npos);
  }
  SUBCASE("ReAct asks for thoughts") {
    const auto p = build_system_prompt(sc.task, sc.scene, id, Strategy::of(StrategyKind::ReAct));
    CHECK(p.find("Thought: ") != std::string::npos);
    CHECK(std::string_view(build_task_prompt(sc.task, sc.scene, id, Strategy::of(StrategyKind::ReAct), obs)).ends_with(" Try to think before act."));
  }
  SUBCASE("EmMem uses the status exemplar") {
    const auto p = build_system_prompt(sc.task, sc.scene, id, Strategy::of(StrategyKind::ReActEmMem));
    CHECK(p.find("I have taken 0 steps and I am facing NORTH now") != std::string::npos);
    CHECK(build_task_prompt(sc.task, sc.scene, id, Strategy::of(StrategyKind::ReActEmMem), obs)
              .find("Try to summarize your status") != std::string::npos);
  }
  SUBCASE("Reflexion carries the memory line") {
    const auto s = Strategy::of(StrategyKind::Reflexion);
    CHECK(build_system_prompt(sc.task, sc.scene, id, s).find("Your memory from last trails is:") != std::string::npos);
    CHECK(build_system_prompt(sc.task, sc.scene, id, s, {}, "open the fridge first")
              .find("Your memory from last trails is: open the fridge first") != std::string::npos);
    CHECK(build_system_prompt(sc.task, sc.scene, id, Strategy::of(StrategyKind::ReAct)).find("memory") == std::string::npos);
  }
  SUBCASE("custom examples replace the exemplar") {
    const auto p = build_system_prompt(sc.task, sc.scene, id, Strategy::of(StrategyKind::ReAct), {"EXAMPLE-ONE", "EXAMPLE-TWO"});
    CHECK(p.find("EXAMPLE-ONE\n\nEXAMPLE-TWO") != std::string::npos);
  }
  SUBCASE("rules are numbered from one") {
    const auto p = build_system_prompt(sc.task, sc.scene, id, Strategy::of(StrategyKind::Act));
    CHECK(p.find("\n1. ") != std::string::npos);
    CHECK(p.find("\n2. ") != std::string::npos);
  }
}

TEST_CASE("multi-agent prompts name the partner") {
  const auto wah = mawah_transcript_scenario();
  const auto p = build_system_prompt(wah.task, wah.scene, "alice", Strategy::of(StrategyKind::ReAct));
  CHECK(p.find("Your name is Alice") != std::string::npos);
  CHECK(p.find("your friend Bob") != std::string::npos);

  const auto teach = generate_task(TaskType::MATeach, 1);
  CHECK(template_family(teach.task, "commander") == "ma_teach_commander");
  CHECK(template_family(teach.task, "follower") == "ma_teach_follower");
  CHECK_THROWS_AS(template_family(teach.task, "nobody"), Error);
}

TEST_CASE("strategies") {
  CHECK(Strategy::of(StrategyKind::Reflexion).max_trials == 2);
  CHECK(Strategy::of(StrategyKind::ReAct).max_trials == 1);
  CHECK(Strategy::of(StrategyKind::ReflexionEmMem, 4).max_trials == 4);
  CHECK_THROWS_AS(Strategy::of(StrategyKind::Reflexion, 0), Error);
  for (auto k : kAllStrategies) CHECK(parse_strategy(strategy_name(k)) == k);
  CHECK(parse_strategy("react_emmem") == StrategyKind::ReActEmMem);
  CHECK_FALSE(parse_strategy("tot"));
}

TEST_CASE("parse_agent_reply classifies replies") {
  const auto& ig = builtin_action_space("ig");
  const auto& wah = builtin_action_space("ma_wah");

  SUBCASE("plain action") {
    const auto r = parse_agent_reply("Act: pick_up [red key].", ig);
    CHECK(r.kind == ReplyKind::Act);
    REQUIRE(r.call);
    CHECK(r.call->spec.name == "pick_up");
    CHECK(r.call->args == std::vector<std::string>{"red key"});
  }
  SUBCASE("thought comes first") {
    const auto text = "Thought: the key is ahead.\nAct: move_ahead";
    const auto r = parse_agent_reply(text, ig);
    CHECK(r.kind == ReplyKind::Thought);
    CHECK(r.text == "the key is ahead.");
    CHECK(r.has_pending_action);
    const auto again = parse_agent_reply(text, ig, true);
    CHECK(again.kind == ReplyKind::Act);
    CHECK(again.call->spec.name == "move_ahead");
  }
  SUBCASE("bracketed thought") {
    const auto r = parse_agent_reply("thought [check the fridge]", wah);
    CHECK(r.kind == ReplyKind::Thought);
    CHECK(r.text == "check the fridge");
  }
  SUBCASE("multi-line thought") {
    const auto r = parse_agent_reply("> Thought: first line\n> second line", ig);
    CHECK(r.text == "first line second line");
  }
  SUBCASE("chat and stop") {
    const auto c = parse_agent_reply("Act: chat [I found the wine, where should it go?]", wah);
    CHECK(c.kind == ReplyKind::Chat);
    CHECK(c.text == "I found the wine, where should it go?");
    CHECK(parse_agent_reply("Act: stop [done]", ig).kind == ReplyKind::Stop);
    const auto a = parse_agent_reply("Act: answer [True]", builtin_action_space("iqa"));
    CHECK(a.kind == ReplyKind::Stop);
    CHECK(a.text == "True");
  }
  SUBCASE("first action wins") {
    const auto r = parse_agent_reply("Act: turn_left\nAct: move_ahead", ig);
    REQUIRE(r.call);
    CHECK(r.call->spec.name == "turn_left");
    CHECK(r.call->multi_action);
  }
  SUBCASE("garbage yields a warning") {
    for (const char* s : {"", "   ", "I am not sure.", "Act: fly [moon]", "Act: pick_up"}) {
      const auto r = parse_agent_reply(s, ig);
      CHECK(r.kind == ReplyKind::Thought);
      CHECK(r.warning);
      CHECK_FALSE(r.call);
    }
  }
}

TEST_CASE("dialogue transcript") {
  Dialogue d;
  d.system("Obs: a key");
  d.assistant("Act: pick_up [key]");
  CHECK(d.transcript("Alice") == "System: Obs: a key\nAlice: Act: pick_up [key]\n");
}

TEST_CASE("scripted, budgeted and human backends") {
  auto inner = std::make_shared<ScriptedBackend>(std::vector<std::string>{"a", "b", "c"});
  BudgetedBackend b(inner, 2);
  CHECK(b.complete({}) == "a");
  CHECK(b.complete({}) == "b");
  try {
    b.complete({});
    FAIL("expected BudgetExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BudgetExceeded);
  }
  CHECK(b.calls() == 2);
  CHECK(inner->remaining() == 1);
  CHECK(inner->complete({}) == "c");
  CHECK_THROWS_AS(inner->complete({}), Error);

  HumanBackend h([](const std::vector<ChatMessage>&) { return std::optional<std::string>{}; });
  try {
    h.complete({});
    FAIL("expected HumanTimeout");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::HumanTimeout);
  }
}

TEST_CASE("http backend retries with exponential backoff") {
  CompletionParams params;
  params.endpoint = "http://127.0.0.1:9/v1/chat/completions";
  params.max_retries = 3;
  const std::string ok = R"({"choices":[{"message":{"role":"assistant","content":"Act: move_ahead"}}]})";

  SUBCASE("transient failures then success") {
    std::vector<int> statuses = {429, 503, 200};
    std::size_t i = 0;
    std::string last_body;
    HttpBackend b(params, [&](const std::string& body) -> std::optional<HttpResponse> {
      last_body = body;
      const int s = statuses[i++];
      return HttpResponse{s, s == 200 ? ok : "busy"};
    });
    std::vector<long> sleeps;
    b.set_sleep([&](std::chrono::milliseconds d) { sleeps.push_back(static_cast<long>(d.count())); });
    CHECK(b.complete({{Speaker::System, "hi"}, {Speaker::Assistant, "YES"}, {Speaker::System, "Obs"}}) == "Act: move_ahead");
    CHECK(b.attempts() == 3);
    CHECK(sleeps == std::vector<long>{200, 400});
    const auto j = Json::parse(last_body);
    CHECK(j["model"] == "gpt-3.5-turbo");
    CHECK(j["messages"][0]["role"] == "system");
    CHECK(j["messages"][1]["role"] == "assistant");
    CHECK(j["messages"][2]["role"] == "user");
  }
  SUBCASE("gives up after max_retries") {
    HttpBackend b(params, [](const std::string&) { return std::optional<HttpResponse>{HttpResponse{500, ""}}; });
    b.set_sleep([](std::chrono::milliseconds) {});
    try {
      b.complete({});
      FAIL("expected BackendError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BackendError);
    }
    CHECK(b.attempts() == 4);
  }
  SUBCASE("client errors are not retried") {
    HttpBackend b(params, [](const std::string&) { return std::optional<HttpResponse>{HttpResponse{401, ""}}; });
    CHECK_THROWS_AS(b.complete({}), Error);
    CHECK(b.attempts() == 1);
  }
  SUBCASE("connection failure is a timeout") {
    HttpBackend b(params, [](const std::string&) { return std::optional<HttpResponse>{}; });
    try {
      b.complete({});
      FAIL("expected Timeout");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Timeout);
    }
  }
  SUBCASE("malformed body") {
    HttpBackend b(params, [](const std::string&) { return std::optional<HttpResponse>{HttpResponse{200, "{}"}}; });
    CHECK_THROWS_AS(b.complete({}), Error);
  }
}

TEST_CASE("reflection") {
  ScriptedBackend b({"  Next time open the fridge first.  "});
  const auto s = Strategy::of(StrategyKind::Reflexion);
  CHECK(reflect(b, "System: Obs\nAgent: Act: stop", s, 0) == "Next time open the fridge first.");
  try {
    reflect(b, "x", s, 1);
    FAIL("expected TrialLimit");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TrialLimit);
  }
  CHECK_THROWS_AS(reflect(b, "x", Strategy::of(StrategyKind::ReAct), 0), Error);
  CHECK(reflection_request("TRANSCRIPT").find("TRANSCRIPT\nNew plan:") != std::string::npos);
}
