#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <httplib.h>

#include "langworld/error.hpp"
#include "langworld/gateway.hpp"
#include "langworld/planner.hpp"
#include "langworld/scene_io.hpp"
#include "langworld/text.hpp"

namespace fs = std::filesystem;
using namespace langworld;

namespace {

struct Common {
  std::uint64_t seed = 1;
  std::optional<int> step_limit;
  std::string strategy = "ReAct";
  std::string backend = "mock";
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "First seed");
  cmd->add_option("--step-limit", c.step_limit, "Override the task step limit");
  cmd->add_option("--strategy", c.strategy, "Act, ReAct, EmMem or Reflexion");
  cmd->add_option("--backend", c.backend, "expert, mock, script:<file> or http");
  cmd->add_option("--out", c.out, "Output directory");
}

Strategy strategy_of(const Common& c, int max_trials = 1) {
  const auto kind = parse_strategy(c.strategy);
  if (!kind) throw Error(ErrorCode::ConfigError, "unknown strategy " + c.strategy);
  return Strategy::of(*kind, *kind == StrategyKind::Reflexion ? max_trials : 1);
}

std::optional<TaskType> family_of(std::string_view name) {
  for (auto t : {TaskType::IG, TaskType::Rearrangement, TaskType::IQA, TaskType::Household, TaskType::MATeach, TaskType::MAWAH}) {
    if (generated_scene_id(t, 0).rfind(std::string(name) + "_", 0) == 0 || text::lower(task_type_name(t)) == text::lower(name)) {
      return t;
    }
  }
  return std::nullopt;
}

std::vector<std::string> refs_for(const std::vector<std::string>& tasks, const std::string& family, int count,
                                  std::uint64_t seed) {
  std::vector<std::string> refs = tasks;
  if (!family.empty()) {
    const auto t = family_of(family);
    if (!t) throw Error(ErrorCode::ConfigError, "unknown family " + family);
    for (int i = 0; i < count; ++i) refs.push_back(generated_scene_id(*t, seed + static_cast<std::uint64_t>(i)));
  }
  if (refs.empty()) throw Error(ErrorCode::ConfigError, "no tasks given");
  return refs;
}

void write_file(const fs::path& p, std::string_view body) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot write " + p.string());
  f << body;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<fs::path> jsonl_files(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::recursive_directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.emplace_back(in);
    }
  }
  return out;
}

std::optional<int> expert_length(const Scenario& sc) {
  if (sc.task.roles.size() != 1) return std::nullopt;
  try {
    return static_cast<int>(generate_trajectory(sc.scene, sc.task).size());
  } catch (const Error&) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------

struct RunArgs {
  Common c;
  std::vector<std::string> tasks;
  std::string manifest;
  std::string family;
  int count = 1;
  int trials = 3;
  std::vector<std::string> task_dirs;
};

int cmd_run(RunArgs a) {
  if (!a.manifest.empty()) {
    const Json m = read_json_file(a.manifest);
    const std::string where = "run manifest";
    if (const auto* f = json_util::optional(m, "tasks")) {
      for (const auto& t : json_util::as_array(*f, where)) a.tasks.push_back(json_util::as_string(t, where));
    }
    if (const auto* f = json_util::optional(m, "family")) a.family = json_util::as_string(*f, where);
    if (const auto* f = json_util::optional(m, "count")) a.count = static_cast<int>(json_util::as_integer(*f, where));
    if (const auto* f = json_util::optional(m, "seed")) a.c.seed = static_cast<std::uint64_t>(json_util::as_integer(*f, where));
    if (const auto* f = json_util::optional(m, "strategy")) a.c.strategy = json_util::as_string(*f, where);
    if (const auto* f = json_util::optional(m, "backend")) a.c.backend = json_util::as_string(*f, where);
    if (const auto* f = json_util::optional(m, "step_limit")) a.c.step_limit = static_cast<int>(json_util::as_integer(*f, where));
  }
  const auto strategy = strategy_of(a.c, a.trials);
  const fs::path out = a.c.out.empty() ? fs::path("runs") : fs::path(a.c.out);
  std::vector<fs::path> dirs(a.task_dirs.begin(), a.task_dirs.end());

  std::vector<EpisodeScore> scores;
  std::string score_lines;
  for (const auto& ref : refs_for(a.tasks, a.family, a.count, a.c.seed)) {
    const auto sc = resolve_task_ref(ref, dirs);
    BackendMap backends;
    for (const auto& r : sc.task.roles) backends[r.agent_id] = make_backend(a.c.backend, sc, r.agent_id);
    Limits limits;
    limits.strategy = strategy;
    limits.step_limit = a.c.step_limit;
    limits.seed = a.c.seed;
    limits.episode_id = ref;
    limits.expert_len = expert_length(sc);
    const auto ep = run_episode(sc.scene, sc.task, backends, limits);
    write_file(out / "episodes" / (ref + ".jsonl"), episode_to_jsonl(ep));
    scores.push_back(ep.score);
    score_lines += score_to_json(ep.score).dump() + "\n";
    std::cout << fmt::format("{:<28} {:<22} steps={}\n", ref, ep.outcome.label(), ep.score.steps);
  }
  write_file(out / "scores.jsonl", score_lines);
  const auto summary = aggregate_by_type(scores);
  Json sj = Json::array();
  for (const auto& s : summary) sj.push_back(summary_to_json(s));
  write_file(out / "summary.json", sj.dump(2) + "\n");
  std::cout << "\n" << summary_table(summary);
  return 0;
}

int cmd_expert_gen(const Common& c, const std::string& family, int count) {
  const fs::path out = c.out.empty() ? fs::path("expert") : fs::path(c.out);
  for (const auto& ref : refs_for({}, family, count, c.seed)) {
    const auto sc = resolve_task_ref(ref);
    if (sc.task.roles.size() != 1) throw Error(ErrorCode::ConfigError, "expert-gen needs a single-agent family");
    const auto calls = generate_trajectory(sc.scene, sc.task);
    write_file(out / "trajectories" / (ref + ".jsonl"), trajectory_jsonl(calls, sc.task.roles.front().agent_id));
    BackendMap backends;
    backends[sc.task.roles.front().agent_id] = make_backend("expert", sc, sc.task.roles.front().agent_id);
    Limits limits;
    limits.strategy = strategy_of(c);
    limits.step_limit = c.step_limit;
    limits.seed = c.seed;
    limits.episode_id = ref;
    limits.expert_len = static_cast<int>(calls.size());
    const auto ep = run_episode(sc.scene, sc.task, backends, limits);
    write_file(out / "episodes" / (ref + ".jsonl"), episode_to_jsonl(ep));
    std::cout << fmt::format("{:<28} {:>3} actions  {}\n", ref, calls.size(), ep.outcome.label());
  }
  return 0;
}

int cmd_replay(const std::vector<std::string>& inputs) {
  int diverged = 0;
  int checked = 0;
  for (const auto& path : jsonl_files(inputs)) {
    const auto ep = episode_from_jsonl(read_file(path));
    const auto report = replay_episode(ep);
    ++checked;
    if (report.consistent) {
      std::cout << fmt::format("ok        {}  {}\n", path.string(), ep.outcome.label());
    } else {
      ++diverged;
      std::cout << fmt::format("diverged  {}  at {}: {}\n", path.string(),
                               report.first_divergence ? std::to_string(*report.first_divergence) : "?", report.detail);
    }
  }
  std::cout << fmt::format("{} of {} episodes consistent\n", checked - diverged, checked);
  return diverged == 0 && checked > 0 ? 0 : 1;
}

// Score lines, score files, or episode files (their outcome line carries the score).
std::vector<EpisodeScore> load_scores(const std::vector<std::string>& inputs) {
  std::vector<EpisodeScore> out;
  for (const auto& path : jsonl_files(inputs)) {
    for (const auto& line : text::split_lines(read_file(path))) {
      if (text::trim(line).empty()) continue;
      const Json j = Json::parse(line);
      const auto type = j.value("type", "");
      if (type == "outcome") {
        out.push_back(score_from_json(j.at("score")));
      } else if (type.empty()) {
        out.push_back(score_from_json(j));
      }
    }
  }
  return out;
}

int cmd_metrics(const Common& c, const std::vector<std::string>& inputs) {
  const auto summary = aggregate_by_type(load_scores(inputs));
  std::cout << summary_table(summary);
  if (!c.out.empty()) {
    Json sj = Json::array();
    for (const auto& s : summary) sj.push_back(summary_to_json(s));
    write_file(fs::path(c.out) / "summary.json", sj.dump(2) + "\n");
  }
  return 0;
}

int cmd_generate(const Common& c, const std::string& family, int count) {
  const fs::path out = c.out.empty() ? fs::path("tasks") : fs::path(c.out);
  for (const auto& ref : refs_for({}, family, count, c.seed)) {
    const auto sc = resolve_task_ref(ref);
    write_file(out / "scenes" / (sc.task.scene_ref + ".json"), scene_to_json(sc.scene).dump(2) + "\n");
    if (sc.task.target_state && !sc.task.target_state_ref.empty()) {
      write_file(out / "scenes" / (sc.task.target_state_ref + ".json"), scene_to_json(*sc.task.target_state).dump(2) + "\n");
    }
    write_file(out / "tasks" / (sc.task.id + ".json"), task_to_json(sc.task).dump(2) + "\n");
    std::cout << sc.task.id << "\n";
  }
  return 0;
}

// Reads one line from stdin; nothing at end of input.
std::optional<std::string> read_line(std::string_view prompt) {
  std::cout << prompt << std::flush;
  std::string line;
  if (!std::getline(std::cin, line)) return std::nullopt;
  return line;
}

int cmd_play(const Common& c, const std::string& task, const std::vector<std::string>& roles,
             const std::vector<std::string>& task_dirs) {
  const auto sc = resolve_task_ref(task, {task_dirs.begin(), task_dirs.end()});
  std::set<std::string> humans;
  for (const auto& r : sc.task.roles) {
    const bool chosen = roles.empty() ? &r == &sc.task.roles.front()
                                      : std::find(roles.begin(), roles.end(), r.agent_id) != roles.end() ||
                                            std::find(roles.begin(), roles.end(), role_name(r.role)) != roles.end();
    if (chosen) humans.insert(r.agent_id);
  }
  if (humans.empty()) throw Error(ErrorCode::RoleConflict, "no task role matches the requested roles");

  BackendMap backends;
  for (const auto& r : sc.task.roles) {
    if (!humans.count(r.agent_id)) {
      backends[r.agent_id] = make_backend(c.backend, sc, r.agent_id);
      continue;
    }
    const std::string agent = r.agent_id;
    backends[agent] = std::make_shared<HumanBackend>([agent](const std::vector<ChatMessage>& m) -> std::optional<std::string> {
      // The instruction is shown and confirmed automatically.
      if (m.size() == 1) {
        std::cout << m.front().text << "\n\n";
        return std::string("YES.");
      }
      std::cout << "\n" << m.back().text << "\n";
      return read_line(fmt::format("{}> ", agent));
    });
  }
  Limits limits;
  limits.strategy = strategy_of(c);
  limits.step_limit = c.step_limit;
  limits.seed = c.seed;
  limits.episode_id = task;
  limits.expert_len = expert_length(sc);
  EpisodeHooks hooks;
  hooks.human = [](std::string_view agent, std::string_view q) {
    std::cout << fmt::format("\n{} asks: {}\n", agent, q);
    return read_line("answer> ");
  };
  hooks.on_event = [&humans](const TranscriptEvent& ev) {
    if (humans.count(ev.agent_id)) return;
    if (ev.kind == EventKind::Action) std::cout << fmt::format("[{}] {}\n", ev.agent_id, ev.payload.value("text", ""));
    if (ev.kind == EventKind::Chat) std::cout << fmt::format("[{}] {}\n", ev.agent_id, ev.payload.value("line", ""));
  };
  const auto ep = run_episode(sc.scene, sc.task, backends, limits, hooks);
  std::cout << fmt::format("\n{}  steps={}  goal_sr={:.1f}\n", ep.outcome.label(), ep.score.steps, ep.score.goal_sr);
  if (!c.out.empty()) write_file(fs::path(c.out) / (task + ".jsonl"), episode_to_jsonl(ep));
  return 0;
}

httplib::Server* g_server = nullptr;

int cmd_serve(const std::string& host, int port, const std::vector<std::string>& task_dirs, int ask_timeout) {
  SessionManager sessions({task_dirs.begin(), task_dirs.end()}, std::chrono::seconds(ask_timeout));
  httplib::Server server;
  install_routes(server, sessions);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  if (port == 0) {
    port = server.bind_to_any_port(host);
    if (port < 0) throw Error(ErrorCode::ConfigError, "cannot bind " + host);
    std::cout << fmt::format("listening on http://{}:{}/v1\n", host, port) << std::flush;
    server.listen_after_bind();
  } else {
    std::cout << fmt::format("listening on http://{}:{}/v1\n", host, port) << std::flush;
    if (!server.listen(host, port)) throw Error(ErrorCode::ConfigError, fmt::format("cannot listen on {}:{}", host, port));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"langworld: textual embodied tasks for language agents"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Benchmark a task set with a strategy and backend");
  add_common(run_cmd, run.c);
  run_cmd->add_option("--task", run.tasks, "Task ref (repeatable)");
  run_cmd->add_option("--manifest", run.manifest, "Run manifest JSON");
  run_cmd->add_option("--family", run.family, "Generated family: ig, rearrangement, iqa, household, ma_teach, ma_wah");
  run_cmd->add_option("--count", run.count, "Seeds per family");
  run_cmd->add_option("--trials", run.trials, "Reflexion trials");
  run_cmd->add_option("--task-dir", run.task_dirs, "Directory of task files");

  Common eg;
  std::string eg_family = "rearrangement";
  int eg_count = 10;
  auto* eg_cmd = app.add_subcommand("expert-gen", "Write expert trajectories and their episodes");
  add_common(eg_cmd, eg);
  eg_cmd->add_option("--family", eg_family, "Single-agent family");
  eg_cmd->add_option("--count", eg_count, "Number of seeds");

  Common rp;
  std::vector<std::string> rp_files;
  auto* rp_cmd = app.add_subcommand("replay", "Verify episode files");
  add_common(rp_cmd, rp);
  rp_cmd->add_option("files", rp_files, "Episode files or directories")->required();

  Common mt;
  std::vector<std::string> mt_files;
  auto* mt_cmd = app.add_subcommand("metrics", "Aggregate score or episode files");
  add_common(mt_cmd, mt);
  mt_cmd->add_option("files", mt_files, "Score files, episode files or directories")->required();

  Common pl;
  std::string pl_task;
  std::vector<std::string> pl_roles;
  std::vector<std::string> pl_dirs;
  auto* pl_cmd = app.add_subcommand("play", "Play a task in the terminal");
  add_common(pl_cmd, pl);
  pl_cmd->add_option("--task", pl_task, "Task ref")->required();
  pl_cmd->add_option("--role", pl_roles, "Roles or agent ids played by you (default: the first role)");
  pl_cmd->add_option("--task-dir", pl_dirs, "Directory of task files");

  Common sv;
  std::string sv_host = "127.0.0.1";
  int sv_port = 8080;
  int sv_ask_timeout = 120;
  std::vector<std::string> sv_dirs;
  auto* sv_cmd = app.add_subcommand("serve", "Start the HTTP session service");
  add_common(sv_cmd, sv);
  sv_cmd->add_option("--host", sv_host, "Bind address");
  sv_cmd->add_option("--port", sv_port, "Port, 0 for any free port");
  sv_cmd->add_option("--task-dir", sv_dirs, "Directory of task files");
  sv_cmd->add_option("--ask-timeout", sv_ask_timeout, "Seconds to wait for a human answer");

  Common gn;
  std::string gn_family = "household";
  int gn_count = 1;
  auto* gn_cmd = app.add_subcommand("generate", "Write seeded scene and task files");
  add_common(gn_cmd, gn);
  gn_cmd->add_option("--family", gn_family, "Family");
  gn_cmd->add_option("--count", gn_count, "Number of seeds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*eg_cmd) return cmd_expert_gen(eg, eg_family, eg_count);
    if (*rp_cmd) return cmd_replay(rp_files);
    if (*mt_cmd) return cmd_metrics(mt, mt_files);
    if (*pl_cmd) return cmd_play(pl, pl_task, pl_roles, pl_dirs);
    if (*sv_cmd) return cmd_serve(sv_host, sv_port, sv_dirs, sv_ask_timeout);
    if (*gn_cmd) return cmd_generate(gn, gn_family, gn_count);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
