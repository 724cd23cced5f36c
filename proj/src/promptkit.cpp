#include "langworld/promptkit.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "langworld/error.hpp"
#include "langworld/perception.hpp"
#include "langworld/text.hpp"

namespace langworld {

// ---------------------------------------------------------------------------
// Strategies

std::string_view strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::Act: return "Act";
    case StrategyKind::ReAct: return "ReAct";
    case StrategyKind::ReActEmMem: return "ReAct+EmMem";
    case StrategyKind::Reflexion: return "Reflexion";
    case StrategyKind::ReflexionEmMem: return "Reflexion+EmMem";
  }
  return "ReAct";
}

std::optional<StrategyKind> parse_strategy(std::string_view name) {
  auto key = text::lower(text::trim(name));
  key = text::replace_all(key, "_", "+");
  key = text::replace_all(key, "-", "+");
  for (StrategyKind k : kAllStrategies) {
    if (text::lower(strategy_name(k)) == key) return k;
  }
  if (key == "reactemmem") return StrategyKind::ReActEmMem;
  if (key == "reflexionemmem") return StrategyKind::ReflexionEmMem;
  return std::nullopt;
}

Strategy Strategy::of(StrategyKind kind, std::optional<int> max_trials) {
  Strategy s;
  s.kind = kind;
  s.max_trials = max_trials.value_or(s.reflexion() ? 2 : 1);
  if (s.max_trials < 1) throw Error(ErrorCode::ConfigError, "max_trials must be at least 1");
  if (!s.reflexion() && s.max_trials != 1) throw Error(ErrorCode::ConfigError, "only Reflexion strategies run several trials");
  return s;
}

// ---------------------------------------------------------------------------
// Templates

namespace {

using Sections = std::map<std::string, std::string, std::less<>>;

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingTemplate, "no prompt template " + path.filename().string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// "@@ name" lines open sections; the trailing newline of each section is dropped.
Sections parse_sections(const std::string& body) {
  Sections out;
  std::string current;
  std::string acc;
  bool open = false;
  auto flush = [&] {
    if (!open) return;
    if (!acc.empty() && acc.back() == '\n') acc.pop_back();
    out[current] = acc;
  };
  std::istringstream in(body);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("@@ ", 0) == 0) {
      flush();
      current = std::string(text::trim(line.substr(3)));
      acc.clear();
      open = true;
      continue;
    }
    acc += line;
    acc += '\n';
  }
  flush();
  return out;
}

const Sections& family_template(const std::string& family) {
  static std::mutex mu;
  static std::map<std::string, Sections, std::less<>> cache;
  std::lock_guard lock(mu);
  if (auto it = cache.find(family); it != cache.end()) return it->second;
  auto sections = parse_sections(read_text(data_dir() / "prompts" / (family + ".txt")));
  for (const char* required : {"system", "rules", "turn"}) {
    if (!sections.count(required)) throw Error(ErrorCode::MissingTemplate, fmt::format("template {} lacks @@ {}", family, required));
  }
  return cache.emplace(family, std::move(sections)).first->second;
}

const std::string& shared_emmem_example() {
  static const std::string text = [] {
    auto s = read_text(data_dir() / "prompts" / "emmem_example.txt");
    if (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
  }();
  return text;
}

bool slot_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

// Single pass, so substituted values are never rescanned.
std::string fill(std::string_view tpl, const std::map<std::string, std::string, std::less<>>& slots, std::string_view where) {
  std::string out;
  out.reserve(tpl.size());
  for (std::size_t i = 0; i < tpl.size(); ++i) {
    if (tpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tpl.size() && slot_char(tpl[j])) ++j;
      if (j < tpl.size() && tpl[j] == '}' && j > i + 1) {
        const auto key = tpl.substr(i + 1, j - i - 1);
        const auto it = slots.find(key);
        if (it == slots.end()) throw Error(ErrorCode::UnboundSlot, fmt::format("{}: slot {{{}}} is unbound", where, key));
        out += it->second;
        i = j;
        continue;
      }
    }
    out += tpl[i];
  }
  return out;
}

std::string number(double v) {
  if (std::floor(v) == v && std::abs(v) < 1e9) return std::to_string(static_cast<long long>(v));
  return text::format_real(v);
}

bool rule_applies(std::string_view tag, const Strategy& s) {
  if (tag == "act") return !s.thinks();
  if (tag == "think") return s.thinks();
  if (tag == "plain") return !s.emmem();
  if (tag == "emmem") return s.emmem();
  if (tag == "reflexion") return s.reflexion();
  throw Error(ErrorCode::MissingTemplate, "unknown rule tag " + std::string(tag));
}

std::string render_rules(std::string_view section, const Strategy& s) {
  std::vector<std::string> out;
  int n = 0;
  for (const auto& line : text::split_lines(section)) {
    std::string_view body = line;
    bool numbered = true;
    if (!body.empty() && body.front() == '[') {
      const auto close = body.find(']');
      if (close == std::string_view::npos) throw Error(ErrorCode::MissingTemplate, "bad rule tag in " + line);
      auto tag = body.substr(1, close - 1);
      if (!tag.empty() && tag.back() == '!') {
        numbered = false;
        tag.remove_suffix(1);
      }
      if (!rule_applies(tag, s)) continue;
      body = body.substr(close + 1);
      if (numbered && !body.empty() && body.front() == ' ') body.remove_prefix(1);
    }
    if (numbered) {
      out.push_back(fmt::format("{}. {}", ++n, body));
    } else {
      out.emplace_back(body);
    }
  }
  return text::join(out, "\n");
}

bool is_thought_text(std::string_view line) {
  std::string_view s = text::trim(line);
  while (!s.empty() && (s.front() == '>' || s.front() == ' ')) s.remove_prefix(1);
  return text::starts_with_ci(s, "thought:") || text::starts_with_ci(s, "thought [");
}

bool is_ok_line(std::string_view line) {
  std::string_view s = text::trim(line);
  while (!s.empty() && (s.front() == '>' || s.front() == ' ')) s.remove_prefix(1);
  return s == "OK.";
}

// Act exemplars keep only the action lines.
std::string strip_thoughts(std::string_view example) {
  std::vector<std::string> out;
  bool after_thought = false;
  for (const auto& line : text::split_lines(example)) {
    if (is_thought_text(line)) {
      after_thought = true;
      continue;
    }
    if (after_thought && is_ok_line(line)) continue;
    after_thought = false;
    out.push_back(line);
  }
  return text::join(out, "\n");
}

std::string partner_name(const TaskSpec& task, const WorldState& world, std::string_view agent_id) {
  for (const auto& r : task.roles) {
    if (r.agent_id == agent_id) continue;
    if (const auto* a = world.find_agent(r.agent_id)) return a->display_name();
    return r.agent_id;
  }
  return "";
}

std::map<std::string, std::string, std::less<>> agent_slots(const TaskSpec& task, const WorldState& world,
                                                            std::string_view agent_id) {
  const AgentBody& agent = world.agent(agent_id);
  const auto& cfg = agent.config;
  return {
      {"name", agent.display_name()},
      {"partner", partner_name(task, world, agent_id)},
      {"max_view_steps", number(cfg.view_distance)},
      {"side_steps", std::to_string(cfg.view_shape.side_steps)},
      {"view_distance", text::format_real(cfg.view_distance)},
      {"half_angle", number(cfg.half_angle_degrees())},
      {"capacity", std::to_string(cfg.inventory_capacity)},
      {"manipulate_distance", text::format_real(cfg.manipulate_distance)},
  };
}

std::string turn_suffix(const Sections& tpl, const Strategy& s) {
  if (s.emmem()) return " Try to summarize your status, recall what you have done and think before act.";
  if (!s.thinks()) return "";
  const auto it = tpl.find("think_suffix");
  return it == tpl.end() ? " Try to think before act." : it->second;
}

}  // namespace

std::string template_family(const TaskSpec& task, std::string_view agent_id) {
  switch (task.task_type) {
    case TaskType::IG: return "ig";
    case TaskType::Rearrangement: return "rearrangement";
    case TaskType::IQA: return "iqa";
    case TaskType::Household: return "household";
    case TaskType::MAWAH: return "ma_wah";
    case TaskType::MATeach: {
      const auto* role = task.role_of(agent_id);
      if (!role) throw Error(ErrorCode::UnknownAgent, "agent " + std::string(agent_id) + " has no role");
      return role->role == Role::Commander ? "ma_teach_commander" : "ma_teach_follower";
    }
  }
  throw Error(ErrorCode::MissingTemplate, "no template family");
}

std::string build_system_prompt(const TaskSpec& task, const WorldState& world, std::string_view agent_id,
                                const Strategy& strategy, const std::vector<std::string>& examples, std::string_view memory) {
  const auto family = template_family(task, agent_id);
  const auto& tpl = family_template(family);
  auto slots = agent_slots(task, world, agent_id);

  const auto* role = task.role_of(agent_id);
  if (!role) throw Error(ErrorCode::UnknownAgent, "agent " + std::string(agent_id) + " has no role");
  const auto& space = builtin_action_space(role->action_space);
  const auto fmt_it = tpl.find("action_format");
  const std::string action_format = fmt_it == tpl.end() ? "`{signature}`: {description}" : fmt_it->second;
  std::vector<std::string> actions;
  for (const auto& a : space.actions) {
    auto line_slots = slots;
    line_slots["signature"] = a.signature;
    line_slots["description"] = fill(a.description, slots, family + " action " + a.name);
    actions.push_back(fill(action_format, line_slots, family + " action list"));
  }

  std::string example;
  if (!examples.empty()) {
    example = text::join(examples, "\n\n");
  } else if (strategy.emmem()) {
    const auto it = tpl.find("emmem_example");
    example = it == tpl.end() ? shared_emmem_example() : it->second;
  } else {
    const auto it = tpl.find("example");
    example = it == tpl.end() ? std::string() : it->second;
    if (!strategy.thinks()) example = strip_thoughts(example);
  }

  slots["actions"] = text::join(actions, "\n");
  slots["rules"] = render_rules(tpl.at("rules"), strategy);
  slots["example"] = example;
  slots["memory_line"] = strategy.reflexion() ? fmt::format("Your memory from last trails is: {}\n", memory) : "";
  return fill(tpl.at("system"), slots, family);
}

std::string build_task_prompt(const TaskSpec& task, const WorldState& world, std::string_view agent_id,
                              const Strategy& strategy, std::string_view observation) {
  const auto family = template_family(task, agent_id);
  const auto& tpl = family_template(family);
  auto slots = agent_slots(task, world, agent_id);
  slots["task"] = task.instruction;
  slots["observation"] = std::string(observation);
  slots["suffix"] = turn_suffix(tpl, strategy);
  std::vector<std::string> layout;
  if (task.target_state) {
    for (const auto& room : task.target_state->rooms) layout.push_back(render_room_layout(*task.target_state, room));
  }
  slots["original_state"] = text::join(layout, " ");
  return fill(tpl.at("turn"), slots, family + " turn");
}

// ---------------------------------------------------------------------------
// Dialogue

std::string Dialogue::transcript(std::string_view assistant_name) const {
  std::string out;
  for (const auto& m : messages) {
    out += m.speaker == Speaker::System ? std::string("System") : std::string(assistant_name);
    out += ": ";
    out += m.text;
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Replies

std::string_view reply_kind_name(ReplyKind k) {
  switch (k) {
    case ReplyKind::Thought: return "Thought";
    case ReplyKind::Act: return "Act";
    case ReplyKind::Chat: return "Chat";
    case ReplyKind::Ask: return "Ask";
    case ReplyKind::Stop: return "Stop";
  }
  return "Thought";
}

namespace {

std::string_view strip_quote_markers(std::string_view s) {
  s = text::trim(s);
  while (!s.empty() && (s.front() == '>' || s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

// Thought text of a reply: "Thought: ..." plus continuation lines, or "thought [...]".
std::optional<std::string> extract_thought(std::string_view reply, const ActionSpace& space) {
  std::optional<std::string> thought;
  bool in_thought = false;
  for (const auto& raw : text::split_lines(reply)) {
    const auto line = strip_quote_markers(raw);
    if (text::starts_with_ci(line, "thought")) {
      std::string_view rest = line.substr(7);
      const auto lead = rest.empty() ? '\0' : rest.front();
      if (lead == ':' || lead == ' ' || lead == '[' || rest.empty()) {
        rest = text::trim(rest);
        if (!rest.empty() && rest.front() == ':') rest = text::trim(rest.substr(1));
        if (!rest.empty() && rest.front() == '[') {
          rest.remove_prefix(1);
          const auto close = rest.rfind(']');
          if (close != std::string_view::npos) rest = rest.substr(0, close);
          rest = text::trim(rest);
        }
        if (thought) {
          *thought += ' ';
          *thought += rest;
        } else {
          thought = std::string(rest);
        }
        in_thought = true;
        continue;
      }
    }
    if (line.empty()) {
      in_thought = false;
      continue;
    }
    if (text::starts_with_ci(line, "act:") || text::starts_with_ci(line, "act ")) {
      in_thought = false;
      continue;
    }
    if (in_thought) {
      // An action line ends the thought.
      if (std::holds_alternative<ActionCall>(parse_action(line, space))) {
        in_thought = false;
        continue;
      }
      *thought += ' ';
      *thought += line;
    }
  }
  return thought;
}

AgentReply from_call(ActionCall call, std::string raw) {
  AgentReply r;
  r.raw = std::move(raw);
  const auto& name = call.spec.name;
  if (name == "chat" || name == "ask") {
    r.kind = name == "chat" ? ReplyKind::Chat : ReplyKind::Ask;
    r.text = call.args.empty() ? "" : call.args.front();
  } else if (name == "stop" || name == "answer") {
    r.kind = ReplyKind::Stop;
    r.text = call.args.empty() ? "" : call.args.front();
  } else {
    r.kind = ReplyKind::Act;
    r.text = call.text();
  }
  r.call = std::move(call);
  return r;
}

}  // namespace

AgentReply parse_agent_reply(std::string_view text, const ActionSpace& space, bool thought_acknowledged) {
  AgentReply r;
  r.raw = std::string(text);
  try {
    const auto thought = extract_thought(text, space);
    auto parsed = parse_action(text, space);
    auto* call = std::get_if<ActionCall>(&parsed);
    if (thought && (!call || !thought_acknowledged)) {
      r.kind = ReplyKind::Thought;
      r.text = *thought;
      r.has_pending_action = call != nullptr;
      return r;
    }
    if (call) return from_call(std::move(*call), r.raw);
  } catch (const std::exception&) {
    // Falls through to the warning reply.
  }
  r.kind = ReplyKind::Thought;
  r.text = std::string(text::trim(text));
  r.warning = true;
  return r;
}

// ---------------------------------------------------------------------------
// Backends

ScriptedBackend::ScriptedBackend(std::vector<std::string> replies, std::string label)
    : replies_(std::move(replies)), label_(std::move(label)) {}

std::string ScriptedBackend::complete(const std::vector<ChatMessage>&) {
  std::lock_guard lock(mu_);
  if (next_ >= replies_.size()) throw Error(ErrorCode::BackendError, label_ + " script exhausted");
  return replies_[next_++];
}

std::size_t ScriptedBackend::remaining() const {
  std::lock_guard lock(mu_);
  return replies_.size() - next_;
}

std::string HumanBackend::complete(const std::vector<ChatMessage>& messages) {
  auto line = source_(messages);
  if (!line) throw Error(ErrorCode::HumanTimeout, "no reply from the human player");
  return *line;
}

namespace {

struct Endpoint {
  std::string scheme_host_port;
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::ConfigError, "endpoint needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/v1/chat/completions"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

HttpBackend::Transport http_transport(const CompletionParams& params) {
  const auto ep = split_endpoint(params.endpoint);
  return [ep, params](const std::string& body) -> std::optional<HttpResponse> {
    httplib::Client client(ep.scheme_host_port);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(params.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(params.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!params.api_key.empty()) headers.emplace("Authorization", "Bearer " + params.api_key);
    auto res = client.Post(ep.path, headers, body, "application/json");
    if (!res) return std::nullopt;
    return HttpResponse{res->status, res->body};
  };
}

const char* role_string(Speaker s) { return s == Speaker::System ? "system" : "assistant"; }

}  // namespace

HttpBackend::HttpBackend(CompletionParams params) : HttpBackend(params, http_transport(params)) {}

HttpBackend::HttpBackend(CompletionParams params, Transport transport)
    : params_(std::move(params)),
      transport_(std::move(transport)),
      sleep_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {}

std::string HttpBackend::request_body(const CompletionParams& params, const std::vector<ChatMessage>& messages) {
  Json msgs = Json::array();
  for (std::size_t i = 0; i < messages.size(); ++i) {
    // The instruction goes out as the system message, later system turns as user turns.
    const char* role = role_string(messages[i].speaker);
    if (messages[i].speaker == Speaker::System && i > 0) role = "user";
    msgs.push_back({{"role", role}, {"content", messages[i].text}});
  }
  return Json{{"model", params.model}, {"messages", msgs}, {"temperature", params.temperature}, {"max_tokens", params.max_tokens}}
      .dump();
}

int HttpBackend::attempts() const {
  std::lock_guard lock(mu_);
  return attempts_;
}

std::string HttpBackend::complete(const std::vector<ChatMessage>& messages) {
  const auto body = request_body(params_, messages);
  auto delay = params_.base_backoff;
  for (int attempt = 0;; ++attempt) {
    {
      std::lock_guard lock(mu_);
      ++attempts_;
    }
    const auto res = transport_(body);
    if (!res) throw Error(ErrorCode::Timeout, "no response from " + params_.endpoint);
    const bool retryable = res->status == 429 || (res->status >= 500 && res->status <= 599);
    if (retryable && attempt < params_.max_retries) {
      sleep_(delay);
      delay *= 2;
      continue;
    }
    if (res->status != 200) throw Error(ErrorCode::BackendError, fmt::format("backend returned status {}", res->status));
    try {
      const auto j = Json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::BackendError, std::string("malformed completion: ") + e.what());
    }
  }
}

std::string BudgetedBackend::complete(const std::vector<ChatMessage>& messages) {
  {
    std::lock_guard lock(mu_);
    if (calls_ >= cap_) throw Error(ErrorCode::BudgetExceeded, fmt::format("call cap {} reached", cap_));
    ++calls_;
  }
  return inner_->complete(messages);
}

int BudgetedBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

// ---------------------------------------------------------------------------
// Reflexion

std::string reflection_request(std::string_view trial_transcript) {
  return fmt::format(
      "You will be given the history of a past experience in which you were placed in an environment and given a task to "
      "complete. You were unsuccessful in completing the task. Do not summarize your environment, but rather think about the "
      "strategy and path you took to attempt to complete the task. Devise a concise, new plan of action that accounts for your "
      "mistake with reference to specific actions that you should have taken.\n\n{}\nNew plan:",
      trial_transcript);
}

std::string reflect(AgentBackend& backend, std::string_view trial_transcript, const Strategy& strategy, int trial_index) {
  if (!strategy.reflexion() || trial_index + 1 >= strategy.max_trials) {
    throw Error(ErrorCode::TrialLimit, fmt::format("no trial left after trial {}", trial_index + 1));
  }
  const std::vector<ChatMessage> request = {{Speaker::System, reflection_request(trial_transcript)}};
  return std::string(text::trim(backend.complete(request)));
}

}  // namespace langworld
