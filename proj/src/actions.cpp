#include "langworld/actions.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <map>
#include <mutex>

#include <fmt/format.h>

#include "langworld/error.hpp"
#include "langworld/navigation.hpp"
#include "langworld/perception.hpp"
#include "langworld/scene_io.hpp"
#include "langworld/text.hpp"

namespace langworld {

namespace {

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool space_char(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view strip_markers(std::string_view s) {
  s = text::trim(s);
  while (!s.empty() && (s.front() == '>' || space_char(s.front()))) s.remove_prefix(1);
  return s;
}

std::string_view strip_trailing_periods(std::string_view s) {
  s = text::trim(s);
  while (!s.empty() && (s.back() == '.' || space_char(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view strip_quotes(std::string_view s) {
  s = text::trim(s);
  while (s.size() >= 2 && (s.front() == '"' || s.front() == '\'' || s.front() == '`') && s.back() == s.front()) {
    s = text::trim(s.substr(1, s.size() - 2));
  }
  return s;
}

// "act:" at a word boundary.
std::size_t find_act(std::string_view s, std::size_t from) {
  for (std::size_t i = from; i + 4 <= s.size(); ++i) {
    if ((i == 0 || !ident_char(s[i - 1])) && text::starts_with_ci(s.substr(i), "act:")) return i;
  }
  return std::string_view::npos;
}

bool is_thought_line(std::string_view s) {
  if (!text::starts_with_ci(s, "thought")) return false;
  if (s.size() == 7) return true;
  const char c = s[7];
  return c == ':' || c == '[' || space_char(c);
}

std::string_view leading_ident(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && ident_char(s[i])) ++i;
  return s.substr(0, i);
}

bool looks_like_action(std::string_view line, const ActionSpace& space) {
  const auto name = leading_ident(line);
  if (name.empty()) return false;
  if (space.find(name)) return true;
  const auto rest = text::trim(line.substr(name.size()));
  return !rest.empty() && (rest.front() == '[' || rest.front() == '(');
}

bool id_like(std::string_view token) {
  return std::any_of(token.begin(), token.end(), [](char c) { return c == '_' || std::isdigit(static_cast<unsigned char>(c)); });
}

std::variant<std::vector<std::string>, ParseError> parse_args(const ActionSpec& spec, std::string_view rest) {
  std::string_view inner;
  bool bracketed = false;
  if (!rest.empty() && (rest.front() == '[' || rest.front() == '(')) {
    const char close = rest.front() == '[' ? ']' : ')';
    const std::size_t end = spec.verbatim() ? rest.rfind(close) : rest.find(close, 1);
    inner = (end == std::string_view::npos || end == 0) ? rest.substr(1) : rest.substr(1, end - 1);
    bracketed = true;
  } else {
    inner = strip_trailing_periods(rest);
  }

  std::vector<std::string> args;
  if (spec.verbatim()) {
    const auto message = text::trim(inner);
    if (message.empty()) {
      if (spec.name == "chat" || spec.name == "ask") {
        return ParseError{ParseErrorKind::ArityMismatch, spec.name + " needs a message"};
      }
      if (spec.arity == 1) args.emplace_back();
    } else {
      args.emplace_back(message);
    }
  } else {
    std::size_t start = 0;
    while (start <= inner.size()) {
      std::size_t comma = inner.find(',', start);
      if (comma == std::string_view::npos) comma = inner.size();
      const auto piece = strip_quotes(strip_trailing_periods(inner.substr(start, comma - start)));
      if (!piece.empty()) args.emplace_back(piece);
      start = comma + 1;
    }
    if (!bracketed && spec.arity == 1 && args.size() == 1) {
      const auto first = leading_ident(args.front());
      if (first.size() < args.front().size() && id_like(first)) args.front() = std::string(first);
    }
  }
  if (static_cast<int>(args.size()) != spec.arity) {
    return ParseError{ParseErrorKind::ArityMismatch,
                      fmt::format("{} takes {} argument(s), got {}", spec.name, spec.arity, args.size())};
  }
  return args;
}

ParseResult parse_one(std::string_view body, const ActionSpace& space) {
  auto s = strip_markers(body);
  if (text::starts_with_ci(s, "act:")) s = strip_markers(s.substr(4));
  const auto name = leading_ident(s);
  if (name.empty()) return ParseError{ParseErrorKind::Empty, "no action token found"};
  const ActionSpec* spec = space.find(name);
  if (!spec) return ParseError{ParseErrorKind::UnknownAction, fmt::format("unknown action \"{}\"", name)};
  auto args = parse_args(*spec, text::trim(s.substr(name.size())));
  if (auto* err = std::get_if<ParseError>(&args)) return *err;
  ActionCall call;
  call.spec = *spec;
  call.args = std::move(std::get<std::vector<std::string>>(args));
  return call;
}

// ---------------------------------------------------------------------------
// Object resolution and phrasing

std::string_view strip_article(std::string_view s) {
  for (std::string_view a : {"a ", "an ", "the "}) {
    if (text::starts_with_ci(s, a)) return text::trim(s.substr(a.size()));
  }
  return s;
}

bool label_matches(const ObjectEntity& o, std::string_view arg) {
  return text::iequals(o.category, arg) || (o.color && text::iequals(o.label(), arg));
}

double euclid(Cell a, Cell b) { return std::hypot(double(a.x - b.x), double(a.y - b.y)); }

Cell anchor_cell(const WorldState& w, const ObjectEntity& o) {
  const ObjectEntity& top = w.outermost(o);
  if (top.holder) {
    if (const auto* a = w.find_agent(*top.holder)) return a->pose.cell;
  }
  return top.cell;
}

const ObjectEntity* resolve_object(const WorldState& w, const AgentBody& agent, const VisibleSet& fov,
                                   std::string_view raw) {
  const auto arg = strip_article(strip_quotes(raw));
  if (arg.empty()) return nullptr;
  if (const auto* o = w.find_object(arg)) return o;
  for (const auto& [id, o] : w.objects) {
    if (text::iequals(id, arg)) return &o;
  }
  const ObjectEntity* best = nullptr;
  const VisibleItem* seen = nullptr;
  for (const auto& item : fov.items) {
    const auto* o = w.find_object(item.object_id);
    if (!o || !label_matches(*o, arg)) continue;
    if (!seen || item.distance < seen->distance ||
        (item.distance == seen->distance && text::natural_less(item.object_id, seen->object_id))) {
      seen = &item;
    }
  }
  if (seen) return w.find_object(seen->object_id);
  for (const auto& held : agent.inventory) {
    const auto* o = w.find_object(held);
    if (o && label_matches(*o, arg)) return o;
  }
  double best_d = 0;
  for (const auto& [id, o] : w.objects) {
    if (!label_matches(o, arg)) continue;
    const double d = euclid(agent.pose.cell, anchor_cell(w, o));
    if (!best || d < best_d || (d == best_d && text::natural_less(id, best->id))) {
      best = &o;
      best_d = d;
    }
  }
  return best;
}

// "red key" for colored grid objects, the id otherwise.
std::string name_of(const ObjectEntity& o) { return o.color ? o.label() : o.id; }
// "a red key" for colored grid objects, the id otherwise.
std::string phrase_of(const ObjectEntity& o) {
  if (!o.color) return o.id;
  const auto label = o.label();
  return std::string(text::article(label)) + " " + label;
}

std::string verb_of(std::string_view action) {
  if (action == "pick_up") return "pick up";
  if (action == "toggle_on") return "toggle on";
  if (action == "toggle_off") return "toggle off";
  if (action == "place") return "put";
  if (action == "go_to" || action == "goto") return "go to";
  if (action == "go_check") return "check";
  if (action == "go_grab") return "grab";
  if (action == "go_put") return "put";
  return std::string(action);
}

Violation no_such(std::string_view arg) {
  return {FailureReason::NoSuchObject,
          fmt::format("There is no object \"{}\" existing. Please operate the object in sight.", text::trim(arg))};
}

Violation fail(FailureReason r, std::string_view action, const ObjectEntity& o, std::string_view why) {
  return {r, fmt::format("Failed to {} {}. {}", verb_of(action), name_of(o), why)};
}

std::string range_phrase(double md) {
  if (md < 1.5) return "one step in front of you without obstacle";
  return fmt::format("within {} step(s)", text::format_real(md));
}

Violation out_of_range(std::string_view action, const ObjectEntity& o, double md) {
  const std::string verb = action == "pick_up" ? "pickup" : verb_of(action);
  return fail(FailureReason::OutOfRange, action, o, fmt::format("You can only {} the object {}.", verb, range_phrase(md)));
}

std::string movement_detail(const WorldState& w, std::string_view direction) {
  if (w.feedback_units == FeedbackUnits::Meters) {
    return fmt::format("Moved {} by '{}' meter(s).", direction, text::format_real(w.step_size_meters));
  }
  return fmt::format("Moved {} by 1 step.", direction);
}

struct Movement {
  Cell delta;
  std::string_view direction;
  std::string_view blocked;
};

std::optional<Movement> movement_for(std::string_view name, Heading h) {
  if (name == "move_ahead") return Movement{forward_vector(h), "forward", "Can not move ahead, because there is an obstacle ahead."};
  if (name == "move_back") {
    return Movement{Cell{0, 0} - forward_vector(h), "back", "Can not move back, because there is an obstacle behind."};
  }
  if (name == "pan_left") {
    return Movement{Cell{0, 0} - right_vector(h), "left", "Can not move left, because there is an obstacle on your left."};
  }
  if (name == "pan_right") {
    return Movement{right_vector(h), "right", "Can not move right, because there is an obstacle on your right."};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Low-level checks

struct Resolved {
  std::string obj;
  std::string recep;
  Cell cell;
  bool to_floor = false;
};

using Checked = std::variant<Violation, Resolved>;

class Checker {
public:
  Checker(const WorldState& w, const AgentBody& agent, const ActionCall& call, const ActionContext& ctx)
      : w_(w), agent_(agent), call_(call), ctx_(ctx), name_(call.spec.name) {}

  Checked run() {
    if (auto m = movement_for(name_, agent_.pose.heading)) {
      const Cell to = agent_.pose.cell + m->delta;
      if (!grid().can_step(agent_.pose.cell, to)) return Violation{FailureReason::Obstacle, std::string(m->blocked)};
      return Resolved{{}, {}, to, false};
    }
    if (name_ == "pick_up") return pick_up();
    if (name_ == "open" || name_ == "close" || name_ == "toggle" || name_ == "toggle_on" || name_ == "toggle_off" ||
        name_ == "slice") {
      return state_change();
    }
    if (name_ == "drop") return drop();
    if (name_ == "put" || name_ == "place") return put();
    if (name_ == "heat" || name_ == "cool" || name_ == "clean") return instrument();
    if (name_ == "select_oid" || name_ == "search_object") return query();
    return Resolved{};
  }

private:
  const VisibleSet& fov() {
    if (!fov_) fov_ = field_of_view(w_, agent_.id);
    return *fov_;
  }
  const OccupancyGrid& grid() {
    if (!grid_) grid_ = navigation_grid(w_, agent_.id);
    return *grid_;
  }

  std::variant<Violation, const ObjectEntity*> lookup(std::size_t index) {
    const auto& arg = call_.args.at(index);
    const auto* o = resolve_object(w_, agent_, fov(), arg);
    if (!o) return no_such(arg);
    return o;
  }

  // Steps (2) and (3).
  std::optional<Violation> reachable(const ObjectEntity& o) {
    if (!fov().contains(o.id)) return fail(FailureReason::NotVisible, name_, o, name_of(o) + " is not in your sight.");
    const double d = euclid(agent_.pose.cell, w_.outermost(o).cell);
    if (d > agent_.config.manipulate_distance + 1e-9) return out_of_range(name_, o, agent_.config.manipulate_distance);
    return std::nullopt;
  }

  Checked pick_up() {
    auto r = lookup(0);
    if (auto* v = std::get_if<Violation>(&r)) return *v;
    const auto& o = *std::get<const ObjectEntity*>(r);
    if (auto v = reachable(o)) return *v;
    if (!o.has(Affordance::Pickupable)) return fail(FailureReason::AffordanceMissing, name_, o, name_of(o) + " is not pickupable.");
    if (static_cast<int>(agent_.inventory.size()) >= agent_.config.inventory_capacity) {
      return fail(FailureReason::InventoryFull, name_, o, "Your inventory is full.");
    }
    return Resolved{o.id, {}, {}, false};
  }

  Checked state_change() {
    auto r = lookup(0);
    if (auto* v = std::get_if<Violation>(&r)) return *v;
    const auto& o = *std::get<const ObjectEntity*>(r);
    if (auto v = reachable(o)) return *v;
    const auto n = name_of(o);
    if (name_ == "open" || name_ == "close") {
      if (!o.has(Affordance::Openable)) return fail(FailureReason::AffordanceMissing, name_, o, n + " is not openable.");
      if (o.state.open == (name_ == "open")) {
        return fail(FailureReason::AlreadyInState, name_, o, n + (o.state.open ? " is already open." : " is already closed."));
      }
    } else if (name_ == "toggle") {
      if (!o.has(Affordance::Openable) && !o.has(Affordance::Toggleable)) {
        return fail(FailureReason::AffordanceMissing, name_, o, n + " is not toggleable.");
      }
    } else if (name_ == "slice") {
      if (!o.has(Affordance::Sliceable)) return fail(FailureReason::AffordanceMissing, name_, o, n + " is not sliceable.");
      if (o.state.sliced) return fail(FailureReason::AlreadyInState, name_, o, n + " is already sliced.");
    } else {
      if (!o.has(Affordance::Toggleable)) return fail(FailureReason::AffordanceMissing, name_, o, n + " is not toggleable.");
      if (o.state.toggled == (name_ == "toggle_on")) {
        return fail(FailureReason::AlreadyInState, name_, o, n + (o.state.toggled ? " is already on." : " is already off."));
      }
    }
    return Resolved{o.id, {}, {}, false};
  }

  std::optional<Violation> holding(const ObjectEntity& o) {
    if (o.holder == agent_.id) return std::nullopt;
    if (agent_.inventory.empty()) return fail(FailureReason::InventoryEmpty, name_, o, "You are holding nothing.");
    return fail(FailureReason::InventoryEmpty, name_, o, "You are not holding " + name_of(o) + ".");
  }

  Checked drop() {
    auto r = lookup(0);
    if (auto* v = std::get_if<Violation>(&r)) return *v;
    const auto& o = *std::get<const ObjectEntity*>(r);
    if (auto v = holding(o)) return *v;
    const Cell here = agent_.pose.cell;
    const Cell front = here + forward_vector(agent_.pose.heading);
    const auto no_space = fail(FailureReason::Blocked, name_, o, "There is no space in front of you.");
    if (!w_.inside_rooms(front) || w_.has_wall(here, front) || w_.agent_at(front)) return no_space;
    const ObjectEntity* recep = nullptr;
    for (const auto& [id, cand] : w_.objects) {
      if (cand.top_level() && cand.cell == front && cand.has(Affordance::Receptacle) && id != o.id &&
          (!recep || text::natural_less(id, recep->id))) {
        recep = &cand;
      }
    }
    if (recep) {
      if (recep->has(Affordance::Openable) && !recep->state.open) {
        return fail(FailureReason::Blocked, name_, o, recep->id + " is closed.");
      }
      return Resolved{o.id, recep->id, front, false};
    }
    if (!grid().is_free(front)) return no_space;
    return Resolved{o.id, {}, front, true};
  }

  Checked put() {
    const ObjectEntity* obj = nullptr;
    if (name_ == "put") {
      auto r = lookup(0);
      if (auto* v = std::get_if<Violation>(&r)) return *v;
      obj = std::get<const ObjectEntity*>(r);
    }
    auto rr = lookup(name_ == "put" ? 1 : 0);
    if (auto* v = std::get_if<Violation>(&rr)) return *v;
    const auto& recep = *std::get<const ObjectEntity*>(rr);
    const std::string_view what = obj ? std::string_view(obj->id) : std::string_view("the object");
    auto put_fail = [&](FailureReason reason, const std::string& why) {
      return Violation{reason, fmt::format("Failed to put {} to {}. {}", what, name_of(recep), why)};
    };
    if (!fov().contains(recep.id)) return put_fail(FailureReason::NotVisible, name_of(recep) + " is not in your sight.");
    if (euclid(agent_.pose.cell, w_.outermost(recep).cell) > agent_.config.manipulate_distance + 1e-9) {
      return put_fail(FailureReason::OutOfRange,
                      fmt::format("You can only put the object {}.", range_phrase(agent_.config.manipulate_distance)));
    }
    if (!recep.has(Affordance::Receptacle)) return put_fail(FailureReason::AffordanceMissing, name_of(recep) + " is not a receptacle.");
    if (recep.has(Affordance::Openable) && !recep.state.open) return put_fail(FailureReason::Blocked, name_of(recep) + " is closed.");
    if (obj && obj->id == recep.id) return put_fail(FailureReason::Blocked, "An object can not hold itself.");
    if (!obj) {
      if (agent_.inventory.empty()) return put_fail(FailureReason::InventoryEmpty, "You are holding nothing.");
      obj = w_.find_object(agent_.inventory.front());
    } else if (obj->holder != agent_.id) {
      return put_fail(FailureReason::InventoryEmpty,
                      agent_.inventory.empty() ? "You are holding nothing." : "You are not holding " + obj->id + ".");
    }
    return Resolved{obj->id, recep.id, {}, false};
  }

  Checked instrument() {
    auto r = lookup(0);
    if (auto* v = std::get_if<Violation>(&r)) return *v;
    const auto& o = *std::get<const ObjectEntity*>(r);
    auto ri = lookup(1);
    if (auto* v = std::get_if<Violation>(&ri)) return *v;
    const auto& tool = *std::get<const ObjectEntity*>(ri);
    if (!fov().contains(tool.id)) return fail(FailureReason::NotVisible, name_, o, name_of(tool) + " is not in your sight.");
    if (euclid(agent_.pose.cell, w_.outermost(tool).cell) > agent_.config.manipulate_distance + 1e-9) {
      return fail(FailureReason::OutOfRange, name_, o,
                  fmt::format("You can only use an object {}.", range_phrase(agent_.config.manipulate_distance)));
    }
    const Affordance need = name_ == "heat" ? Affordance::Heater : name_ == "cool" ? Affordance::Cooler : Affordance::Cleaner;
    if (!tool.has(need)) {
      return fail(FailureReason::AffordanceMissing, name_, o, fmt::format("{} can not {} objects.", name_of(tool), name_));
    }
    if (tool.has(Affordance::Toggleable) && !tool.state.toggled) {
      return fail(FailureReason::Blocked, name_, o, name_of(tool) + " is off.");
    }
    if (name_ == "heat" && o.state.temperature == Temperature::Hot) {
      return fail(FailureReason::AlreadyInState, name_, o, name_of(o) + " is already hot.");
    }
    if (name_ == "cool" && o.state.temperature == Temperature::Cold) {
      return fail(FailureReason::AlreadyInState, name_, o, name_of(o) + " is already cold.");
    }
    if (name_ == "clean" && !o.state.dirty) return fail(FailureReason::AlreadyInState, name_, o, name_of(o) + " is already clean.");
    if (auto v = holding(o)) return *v;
    return Resolved{o.id, tool.id, {}, false};
  }

  Checked query() {
    if (!ctx_.partner) throw Error(ErrorCode::ConfigError, name_ + " needs a partner agent");
    const auto& partner = w_.agent(*ctx_.partner);
    const auto& arg = call_.args.at(0);
    const ObjectEntity* found = nullptr;
    if (name_ == "select_oid") {
      found = resolve_object(w_, agent_, VisibleSet{}, arg);
    } else {
      const auto type = strip_article(strip_quotes(arg));
      double best_d = 0;
      for (const auto& [id, o] : w_.objects) {
        if (!text::iequals(o.category, type)) continue;
        const double d = euclid(partner.pose.cell, anchor_cell(w_, o));
        if (!found || d < best_d || (d == best_d && text::natural_less(id, found->id))) {
          found = &o;
          best_d = d;
        }
      }
    }
    if (!found) return no_such(arg);
    return Resolved{found->id, {}, {}, false};
  }

  const WorldState& w_;
  const AgentBody& agent_;
  const ActionCall& call_;
  const ActionContext& ctx_;
  const std::string& name_;
  std::optional<VisibleSet> fov_;
  std::optional<OccupancyGrid> grid_;
};

bool is_high_level(const ActionCall& call) { return call.spec.level == ActionLevel::High; }

std::string relative_phrase(const WorldState& w, const ObjectEntity& o, const AgentBody& partner) {
  const ObjectEntity& top = w.outermost(o);
  if (top.holder == partner.id) return fmt::format("{} is in the hand of {}", o.id, partner.display_name());
  const Cell at = anchor_cell(w, o);
  if (at == partner.pose.cell) return fmt::format("{} is at the position of {}", o.id, partner.display_name());
  return fmt::format("{} is {} {}", o.id, direction_phrase(relative_direction(partner.pose, at)), partner.display_name());
}

Feedback apply_object_effect(WorldState& world, const std::string& id, const std::string& name, const Resolved& res);

StepResult apply_low(WorldState world, std::string_view agent_id, const ActionCall& call, const ActionContext& ctx) {
  const AgentBody& agent = world.agent(agent_id);
  const std::string& name = call.spec.name;
  const std::string id(agent_id);
  Checked checked = Checker(world, agent, call, ctx).run();
  if (auto* v = std::get_if<Violation>(&checked)) return {std::move(world), Feedback::failure(v->reason, v->message)};
  const Resolved res = std::get<Resolved>(checked);

  Feedback fb;
  if (auto m = movement_for(name, agent.pose.heading)) {
    move_agent(world, id, res.cell);
    fb = Feedback::success(movement_detail(world, m->direction));
  } else if (name == "turn_left" || name == "turn_right") {
    auto& a = world.agent(id);
    a.pose.heading = name == "turn_left" ? turn_left(a.pose.heading) : turn_right(a.pose.heading);
    fb = Feedback::success(fmt::format("Turned {} by '90' degrees.", name == "turn_left" ? "left" : "right"));
  } else if (name == "no_op" || call.spec.level == ActionLevel::Communicative) {
    fb = Feedback::success("");
  } else if (name == "stop" || name == "answer") {
    fb = Feedback::success(name == "stop" ? "You stopped the game." : fmt::format("You answered {}.", call.args.at(0)));
    fb.terminal = true;
    fb.answer = call.args.at(0);
  } else if (name == "open_progress_check") {
    if (!ctx.progress_check) throw Error(ErrorCode::ConfigError, "open_progress_check needs a task");
    fb = ctx.progress_check(world);
  } else if (name == "select_oid" || name == "search_object") {
    fb = Feedback::success(relative_phrase(world, *world.find_object(res.obj), world.agent(*ctx.partner)) + ".");
  } else {
    fb = apply_object_effect(world, id, name, res);
  }
  return {std::move(world), std::move(fb)};
}

Feedback apply_object_effect(WorldState& world, const std::string& id, const std::string& name, const Resolved& res) {
  ObjectEntity& o = *world.find_object(res.obj);
  const std::string phrase = phrase_of(o);
  if (name == "pick_up") {
    give_to_agent(world, res.obj, id);
    return Feedback::success(fmt::format("You picked {} up.", phrase));
  }
  if (name == "drop") {
    if (res.to_floor) {
      place_on_floor(world, res.obj, res.cell);
    } else {
      insert_into(world, res.obj, res.recep);
    }
    return Feedback::success(fmt::format("You dropped {}.", phrase));
  }
  if (name == "put" || name == "place") {
    insert_into(world, res.obj, res.recep);
    return Feedback::success(fmt::format("You put {} to {}.", res.obj, res.recep));
  }
  if (name == "open" || name == "close") {
    o.state.open = name == "open";
    return Feedback::success(fmt::format("You {} {}.", o.state.open ? "opened" : "closed", phrase));
  }
  if (name == "toggle" && o.has(Affordance::Openable)) {
    o.state.open = !o.state.open;
    return Feedback::success(fmt::format("You {} {}.", o.state.open ? "opened" : "closed", phrase));
  }
  if (name == "toggle" || name == "toggle_on" || name == "toggle_off") {
    o.state.toggled = name == "toggle" ? !o.state.toggled : name == "toggle_on";
    return Feedback::success(fmt::format("You toggled {} {}.", phrase, o.state.toggled ? "on" : "off"));
  }
  if (name == "slice") {
    o.state.sliced = true;
    return Feedback::success(fmt::format("You sliced {}.", phrase));
  }
  if (name == "heat" || name == "cool" || name == "clean") {
    const char* verb = "cleaned";
    if (name == "heat") {
      o.state.temperature = Temperature::Hot;
      verb = "heated";
    } else if (name == "cool") {
      o.state.temperature = Temperature::Cold;
      verb = "cooled";
    } else {
      o.state.dirty = false;
    }
    return Feedback::success(fmt::format("You {} {} with {}.", verb, phrase, res.recep));
  }
  throw Error(ErrorCode::ConfigError, "no semantics for action " + name);
}

// ---------------------------------------------------------------------------
// Macros

ActionCall internal_call(std::string_view name, int arity, std::vector<std::string> args) {
  ActionCall c;
  c.spec.name = std::string(name);
  c.spec.arity = arity;
  c.spec.description = "internal";
  c.args = std::move(args);
  return c;
}

Feedback macro_failure(std::string_view action, std::string_view target, FailureReason r, std::string_view why) {
  return Feedback::failure(r, fmt::format("Failed to {} {}. {}", verb_of(action), target, why));
}

// Walks the agent along a planned route; returns a failure when no route exists.
std::optional<Feedback> walk(WorldState& world, const std::string& agent_id, std::string_view action,
                             std::string_view target, const std::function<std::vector<NavAction>(const OccupancyGrid&, GridPose)>& plan) {
  const auto grid = navigation_grid(world, agent_id);
  std::vector<NavAction> route;
  try {
    route = plan(grid, world.agent(agent_id).pose);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoPath) throw;
    return macro_failure(action, target, FailureReason::NoPath, fmt::format("There is no path to {}.", target));
  }
  GridPose pose = world.agent(agent_id).pose;
  for (NavAction a : route) pose = apply_nav(pose, a);
  world.agent(agent_id).pose.heading = pose.heading;
  move_agent(world, agent_id, pose.cell);
  return std::nullopt;
}

std::optional<Feedback> approach(WorldState& world, const std::string& agent_id, std::string_view action,
                                 const ObjectEntity& target) {
  const Cell cell = anchor_cell(world, target);
  const std::string name = name_of(target);
  return walk(world, agent_id, action, name,
              [&](const OccupancyGrid& g, GridPose p) { return approach_actions(g, p, cell); });
}

std::vector<Cell> reachable_cells(const OccupancyGrid& grid, Cell start) {
  std::vector<Cell> out{start};
  std::set<Cell> seen{start};
  std::deque<Cell> queue{start};
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    for (int h = 0; h < 4; ++h) {
      const Cell n = c + forward_vector(static_cast<Heading>(h));
      if (seen.count(n) || !grid.can_step(c, n)) continue;
      seen.insert(n);
      out.push_back(n);
      queue.push_back(n);
    }
  }
  return out;
}

const Room* resolve_room(const WorldState& w, std::string_view raw) {
  const auto arg = strip_article(strip_quotes(raw));
  for (const auto& r : w.rooms) {
    if (text::iequals(r.id, arg)) return &r;
  }
  return w.find_room(text::lower(arg));
}

StepResult go_explore(WorldState world, const std::string& agent_id, const ActionCall& call) {
  const std::string& arg = call.args.at(0);
  const Room* room = resolve_room(world, arg);
  if (!room) {
    return {std::move(world), Feedback::failure(FailureReason::NoSuchObject,
                                                fmt::format("There is no room \"{}\" existing.", text::trim(arg)))};
  }
  const Room target_room = *room;
  const auto grid = navigation_grid(world, agent_id);
  const Cell start = world.agent(agent_id).pose.cell;
  // Centre-most reachable cell; doubled coordinates keep the centre integral.
  const int cx2 = target_room.bounds.x0 + target_room.bounds.x1;
  const int cy2 = target_room.bounds.y0 + target_room.bounds.y1;
  std::optional<Cell> best;
  auto key = [&](Cell c) { return std::make_tuple(std::abs(2 * c.x - cx2) + std::abs(2 * c.y - cy2), c.y, c.x); };
  for (Cell c : reachable_cells(grid, start)) {
    if (!target_room.bounds.contains(c)) continue;
    if (!best || key(c) < key(*best)) best = c;
  }
  if (!best) {
    return {std::move(world), macro_failure("go_explore", target_room.id, FailureReason::NoPath,
                                            fmt::format("There is no path to {}.", target_room.id))};
  }
  const WorldState before = world;
  if (auto f = walk(world, agent_id, "go_explore", target_room.id,
                    [&](const OccupancyGrid& g, GridPose p) { return astar_actions(g, p, *best); })) {
    return {before, *f};
  }
  Feedback fb = Feedback::success(fmt::format("Go to {}.", target_room.id));
  fb.explored_room = target_room.id;
  return {std::move(world), std::move(fb)};
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view action_level_name(ActionLevel l) {
  switch (l) {
    case ActionLevel::Low: return "low";
    case ActionLevel::High: return "high";
    case ActionLevel::Communicative: return "communicative";
  }
  return "low";
}

bool ActionSpec::verbatim() const { return name == "chat" || name == "ask" || name == "stop" || name == "answer"; }

const ActionSpec* ActionSpace::find(std::string_view name) const {
  for (const auto& a : actions) {
    if (text::iequals(a.name, name)) return &a;
  }
  return nullptr;
}

ActionSpace load_action_space(const Json& doc) {
  using namespace json_util;
  if (!doc.is_object()) schema_fail("action space", "expected an object");
  if (const auto* schema = optional(doc, "schema"); schema && as_string(*schema, "schema") != kActionSpaceSchema) {
    schema_fail("action space", "unsupported schema " + schema->dump());
  }
  ActionSpace space;
  space.id = as_string(require(doc, "id", "action space"), "action space id");
  for (const auto& a : as_array(require(doc, "actions", "action space"), "actions")) {
    ActionSpec spec;
    spec.name = as_string(require(a, "name", "action"), "action name");
    spec.arity = static_cast<int>(as_integer(require(a, "arity", spec.name), spec.name + ".arity"));
    if (spec.arity < 0 || spec.arity > 2) schema_fail(spec.name, "arity must be 0..2");
    const auto level = as_string(require(a, "level", spec.name), spec.name + ".level");
    if (level == "low") spec.level = ActionLevel::Low;
    else if (level == "high") spec.level = ActionLevel::High;
    else if (level == "communicative") spec.level = ActionLevel::Communicative;
    else schema_fail(spec.name, "unknown level " + level);
    if (const auto* aff = optional(a, "affordance")) {
      spec.affordance_required = parse_affordance(as_string(*aff, spec.name + ".affordance"));
      if (!spec.affordance_required) schema_fail(spec.name, "unknown affordance");
    }
    spec.signature = spec.name;
    if (const auto* sig = optional(a, "signature")) spec.signature = as_string(*sig, spec.name + ".signature");
    spec.description = as_string(require(a, "description", spec.name), spec.name + ".description");
    if (spec.description.empty()) schema_fail(spec.name, "empty description");
    if (space.find(spec.name)) schema_fail(space.id, "duplicate action " + spec.name);
    space.actions.push_back(std::move(spec));
  }
  if (space.actions.empty()) schema_fail(space.id, "no actions");
  return space;
}

Json action_space_to_json(const ActionSpace& space) {
  Json actions = Json::array();
  for (const auto& a : space.actions) {
    Json j{{"name", a.name}, {"arity", a.arity}, {"level", action_level_name(a.level)}, {"signature", a.signature},
           {"description", a.description}};
    if (a.affordance_required) j["affordance"] = affordance_name(*a.affordance_required);
    actions.push_back(std::move(j));
  }
  return Json{{"schema", kActionSpaceSchema}, {"id", space.id}, {"actions", std::move(actions)}};
}

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("LANGWORLD_DATA_DIR"); env && *env) return env;
  return LANGWORLD_DATA_DIR;
}

const ActionSpace& builtin_action_space(std::string_view id) {
  static std::mutex mu;
  static std::map<std::string, ActionSpace, std::less<>> cache;
  std::lock_guard lock(mu);
  if (auto it = cache.find(id); it != cache.end()) return it->second;
  const auto path = data_dir() / "action_spaces" / (std::string(id) + ".json");
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::ConfigError, "no action space " + std::string(id));
  auto space = load_action_space(read_json_file(path));
  return cache.emplace(std::string(id), std::move(space)).first->second;
}

std::string ActionCall::text() const {
  if (args.empty()) return spec.name;
  return spec.name + " [" + text::join(args, ", ") + "]";
}

std::string_view parse_error_name(ParseErrorKind k) {
  switch (k) {
    case ParseErrorKind::UnknownAction: return "UnknownAction";
    case ParseErrorKind::ArityMismatch: return "ArityMismatch";
    case ParseErrorKind::Empty: return "Empty";
  }
  return "Empty";
}

ParseResult parse_action(std::string_view input, const ActionSpace& space) {
  if (space.actions.empty()) throw Error(ErrorCode::ConfigError, "empty action space");
  const auto lines = text::split_lines(input);
  std::vector<std::string_view> candidates;
  for (const auto& line : lines) {
    const auto l = strip_markers(line);
    if (l.empty()) continue;
    std::size_t pos = find_act(l, 0);
    if (pos != std::string_view::npos) {
      while (pos != std::string_view::npos) {
        const std::size_t next = find_act(l, pos + 4);
        const std::size_t end = next == std::string_view::npos ? l.size() : next;
        candidates.push_back(l.substr(pos + 4, end - pos - 4));
        pos = next;
      }
      continue;
    }
    if (is_thought_line(l)) continue;
    if (looks_like_action(l, space)) candidates.push_back(l);
  }
  if (candidates.empty()) return ParseError{ParseErrorKind::Empty, "no action found"};
  ParseResult result = parse_one(candidates.front(), space);
  if (auto* call = std::get_if<ActionCall>(&result)) {
    call->raw = std::string(input);
    call->multi_action = candidates.size() > 1;
  }
  return result;
}

ActionCall make_call(const ActionSpace& space, std::string_view name, std::vector<std::string> args) {
  const ActionSpec* spec = space.find(name);
  if (!spec) throw Error(ErrorCode::ConfigError, fmt::format("action {} not in space {}", name, space.id));
  if (static_cast<int>(args.size()) != spec->arity) {
    throw Error(ErrorCode::ConfigError, fmt::format("{} takes {} argument(s)", name, spec->arity));
  }
  ActionCall call;
  call.spec = *spec;
  call.args = std::move(args);
  call.raw = call.text();
  return call;
}

std::optional<Violation> validate_action(const WorldState& world, std::string_view agent_id, const ActionCall& call,
                                         const ActionContext& ctx) {
  if (is_high_level(call)) {
    auto result = expand_high_level(world, agent_id, call, ctx);
    if (result.feedback.ok) return std::nullopt;
    const std::string prefix = "Action failed. ";
    auto msg = result.feedback.message;
    if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
    return Violation{*result.feedback.reason, msg};
  }
  const AgentBody& agent = world.agent(agent_id);
  Checked checked = Checker(world, agent, call, ctx).run();
  if (auto* v = std::get_if<Violation>(&checked)) return *v;
  return std::nullopt;
}

StepResult execute_action(WorldState world, std::string_view agent_id, const ActionCall& call, const ActionContext& ctx) {
  if (is_high_level(call)) return expand_high_level(std::move(world), agent_id, call, ctx);
  return apply_low(std::move(world), agent_id, call, ctx);
}

StepResult expand_high_level(WorldState world, std::string_view agent_id_view, const ActionCall& call,
                             const ActionContext& ctx) {
  const std::string agent_id(agent_id_view);
  const std::string& name = call.spec.name;
  if (name == "go_explore") return go_explore(std::move(world), agent_id, call);

  const WorldState before = world;
  auto failed = [&](Feedback fb) { return StepResult{before, std::move(fb)}; };
  const AgentBody& agent = world.agent(agent_id);
  const auto& arg = call.args.at(0);
  const ObjectEntity* found = resolve_object(world, agent, field_of_view(world, agent_id), arg);
  if (!found) {
    const auto v = no_such(arg);
    return failed(Feedback::failure(v.reason, v.message));
  }
  const ObjectEntity target = *found;
  const std::string tname = name_of(target);

  if (name == "go_to" || name == "goto") {
    if (target.holder || world.outermost(target).holder) {
      return failed(macro_failure(name, tname, FailureReason::Blocked, tname + " is held by an agent."));
    }
    if (auto f = approach(world, agent_id, name, target)) return failed(*f);
    return {std::move(world), Feedback::success(fmt::format("Go to {}.", tname))};
  }

  if (name == "go_check") {
    if (!target.has(Affordance::Openable) || !target.has(Affordance::Receptacle)) {
      return failed(macro_failure(name, tname, FailureReason::AffordanceMissing, tname + " is not a container."));
    }
    if (target.state.open) return failed(macro_failure(name, tname, FailureReason::AlreadyInState, tname + " is already open."));
    if (static_cast<int>(agent.inventory.size()) >= agent.config.inventory_capacity) {
      return failed(macro_failure(name, tname, FailureReason::InventoryFull, "You must have at least one free hand to check."));
    }
    if (auto f = approach(world, agent_id, name, target)) return failed(*f);
    auto step = apply_low(std::move(world), agent_id, internal_call("open", 1, {target.id}), ctx);
    if (!step.feedback.ok) return failed(step.feedback);
    const auto& contents = step.world.find_object(target.id)->contents;
    step.feedback.checked_container = target.id;
    step.feedback.revealed = contents;
    step.feedback.observation = "In it you see " + (contents.empty() ? std::string("nothing") : text::join(contents, ", "));
    return step;
  }

  if (name == "go_grab") {
    if (!target.has(Affordance::Pickupable)) {
      return failed(macro_failure(name, tname, FailureReason::AffordanceMissing, tname + " is not pickupable."));
    }
    if (target.holder == agent_id) {
      return failed(macro_failure(name, tname, FailureReason::AlreadyInState, "You are already holding " + tname + "."));
    }
    if (static_cast<int>(agent.inventory.size()) >= agent.config.inventory_capacity) {
      return failed(macro_failure(name, tname, FailureReason::InventoryFull, "Your inventory is full."));
    }
    if (world.concealed(target)) {
      return failed(macro_failure(name, tname, FailureReason::NotVisible, tname + " is inside a closed container."));
    }
    if (target.holder || world.outermost(target).holder) {
      return failed(macro_failure(name, tname, FailureReason::Blocked, tname + " is held by an agent."));
    }
    if (auto f = approach(world, agent_id, name, target)) return failed(*f);
    auto step = apply_low(std::move(world), agent_id, internal_call("pick_up", 1, {target.id}), ctx);
    if (!step.feedback.ok) return failed(step.feedback);
    return step;
  }

  if (name == "go_put") {
    if (!target.has(Affordance::Receptacle)) {
      return failed(macro_failure(name, tname, FailureReason::AffordanceMissing, tname + " is not a receptacle."));
    }
    if (agent.inventory.empty()) {
      return failed(macro_failure(name, tname, FailureReason::InventoryEmpty, "You are holding nothing."));
    }
    const std::vector<std::string> held = agent.inventory;
    if (auto f = approach(world, agent_id, name, target)) return failed(*f);
    for (const auto& obj : held) {
      auto step = apply_low(std::move(world), agent_id, internal_call("put", 2, {obj, target.id}), ctx);
      if (!step.feedback.ok) return failed(step.feedback);
      world = std::move(step.world);
    }
    return {std::move(world), Feedback::success(fmt::format("You put {} on {}.", text::join(held, ", "), target.id))};
  }

  throw Error(ErrorCode::ConfigError, "no macro named " + name);
}

}  // namespace langworld
