#pragma once

// Brute-force visibility: every object is tested on its own with exact integer geometry.
// Coordinates are doubled so cell centres are even and cell corners odd.

#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "langworld/world.hpp"

namespace oracle {

struct P {
  long long x;
  long long y;
};

inline long long cross(P o, P a, P b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

inline int sign(long long v) { return (v > 0) - (v < 0); }

inline bool within(P a, P b, P p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

// Closed segment intersection.
inline bool segments_meet(P a, P b, P c, P d) {
  const int d1 = sign(cross(c, d, a));
  const int d2 = sign(cross(c, d, b));
  const int d3 = sign(cross(a, b, c));
  const int d4 = sign(cross(a, b, d));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && within(c, d, a)) return true;
  if (d2 == 0 && within(c, d, b)) return true;
  if (d3 == 0 && within(a, b, c)) return true;
  if (d4 == 0 && within(a, b, d)) return true;
  return false;
}

inline P centre(langworld::Cell c) { return {2LL * c.x, 2LL * c.y}; }

// Closed unit square of a cell.
inline bool segment_hits_square(P a, P b, langworld::Cell c) {
  const long long x0 = 2LL * c.x - 1, x1 = 2LL * c.x + 1, y0 = 2LL * c.y - 1, y1 = 2LL * c.y + 1;
  auto inside = [&](P p) { return x0 <= p.x && p.x <= x1 && y0 <= p.y && p.y <= y1; };
  if (inside(a) || inside(b)) return true;
  const P c00{x0, y0}, c10{x1, y0}, c11{x1, y1}, c01{x0, y1};
  return segments_meet(a, b, c00, c10) || segments_meet(a, b, c10, c11) || segments_meet(a, b, c11, c01) ||
         segments_meet(a, b, c01, c00);
}

// The wall between two adjacent cells as a segment on their shared border.
inline std::pair<P, P> wall_segment(const langworld::Edge& e) {
  if (e.a.x != e.b.x) {
    const long long x = e.a.x + e.b.x;
    return {{x, 2LL * e.a.y - 1}, {x, 2LL * e.a.y + 1}};
  }
  const long long y = e.a.y + e.b.y;
  return {{2LL * e.a.x - 1, y}, {2LL * e.a.x + 1, y}};
}

inline bool in_any_room(const langworld::WorldState& w, langworld::Cell c) {
  for (const auto& r : w.rooms) {
    if (c.x >= r.bounds.x0 && c.x <= r.bounds.x1 && c.y >= r.bounds.y0 && c.y <= r.bounds.y1) return true;
  }
  return false;
}

struct Sighting {
  double distance;
  std::string direction;
};

inline std::string bucket(double deg) {
  const double a = std::fabs(deg);
  const bool left = deg > 0;
  if (a <= 22.5) return "front";
  if (a <= 67.5) return left ? "front-left" : "front-right";
  if (a <= 112.5) return left ? "left" : "right";
  if (a <= 157.5) return left ? "rear-left" : "rear-right";
  return "rear";
}

inline std::map<std::string, Sighting> visible_objects(const langworld::WorldState& w, const std::string& agent_id) {
  using namespace langworld;
  const AgentBody& agent = w.agents.at(agent_id);
  const Cell o = agent.pose.cell;
  int fx = 0, fy = 0;
  switch (agent.pose.heading) {
    case Heading::North: fy = 1; break;
    case Heading::East: fx = 1; break;
    case Heading::South: fy = -1; break;
    case Heading::West: fx = -1; break;
  }
  // Right of (fx, fy) is (fy, -fx).
  const int rx = fy, ry = -fx;

  std::vector<Cell> blockers;
  for (const auto& [id, obj] : w.objects) {
    if (!obj.container && !obj.holder && obj.affordances.has(Affordance::Blocking)) blockers.push_back(obj.cell);
  }

  std::map<std::string, Sighting> out;
  for (const auto& [id, obj] : w.objects) {
    // Walk to the outermost receptacle; any held link or closed openable ancestor hides the object.
    if (obj.holder) continue;
    const ObjectEntity* cur = &obj;
    bool hidden = false;
    while (cur->container) {
      const ObjectEntity& parent = w.objects.at(*cur->container);
      if (parent.affordances.has(Affordance::Openable) && !parent.state.open) hidden = true;
      cur = &parent;
    }
    if (hidden || cur->holder) continue;
    const Cell t = cur->cell;
    if (t == o || !in_any_room(w, t)) continue;

    const int dx = t.x - o.x, dy = t.y - o.y;
    const int fwd = dx * fx + dy * fy;
    const int lat = dx * rx + dy * ry;
    const double dist = std::sqrt(double(dx) * dx + double(dy) * dy);
    const double deg = std::atan2(-double(lat), double(fwd)) * 180.0 / std::numbers::pi;

    if (!agent.config.oracle_vision) {
      if (agent.config.view_shape.kind == ViewShape::Kind::Rect) {
        if (fwd < 1 || fwd > int(std::floor(agent.config.view_distance + 1e-9))) continue;
        if (std::abs(lat) > agent.config.view_shape.side_steps) continue;
      } else {
        if (dist > agent.config.view_distance + 1e-9) continue;
        if (std::fabs(deg) > agent.config.half_angle_degrees() + 1e-9) continue;
      }
      const P a = centre(o), b = centre(t);
      bool blocked = false;
      for (const auto& e : w.walls) {
        const auto [p, q] = wall_segment(e);
        if (segments_meet(a, b, p, q)) {
          blocked = true;
          break;
        }
      }
      for (std::size_t i = 0; !blocked && i < blockers.size(); ++i) {
        if (blockers[i] == o || blockers[i] == t) continue;
        if (segment_hits_square(a, b, blockers[i])) blocked = true;
      }
      if (blocked) continue;
    }
    out[id] = {dist, bucket(deg)};
  }
  return out;
}

}  // namespace oracle
