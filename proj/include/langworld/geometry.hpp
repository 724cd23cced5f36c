#pragma once

#include <compare>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>

namespace langworld {

// Integer grid cell. North is +y, East is +x.
struct Cell {
  int x = 0;
  int y = 0;

  auto operator<=>(const Cell&) const = default;
};

inline Cell operator+(Cell a, Cell b) { return {a.x + b.x, a.y + b.y}; }
inline Cell operator-(Cell a, Cell b) { return {a.x - b.x, a.y - b.y}; }

inline int manhattan(Cell a, Cell b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }
inline int chebyshev(Cell a, Cell b) {
  const int dx = std::abs(a.x - b.x);
  const int dy = std::abs(a.y - b.y);
  return dx > dy ? dx : dy;
}

std::string to_string(Cell c);

enum class Heading : std::uint8_t { North = 0, East = 1, South = 2, West = 3 };

inline Heading turn_right(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 1) % 4); }
inline Heading turn_left(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 3) % 4); }
inline Heading opposite(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 2) % 4); }

// Unit step for a heading.
Cell forward_vector(Heading h);
// Unit step to the right of a heading.
Cell right_vector(Heading h);

// "North", "East", ...
std::string_view heading_name(Heading h);
std::optional<Heading> parse_heading(std::string_view name);

// Heading that points from `from` to an orthogonally adjacent `to`.
std::optional<Heading> heading_between(Cell from, Cell to);

struct GridPose {
  Cell cell;
  Heading heading = Heading::North;

  auto operator<=>(const GridPose&) const = default;
};

inline GridPose turn_right(GridPose p) { return {p.cell, turn_right(p.heading)}; }
inline GridPose turn_left(GridPose p) { return {p.cell, turn_left(p.heading)}; }

// Inclusive cell rectangle.
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  bool contains(Cell c) const { return c.x >= x0 && c.x <= x1 && c.y >= y0 && c.y <= y1; }
  bool overlaps(const Rect& o) const { return x0 <= o.x1 && o.x0 <= x1 && y0 <= o.y1 && o.y0 <= y1; }

  auto operator<=>(const Rect&) const = default;
};

// The shared edge between two orthogonally adjacent cells, stored in canonical order.
struct Edge {
  Cell a;
  Cell b;

  auto operator<=>(const Edge&) const = default;
};

std::optional<Edge> make_edge(Cell a, Cell b);

}  // namespace langworld
