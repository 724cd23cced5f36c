#include "langworld/geometry.hpp"

#include "langworld/text.hpp"

namespace langworld {

std::string to_string(Cell c) { return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; }

Cell forward_vector(Heading h) {
  switch (h) {
    case Heading::North: return {0, 1};
    case Heading::East: return {1, 0};
    case Heading::South: return {0, -1};
    case Heading::West: return {-1, 0};
  }
  return {0, 0};
}

Cell right_vector(Heading h) { return forward_vector(turn_right(h)); }

std::string_view heading_name(Heading h) {
  switch (h) {
    case Heading::North: return "North";
    case Heading::East: return "East";
    case Heading::South: return "South";
    case Heading::West: return "West";
  }
  return "North";
}

std::optional<Heading> parse_heading(std::string_view name) {
  const auto n = text::lower(text::trim(name));
  if (n == "north" || n == "n") return Heading::North;
  if (n == "east" || n == "e") return Heading::East;
  if (n == "south" || n == "s") return Heading::South;
  if (n == "west" || n == "w") return Heading::West;
  return std::nullopt;
}

std::optional<Heading> heading_between(Cell from, Cell to) {
  const Cell d = to - from;
  for (Heading h : {Heading::North, Heading::East, Heading::South, Heading::West}) {
    if (forward_vector(h) == d) return h;
  }
  return std::nullopt;
}

std::optional<Edge> make_edge(Cell a, Cell b) {
  if (manhattan(a, b) != 1) return std::nullopt;
  if (b < a) std::swap(a, b);
  return Edge{a, b};
}

}  // namespace langworld
