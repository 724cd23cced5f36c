#include <doctest.h>

#include <random>

#include "langworld/geometry.hpp"

using namespace langworld;

TEST_CASE("turning four times returns to the original pose") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> coord(-50, 50);
  std::uniform_int_distribution<int> dir(0, 3);
  for (int i = 0; i < 200; ++i) {
    const GridPose p{{coord(rng), coord(rng)}, static_cast<Heading>(dir(rng))};
    CHECK(turn_right(turn_right(turn_right(turn_right(p)))) == p);
    CHECK(turn_left(turn_right(p)) == p);
    CHECK(turn_right(turn_left(p)) == p);
  }
}

TEST_CASE("heading vectors follow north-up convention") {
  CHECK(forward_vector(Heading::North) == Cell{0, 1});
  CHECK(forward_vector(Heading::East) == Cell{1, 0});
  CHECK(right_vector(Heading::North) == Cell{1, 0});
  CHECK(right_vector(Heading::West) == Cell{0, 1});
  CHECK(turn_right(Heading::North) == Heading::East);
  CHECK(opposite(Heading::East) == Heading::West);
}

TEST_CASE("heading parsing and edges") {
  CHECK(parse_heading("north") == Heading::North);
  CHECK(parse_heading(" W ") == Heading::West);
  CHECK_FALSE(parse_heading("up").has_value());
  CHECK(heading_between({2, 2}, {2, 1}) == Heading::South);
  CHECK_FALSE(heading_between({0, 0}, {1, 1}).has_value());

  const auto e1 = make_edge({1, 0}, {0, 0});
  const auto e2 = make_edge({0, 0}, {1, 0});
  REQUIRE(e1.has_value());
  CHECK(*e1 == *e2);
  CHECK_FALSE(make_edge({0, 0}, {2, 0}).has_value());
}

TEST_CASE("inclusive rectangles") {
  const Rect r{0, 0, 2, 3};
  CHECK(r.width() == 3);
  CHECK(r.height() == 4);
  CHECK(r.contains({2, 3}));
  CHECK_FALSE(r.contains({3, 3}));
  CHECK(r.overlaps(Rect{2, 3, 5, 5}));
  CHECK_FALSE(r.overlaps(Rect{3, 0, 5, 5}));
}
