#include <doctest.h>

#include <algorithm>
#include <random>

#include "langworld/error.hpp"
#include "langworld/metrics.hpp"
#include "langworld/text.hpp"
#include "support.hpp"

using namespace langworld;
using namespace testing_support;

namespace {

// Three books on shelves plus a vase that starts in its correct place.
WorldState shelf_room() {
  Json doc = room_doc(6, 6, {0, 0}, "North");
  auto shelf = [](const char* id, Cell c) { return object_doc(id, "shelf", c, {"receptacle", "blocking"}); };
  doc["objects"] = {shelf("shelf_0", {1, 4}), shelf("shelf_1", {3, 4}), shelf("shelf_2", {5, 4}),
                    object_doc("book_0", "book", {1, 1}, {"pickupable"}), object_doc("book_1", "book", {2, 1}, {"pickupable"}),
                    object_doc("book_2", "book", {3, 1}, {"pickupable"}), object_doc("vase_0", "vase", {5, 1}, {"pickupable"})};
  return load_scene(doc);
}

// Oracle: an object is misplaced when its placement or any state flag differs.
int misplaced_count(const WorldState& a, const WorldState& target) {
  int n = 0;
  for (const auto& [id, o] : a.objects) {
    const auto& t = target.objects.at(id);
    if (placement_value(o) != placement_value(t) || !(o.state == t.state)) ++n;
  }
  return n;
}

EpisodeScore ep(bool success, double goal, int steps, std::optional<int> expert = std::nullopt) {
  EpisodeScore s;
  s.task_type = "IG";
  s.success = success;
  s.goal_sr = goal;
  s.steps = steps;
  s.expert_len = expert;
  return s;
}

}  // namespace

TEST_CASE("rearrangement_scores worked examples") {
  const auto target = shelf_room();
  auto start = target;
  place_on_floor(start, "book_0", {0, 3});
  place_on_floor(start, "book_1", {2, 3});
  place_on_floor(start, "book_2", {4, 2});
  REQUIRE(misplaced_count(start, target) == 3);

  SUBCASE("all restored") {
    const auto r = rearrangement_scores(start, target, target);
    CHECK(r.misplaced_pct == 0.0);
    CHECK(r.fixed_strict_pct == 100.0);
  }
  SUBCASE("agent does nothing") {
    const auto r = rearrangement_scores(start, start, target);
    CHECK(r.misplaced_pct == 100.0);
    CHECK(r.fixed_strict_pct == 0.0);
  }
  SUBCASE("fixes two of three but displaces a correct object") {
    auto end = start;
    place_on_floor(end, "book_0", {1, 1});
    place_on_floor(end, "book_1", {2, 1});
    place_on_floor(end, "vase_0", {0, 5});
    REQUIRE(misplaced_count(end, target) == 2);
    const auto r = rearrangement_scores(start, end, target);
    CHECK(std::round(r.misplaced_pct * 10) / 10 == doctest::Approx(66.7));
    CHECK(r.fixed_strict_pct == 0.0);
  }
  SUBCASE("partial fix without collateral keeps the strict score") {
    auto end = start;
    place_on_floor(end, "book_0", {1, 1});
    const auto r = rearrangement_scores(start, end, target);
    CHECK(r.misplaced_pct == doctest::Approx(200.0 / 3.0));
    CHECK(r.fixed_strict_pct == doctest::Approx(100.0 / 3.0));
  }
  SUBCASE("misplaced may exceed 100") {
    auto end = start;
    place_on_floor(end, "vase_0", {0, 5});
    CHECK(rearrangement_scores(start, end, target).misplaced_pct == doctest::Approx(400.0 / 3.0));
  }
}

TEST_CASE("rearrangement_scores agrees with a per-object oracle on random ends") {
  const auto target = shelf_room();
  auto start = target;
  place_on_floor(start, "book_1", {2, 3});
  std::mt19937_64 rng(11);
  const std::vector<std::string> ids = {"book_0", "book_1", "book_2", "vase_0"};
  for (int i = 0; i < 200; ++i) {
    auto end = start;
    for (const auto& id : ids) {
      if (rng() % 2) place_on_floor(end, id, {static_cast<int>(rng() % 6), static_cast<int>(rng() % 3) + 1});
    }
    const double expected = 100.0 * misplaced_count(end, target) / misplaced_count(start, target);
    CHECK(rearrangement_scores(start, end, target).misplaced_pct == doctest::Approx(expected));
  }
}

TEST_CASE("rearrangement_scores needs an initial difference") {
  const auto w = shelf_room();
  try {
    rearrangement_scores(w, w, w);
    FAIL("expected DivisionUndefined");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DivisionUndefined);
  }
}

TEST_CASE("path_weighted formula") {
  CHECK(path_weighted(100.0, 10, 20) == 50.0);
  CHECK(path_weighted(0.7, 13, 13) == 0.7);
  CHECK(path_weighted(1.0, 10, 3) == 1.0);
  for (int ls = 1; ls <= 30; ++ls) {
    for (int la = 1; la <= 30; ++la) {
      for (double s : {0.0, 0.25, 1.0, 37.5, 100.0}) {
        const double expected = la <= ls ? s : s * ls / la;
        CHECK(std::abs(path_weighted(s, ls, la) - expected) <= 1e-12);
      }
    }
  }
  for (auto [ls, la] : {std::pair{0, 1}, std::pair{1, 0}, std::pair{-3, 2}}) {
    try {
      path_weighted(1.0, ls, la);
      FAIL("expected NonPositiveLength");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonPositiveLength);
    }
  }
}

TEST_CASE("aggregate summaries") {
  SUBCASE("average steps") { CHECK(aggregate({ep(true, 1, 2), ep(false, 0, 4)}).avg_steps == 3.0); }
  SUBCASE("success rate") {
    const auto s = aggregate({ep(true, 1, 1), ep(false, 0.5, 1), ep(true, 1, 1), ep(true, 1, 1)});
    CHECK(s.sr == 75.0);
    CHECK(s.goal_sr == doctest::Approx(87.5));
    CHECK(s.sr <= s.goal_sr);
  }
  SUBCASE("path-weighted success counts half for twice the expert length") {
    const auto s = aggregate({ep(true, 1, 20, 10), ep(true, 1, 10, 10)});
    REQUIRE(s.pw_sr);
    CHECK(*s.pw_sr == doctest::Approx(75.0));
  }
  SUBCASE("path-weighted metrics need every expert length") {
    CHECK_FALSE(aggregate({ep(true, 1, 20, 10), ep(true, 1, 10)}).pw_sr);
  }
  SUBCASE("accuracy per question type") {
    auto a = ep(true, 1, 3);
    a.task_type = "IQA";
    a.answer_correct = true;
    a.question_type = "Exists";
    auto b = a;
    b.answer_correct = false;
    auto c = a;
    c.question_type = "Counts";
    const auto s = aggregate({a, b, c});
    CHECK(s.accuracy.at("Exists") == 50.0);
    CHECK(s.accuracy.at("Counts") == 100.0);
  }
  SUBCASE("permutation invariant") {
    std::vector<EpisodeScore> v = {ep(true, 1, 5, 4), ep(false, 0.25, 9, 3), ep(true, 1, 2, 2), ep(false, 0, 7, 6)};
    const auto base = summary_to_json(aggregate(v));
    std::mt19937 rng(3);
    for (int i = 0; i < 10; ++i) {
      std::shuffle(v.begin(), v.end(), rng);
      const auto again = summary_to_json(aggregate(v));
      for (const char* key : {"SR", "Goal-SR", "Avg Steps", "PW SR", "PW Goal-SR"}) {
        CHECK(again[key].get<double>() == doctest::Approx(base[key].get<double>()));
      }
    }
  }
  SUBCASE("empty input") {
    try {
      aggregate({});
      FAIL("expected EmptyInput");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyInput);
    }
  }
}

TEST_CASE("aggregate_by_type and the text table") {
  auto r = ep(true, 1, 8);
  r.task_type = "Rearrangement";
  r.misplaced_pct = 0.0;
  r.fixed_strict_pct = 100.0;
  const auto rows = aggregate_by_type({ep(true, 1, 4), r, ep(false, 0, 6)});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].task_type == "IG");
  CHECK(rows[0].sr == 50.0);
  CHECK(rows[1].fixed_strict == 100.0);
  const auto table = summary_table(rows);
  const auto lines = text::split_lines(table);
  REQUIRE(lines.size() >= 3);
  CHECK(lines[0].rfind("Task", 0) == 0);
  CHECK(lines[0].size() == lines[1].size());
  CHECK(lines[1].size() == lines[2].size());
  CHECK(table.find("100.0") != std::string::npos);
}

TEST_CASE("episode scores round-trip through JSON") {
  auto s = ep(true, 1, 4, 3);
  s.answer_correct = true;
  s.question_type = "Counts";
  s.misplaced_pct = 12.5;
  CHECK(score_from_json(score_to_json(s)) == s);
  CHECK_THROWS_AS(score_from_json(Json{{"task_type", "IG"}}), Error);
  CHECK_THROWS_AS(score_from_json(Json{{"task_type", "IG"}, {"success", true}, {"goal_sr", 2.0}, {"steps", 1}}), Error);
}
