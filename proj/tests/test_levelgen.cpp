#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <map>
#include <set>

#include "m3pcg/levelgen.hpp"
#include "match_oracle.hpp"

using namespace m3pcg;

namespace {

const char* kSampleBatch = R"([
  {"num_different_pieces": 4, "score_goal": 1500, "board_width": 6, "board_height": 6,
   "num_moves": 30, "collection_goals": [20, 25, 30]},
  {"num_different_pieces": 5, "score_goal": 1800, "board_width": 6, "board_height": 6,
   "num_moves": 35, "collection_goals": [25, 30, 35]},
  {"num_different_pieces": 5, "score_goal": 2000, "board_width": 6, "board_height": 6,
   "num_moves": 40, "collection_goals": [30, 35, 40]}
])";

// Upper-tail p-value of Pearson's statistic against the given expected shares.
double chi_square_p(const std::map<int, int>& observed, const std::map<int, double>& expected_share, int n) {
  double stat = 0;
  for (const auto& [value, share] : expected_share) {
    const double e = share * n;
    const auto it = observed.find(value);
    const double o = it == observed.end() ? 0.0 : it->second;
    stat += (o - e) * (o - e) / e;
  }
  boost::math::chi_squared dist(static_cast<double>(expected_share.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

std::map<int, double> uniform_shares(const IntRange& r) {
  std::map<int, double> s;
  for (int v = r.min; v <= r.max; ++v) s[v] = 1.0 / (r.max - r.min + 1);
  return s;
}

bool within_canonical(const LevelParams& p) {
  const ParamRanges r;
  bool ok = r.pieces.contains(p.num_different_pieces) && r.score_goal.contains(p.score_goal) &&
            r.board_width.contains(p.board_width) && r.board_height.contains(p.board_height) &&
            r.num_moves.contains(p.num_moves) && r.goal_count.contains(static_cast<int>(p.collection_goals.size())) &&
            static_cast<int>(p.collection_goals.size()) <= p.num_different_pieces;
  for (int g : p.collection_goals) ok = ok && r.goal_amount.contains(g);
  return ok;
}

}  // namespace

TEST_CASE("generate_traditional: degenerate ranges force the output") {
  ParamRanges r;
  r.pieces = {3, 3};
  r.score_goal = {700, 700};
  r.board_width = {4, 4};
  r.board_height = {4, 4};
  r.num_moves = {20, 20};
  r.goal_count = {2, 2};
  r.goal_amount = {5, 5};
  Rng rng(1);
  const LevelParams p = generate_traditional(rng, r);
  CHECK(p == LevelParams{3, 700, 4, 4, 20, {5, 5}});
}

TEST_CASE("generate_traditional: deterministic for a fixed seed") {
  Rng a(42), b(42);
  CHECK(generate_traditional(a, {}) == generate_traditional(b, {}));
  CHECK(generate_traditional_batch(a, {}) == generate_traditional_batch(b, {}));
  CHECK(generate_traditional_batch(a, {}).size() == 3);
}

TEST_CASE("generate_traditional: 10,000 draws stay in range, hit every bound and look uniform") {
  const ParamRanges r;
  Rng rng(7);
  const int n = 10000;
  std::map<int, int> pieces, score, width, height, moves, count, amount;
  int amount_draws = 0;
  for (int i = 0; i < n; ++i) {
    const LevelParams p = generate_traditional(rng, r);
    REQUIRE(within_canonical(p));
    REQUIRE(validate(p, r, ValidationPolicy::Strict).report.violations.empty());
    pieces[p.num_different_pieces]++;
    score[p.score_goal]++;
    width[p.board_width]++;
    height[p.board_height]++;
    moves[p.num_moves]++;
    count[static_cast<int>(p.collection_goals.size())]++;
    for (int g : p.collection_goals) {
      amount[g]++;
      amount_draws++;
    }
  }
  for (const auto* m : {&pieces, &score, &width, &height, &moves, &count, &amount}) {
    CHECK(m->size() >= 2);
  }
  CHECK(pieces.count(3) == 1);
  CHECK(pieces.count(5) == 1);
  CHECK(score.count(700) == 1);
  CHECK(score.count(2000) == 1);
  CHECK(width.count(4) == 1);
  CHECK(width.count(6) == 1);
  CHECK(height.count(4) == 1);
  CHECK(height.count(6) == 1);
  CHECK(moves.count(20) == 1);
  CHECK(moves.count(30) == 1);
  CHECK(count.count(2) == 1);
  CHECK(count.count(4) == 1);
  CHECK(amount.count(5) == 1);
  CHECK(amount.count(15) == 1);

  CHECK(chi_square_p(pieces, uniform_shares(r.pieces), n) > 0.001);
  CHECK(chi_square_p(score, uniform_shares(r.score_goal), n) > 0.001);
  CHECK(chi_square_p(width, uniform_shares(r.board_width), n) > 0.001);
  CHECK(chi_square_p(height, uniform_shares(r.board_height), n) > 0.001);
  CHECK(chi_square_p(moves, uniform_shares(r.num_moves), n) > 0.001);
  CHECK(chi_square_p(amount, uniform_shares(r.goal_amount), amount_draws) > 0.001);

  // Goal count is uniform on {2,3,4} but capped by the piece count (uniform on
  // {3,4,5}): P(2) = 1/3, P(3) = 1/3 + 1/3 * 1/3, P(4) = 1/3 * 2/3.
  CHECK(chi_square_p(count, {{2, 3.0 / 9}, {3, 4.0 / 9}, {4, 2.0 / 9}}, n) > 0.001);
}

TEST_CASE("level batch JSON: published example parses and round-trips") {
  const auto levels = parse_level_batch(nlohmann::json::parse(kSampleBatch));
  REQUIRE(levels.size() == 3);
  CHECK(levels[0] == LevelParams{4, 1500, 6, 6, 30, {20, 25, 30}});
  CHECK(levels[1] == LevelParams{5, 1800, 6, 6, 35, {25, 30, 35}});
  CHECK(levels[2] == LevelParams{5, 2000, 6, 6, 40, {30, 35, 40}});
  CHECK(parse_level_batch(level_batch_to_json(levels)) == levels);
  CHECK(level_batch_to_json(levels) == nlohmann::json::parse(kSampleBatch));
}

TEST_CASE("level batch JSON: malformed input") {
  CHECK_THROWS_AS(parse_level_batch(nlohmann::json::object()), MalformedBatch);
  CHECK_THROWS_AS(parse_level_batch(nlohmann::json::parse(R"([{"score_goal": 900}])")), MalformedBatch);
  // An extra level_number key is accepted and dropped.
  const auto with_number = parse_level_batch(nlohmann::json::parse(
      R"([{"level_number": 2, "num_different_pieces": 3, "score_goal": 900, "board_width": 4,
           "board_height": 4, "num_moves": 25, "collection_goals": [5, 6]}])"));
  CHECK(with_number[0] == LevelParams{3, 900, 4, 4, 25, {5, 6}});
}

TEST_CASE("validate: published levels against the experiment ranges") {
  const auto levels = parse_level_batch(nlohmann::json::parse(kSampleBatch));
  const ParamRanges r;

  SUBCASE("Strict flags moves above 30 and every goal above 15") {
    const auto l1 = validate(levels[0], r, ValidationPolicy::Strict);
    CHECK(l1.report.action == ValidationAction::Rejected);
    CHECK(l1.report.violations.size() == 3);

    const auto l2 = validate(levels[1], r, ValidationPolicy::Strict);
    CHECK(l2.report.action == ValidationAction::Rejected);
    std::set<std::string> fields;
    for (const auto& v : l2.report.violations) fields.insert(v.field);
    CHECK(fields == std::set<std::string>{"num_moves", "collection_goals[0]", "collection_goals[1]",
                                          "collection_goals[2]"});
    CHECK(l2.report.violations[0].value == 35);
    CHECK(l2.report.violations[0].bound == IntRange{20, 30});

    const auto l3 = validate(levels[2], r, ValidationPolicy::Strict);
    CHECK(l3.report.violations.size() == 4);
  }

  SUBCASE("Clamp pulls each field to its nearest bound") {
    const auto l2 = validate(levels[1], r, ValidationPolicy::Clamp);
    CHECK(l2.report.action == ValidationAction::Clamped);
    CHECK(l2.report.violations.size() == 4);
    CHECK(l2.params.num_moves == 30);
    CHECK(l2.params.collection_goals == std::vector<int>{15, 15, 15});
    for (const auto& level : levels) {
      const auto clamped = validate(level, r, ValidationPolicy::Clamp);
      CHECK(within_canonical(clamped.params));
      // Idempotent: a second pass finds nothing.
      const auto again = validate(clamped.params, r, ValidationPolicy::Clamp);
      CHECK(again.report.violations.empty());
      CHECK(again.report.action == ValidationAction::Accepted);
      CHECK(again.params == clamped.params);
    }
  }
}

TEST_CASE("validate: in-range params are accepted unchanged") {
  const LevelParams p{4, 999, 5, 5, 25, {8, 9}};
  for (auto policy : {ValidationPolicy::Strict, ValidationPolicy::Clamp}) {
    const auto v = validate(p, {}, policy);
    CHECK(v.report.action == ValidationAction::Accepted);
    CHECK(v.report.violations.empty());
    CHECK(v.params == p);
  }
}

TEST_CASE("validate: goal list length") {
  const ParamRanges r;
  SUBCASE("too long is truncated") {
    const auto v = validate({5, 900, 5, 5, 25, {5, 6, 7, 8, 9}}, r, ValidationPolicy::Clamp);
    CHECK(v.params.collection_goals == std::vector<int>{5, 6, 7, 8});
  }
  SUBCASE("too short is padded with the minimum amount") {
    const auto v = validate({4, 900, 5, 5, 25, {9}}, r, ValidationPolicy::Clamp);
    CHECK(v.params.collection_goals == std::vector<int>{9, 5});
  }
  SUBCASE("more goals than colours is a violation") {
    const auto v = validate({3, 900, 5, 5, 25, {5, 5, 5, 5}}, r, ValidationPolicy::Strict);
    CHECK(v.report.action == ValidationAction::Rejected);
    const auto c = validate({3, 900, 5, 5, 25, {5, 5, 5, 5}}, r, ValidationPolicy::Clamp);
    CHECK(c.params.collection_goals.size() == 3);
  }
}

TEST_CASE("validate: structurally broken params are rejected under both policies") {
  for (auto policy : {ValidationPolicy::Strict, ValidationPolicy::Clamp}) {
    CHECK(validate({-1, 900, 5, 5, 25, {5, 5}}, {}, policy).report.action == ValidationAction::Rejected);
    CHECK(validate({3, 900, 5, 5, 25, {}}, {}, policy).report.action == ValidationAction::Rejected);
    CHECK(validate({3, 900, 0, 5, 25, {5, 5}}, {}, policy).report.action == ValidationAction::Rejected);
    CHECK_FALSE(validate({3, 900, 5, 5, 25, {}}, {}, policy).report.structural_error.empty());
  }
}

TEST_CASE("ParamRanges") {
  ParamRanges r;
  CHECK_NOTHROW(r.check());
  r.num_moves = {30, 20};
  CHECK_THROWS_AS(r.check(), std::invalid_argument);
  ParamRanges too_many;
  too_many.pieces = {3, 6};
  CHECK_THROWS_AS(too_many.check(), std::invalid_argument);

  ParamRanges custom;
  custom.num_moves = {15, 40};
  CHECK(nlohmann::json(custom).get<ParamRanges>().num_moves == IntRange{15, 40});
}

TEST_CASE("instantiate") {
  Rng rng(99);
  SUBCASE("goal colours are a distinct subset of the palette") {
    const LevelParams p{3, 900, 4, 4, 25, {5, 5}};
    for (int i = 0; i < 200; ++i) {
      const auto inst = instantiate(p, rng);
      REQUIRE(inst.goal_colors.size() == 2);
      CHECK(inst.goal_colors[0] != inst.goal_colors[1]);
      for (Color c : inst.goal_colors) CHECK((c >= 0 && c < 3));
    }
  }
  SUBCASE("10,000 boards: no match at start, always a productive swap") {
    int bad = 0;
    for (int i = 0; i < 10000; ++i) {
      const LevelParams p = generate_traditional(rng, {});
      const auto inst = instantiate(p, rng);
      if (inst.board.width() != p.board_width || inst.board.height() != p.board_height) ++bad;
      if (oracle::any_match(inst.board)) ++bad;
      if (available_moves(inst.board).empty()) ++bad;
      for (Color c : inst.board.cells()) {
        if (c < 0 || c >= p.num_different_pieces) ++bad;
      }
    }
    CHECK(bad == 0);
  }
  SUBCASE("same params and seed give the same level") {
    const LevelParams p{5, 1500, 6, 6, 25, {8, 9, 10}};
    Rng a(5), b(5);
    const auto x = instantiate(p, a);
    const auto y = instantiate(p, b);
    CHECK(x.board == y.board);
    CHECK(x.goal_colors == y.goal_colors);
  }
  SUBCASE("unusable params") {
    CHECK_THROWS_AS(instantiate({3, 900, 4, 4, 25, {}}, rng), std::invalid_argument);
    CHECK_THROWS_AS(instantiate({3, 900, 4, 4, 25, {5, 5, 5, 5}}, rng), std::invalid_argument);
  }
}
