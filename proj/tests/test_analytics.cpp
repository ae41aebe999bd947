#include <doctest.h>

#include <cmath>
#include <random>

#include "bolt/analytics.hpp"
#include "bolt/errors.hpp"
#include "support.hpp"

using namespace bolt;
using namespace testutil;

namespace {

const Taxonomy& tax() { return Taxonomy::builtin(); }
const BehaviorCode& code(const char* id) { return tax().at(id); }

BehaviorProfile profile_of(std::string id, Measure m, std::map<std::string, std::vector<double>> rows) {
  BehaviorProfile p;
  p.group_id = std::move(id);
  p.measure = m;
  for (auto& [k, v] : rows) {
    p.behaviors.push_back(k);
    p.per_behavior[k] = v;
  }
  return p;
}

const ComparisonRow& row_for(const ComparisonTable& t, const std::string& behavior) {
  for (const auto& r : t.rows) {
    if (r.behavior == behavior) return r;
  }
  throw std::runtime_error("no row " + behavior);
}

}  // namespace

TEST_CASE("behavior_frequency") {
  auto conv = make_conversation("f", {{T, "a", {"t.problem_solving"}},
                                      {C, "b", {}},
                                      {T, "c", {}},
                                      {T, "d", {"t.problem_solving", "t.planning"}},
                                      {T, "e", {}}});
  CHECK(behavior_frequency(conv, code("t.problem_solving")) == 50.0);
  CHECK(behavior_frequency(conv, code("t.normalizing")) == 0.0);

  auto client_only = make_conversation("c", {{C, "x", {"c.sharing_experiences"}}});
  CHECK_FALSE(behavior_frequency(client_only, code("t.problem_solving")).has_value());

  auto unlabeled = conv;
  unlabeled.utterances[2].labels.reset();
  CHECK_THROWS_AS(behavior_frequency(unlabeled, code("t.problem_solving")), DataError);
}

TEST_CASE("frequency_profile") {
  std::vector<Conversation> group;
  for (int hits : {1, 2, 3}) {
    Conversation c;
    c.id = "g" + std::to_string(hits);
    for (int i = 0; i < 5; ++i) {
      LabelSet labels;
      if (i < hits) labels.insert("t.planning");
      c.utterances.push_back({i, T, "x", labels});
    }
    group.push_back(c);
  }
  auto p = frequency_profile(group, "g");
  CHECK(p.per_behavior["t.planning"] == std::vector<double>{20, 40, 60});
  CHECK(p.behaviors.size() == 19);
  CHECK(p.per_behavior["c.gained_insight"].empty());  // no client utterances anywhere
  CHECK(frequency_profile(std::span(group).first(1), "one").per_behavior["t.planning"].size() == 1);
  CHECK_THROWS_AS(frequency_profile({}, "none"), PreconditionError);
}

TEST_CASE("first_occurrence_turn") {
  auto conv = make_conversation("t", {{C, "a", {}}, {T, "b", {"t.normalizing"}}, {C, "c", {}}, {T, "d", {}}});
  CHECK(first_occurrence_turn(conv, code("t.normalizing")) == 2);
  CHECK(first_occurrence_turn(conv, code("t.normalizing"), TurnBase::speaker_turns) == 1);
  CHECK_FALSE(first_occurrence_turn(conv, code("t.planning")).has_value());
  auto first = make_conversation("u", {{T, "a", {"t.planning"}}});
  CHECK(first_occurrence_turn(first, code("t.planning")) == 1);
}

TEST_CASE("mean_occurrence_position") {
  Conversation c;
  c.id = "m";
  for (int i = 0; i < 21; ++i) {
    LabelSet labels;
    if (i == 0 || i == 20) labels.insert("t.planning");
    c.utterances.push_back({i, T, "x", labels});
  }
  CHECK(mean_occurrence_position(c, code("t.planning")) == 0.5);
  c.utterances[0].labels = LabelSet{};
  CHECK(mean_occurrence_position(c, code("t.planning")) == 1.0);
  CHECK_FALSE(mean_occurrence_position(c, code("t.normalizing")).has_value());
  auto single = make_conversation("s", {{T, "a", {"t.planning"}}});
  CHECK(mean_occurrence_position(single, code("t.planning")) == 0.0);
}

TEST_CASE("adaptability matrix") {
  SUBCASE("one pair") {
    std::vector<Conversation> g{make_conversation(
        "a", {{C, "sad", {"c.sharing_negative_emotions"}}, {T, "you feel sad", {"t.reflection_emotions"}}})};
    auto m = adaptability_matrix(g, "g");
    auto& sne = m.at("c.sharing_negative_emotions");
    CHECK(sne.per_behavior.at("t.reflection_emotions") == std::vector<double>{100.0});
    for (const auto& b : sne.behaviors) {
      if (b != "t.reflection_emotions") CHECK(sne.per_behavior.at(b) == std::vector<double>{0.0});
    }
    CHECK(m.at("c.gained_insight").per_behavior.at("t.planning").empty());
    CHECK(sne.unit == Unit::occurrence);
  }
  SUBCASE("client followed by client contributes nothing") {
    std::vector<Conversation> g{make_conversation(
        "a", {{C, "sad", {"c.sharing_negative_emotions"}}, {C, "more", {}}, {T, "hm", {"t.planning"}}})};
    auto m = adaptability_matrix(g, "g");
    CHECK(m.at("c.sharing_negative_emotions").per_behavior.at("t.planning").empty());
    // a wider window reaches the therapist reply
    auto wide = adaptability_matrix(g, "g", tax(), 2);
    CHECK(wide.at("c.sharing_negative_emotions").per_behavior.at("t.planning") == std::vector<double>{100.0});
  }
  SUBCASE("two pairs") {
    std::vector<Conversation> g{make_conversation("a", {{C, "x", {"c.sharing_negative_emotions"}},
                                                        {T, "y", {"t.reflection_emotions"}},
                                                        {C, "x", {"c.sharing_negative_emotions"}},
                                                        {T, "y", {"t.planning"}}})};
    auto m = adaptability_matrix(g, "g");
    CHECK(stats::mean(m.at("c.sharing_negative_emotions").per_behavior.at("t.reflection_emotions")) == 50.0);
  }
}

TEST_CASE("profile_difference") {
  SUBCASE("identical profiles") {
    auto a = profile_of("a", Measure::frequency_pct, {{"t.planning", {10, 20, 30}}, {"t.normalizing", {0, 5, 5}}});
    auto t = profile_difference(a, a);
    for (const auto& r : t.rows) {
      CHECK(r.mean_diff == 0.0);
      CHECK(r.p == 1.0);
      CHECK_FALSE(r.significant);
    }
  }
  SUBCASE("zero variance") {
    auto a = profile_of("a", Measure::frequency_pct, {{"t.planning", {10, 10, 10, 10}}});
    auto b = profile_of("b", Measure::frequency_pct, {{"t.planning", {0, 0, 0, 0}}});
    auto r = profile_difference(a, b).rows.at(0);
    CHECK(r.mean_diff == 10.0);
    CHECK(std::isinf(r.t));
    CHECK(r.p == 0.0);
    CHECK(r.significant);
  }
  SUBCASE("too few units") {
    auto a = profile_of("a", Measure::frequency_pct, {{"t.planning", {10}}});
    auto b = profile_of("b", Measure::frequency_pct, {{"t.planning", {0, 1}}});
    auto r = profile_difference(a, b).rows.at(0);
    CHECK_FALSE(r.testable);
    CHECK(std::isnan(r.p));
    CHECK_FALSE(r.significant);
    CHECK(r.mean_diff == 9.5);
  }
  SUBCASE("measure mismatch") {
    auto a = profile_of("a", Measure::frequency_pct, {});
    auto b = profile_of("b", Measure::first_turn, {});
    CHECK_THROWS_AS(profile_difference(a, b), DataError);
  }
  SUBCASE("antisymmetry on random profiles") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0, 100);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> x(2 + gen() % 10), y(2 + gen() % 10);
      for (auto& v : x) v = u(gen);
      for (auto& v : y) v = u(gen);
      auto a = profile_of("a", Measure::frequency_pct, {{"t.planning", x}});
      auto b = profile_of("b", Measure::frequency_pct, {{"t.planning", y}});
      auto ab = profile_difference(a, b).rows.at(0);
      auto ba = profile_difference(b, a).rows.at(0);
      CHECK(ab.mean_diff == -ba.mean_diff);
      CHECK(ab.p == ba.p);
      CHECK(ab.t == -ba.t);
    }
  }
}

TEST_CASE("comparison table json round trip keeps NaN and infinities") {
  auto a = profile_of("a", Measure::frequency_pct, {{"t.planning", {10, 10}}, {"t.normalizing", {1}}, {"t.reflection_needs", {1, 2, 4}}});
  auto b = profile_of("b", Measure::frequency_pct, {{"t.planning", {0, 0}}, {"t.normalizing", {1, 2}}, {"t.reflection_needs", {3, 9, 0.1}}});
  auto t = profile_difference(a, b, stats::Variance::welch);
  auto back = comparison_table_from_json(nlohmann::json::parse(to_json(t).dump()));
  CHECK(to_json(back).dump() == to_json(t).dump());
  CHECK(std::isinf(row_for(back, "t.planning").t));
  CHECK(std::isnan(row_for(back, "t.normalizing").p));
  CHECK(back.variance == stats::Variance::welch);
  const auto& orig = row_for(t, "t.reflection_needs");
  const auto& copy = row_for(back, "t.reflection_needs");
  CHECK(orig == copy);
}

TEST_CASE("adaptability_difference labels rows with the client condition") {
  std::vector<Conversation> g1{make_conversation("a", {{C, "x", {"c.sharing_negative_emotions"}}, {T, "y", {"t.reflection_emotions"}},
                                                       {C, "x", {"c.sharing_negative_emotions"}}, {T, "y", {}}})};
  auto m = adaptability_matrix(g1, "g1");
  auto t = adaptability_difference(m, m);
  CHECK(t.rows.size() == 6 * 13);
  CHECK(t.rows.front().condition.has_value());
  CHECK(t.measure == Measure::conditional_pct);
}

TEST_CASE("split_by_dataset") {
  auto a = make_conversation("a", {{T, "x", {}}});
  auto b = make_conversation("b", {{T, "x", {}}});
  b.dataset_id = "other";
  std::vector<Conversation> g{a, b};
  auto parts = split_by_dataset(g);
  CHECK(parts.size() == 2);
  CHECK(parts.at("other").at(0).id == "b");
}
