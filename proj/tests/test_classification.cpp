#include <doctest.h>

#include <random>

#include "bolt/classification.hpp"
#include "bolt/errors.hpp"
#include "support.hpp"

using namespace bolt;
using namespace testutil;

namespace {

std::vector<AnnotatedUtterance> make_pool(int positives, int negatives, const std::string& code,
                                          Speaker speaker = Speaker::therapist) {
  std::vector<AnnotatedUtterance> pool;
  for (int i = 0; i < positives + negatives; ++i) {
    LabelSet labels;
    if (i < positives) labels.insert(code);
    pool.push_back({"pool", i, speaker, "example " + std::to_string(i), labels});
  }
  return pool;
}

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

Corpus four_therapist_turns() {
  Corpus c;
  c.conversations.push_back(make_conversation("a", {{C, "I feel lost.", {}},
                                                    {T, "Many people feel that way.", {}},
                                                    {C, "Really?", {}},
                                                    {T, "Yes, it is common.", {}}}));
  c.conversations.push_back(make_conversation("b", {{T, "Welcome.", {}}, {T, "How are you?", {}}}));
  return c;
}

}  // namespace

TEST_CASE("multi-label prompt with definitions only") {
  ClassifierSpec spec;
  const auto& tax = Taxonomy::builtin();
  auto build = build_multi_label_prompt(spec, tax, "It is normal to feel that way.");
  REQUIRE(build.messages.size() == 2);
  const std::string& sys = build.messages[0].content;
  for (const auto* code : tax.codes_for(Speaker::therapist)) {
    CHECK(sys.find(code->definition) != std::string::npos);
  }
  for (const auto* code : tax.codes_for(Speaker::client)) {
    CHECK(sys.find(code->definition) == std::string::npos);
  }
  CHECK(count(sys, "Utterance:") == 0);
  CHECK(build.messages[1].content.rfind(std::string(kMultiLabelInstruction) + "?", 0) == 0);
  CHECK(build.messages[1].content.find("\"It is normal to feel that way.\"") != std::string::npos);
}

TEST_CASE("multi-label prompt with three demonstrations is deterministic") {
  ClassifierSpec spec;
  spec.mode = ClassifierMode::multi_def_ex;
  spec.example_pool = make_pool(5, 5, "t.planning");
  spec.seed = 3;
  const auto& tax = Taxonomy::builtin();
  auto a = build_multi_label_prompt(spec, tax, "x");
  auto b = build_multi_label_prompt(spec, tax, "x");
  CHECK(a.messages == b.messages);
  CHECK(count(a.messages[0].content, "Utterance: \"example") == 3);
  CHECK(count(a.messages[0].content, "Behaviors:") == 3);
}

TEST_CASE("binary prompt names one code") {
  ClassifierSpec spec;
  spec.mode = ClassifierMode::binary_def_ex;
  spec.example_pool = make_pool(5, 5, "t.normalizing");
  const auto& tax = Taxonomy::builtin();
  const auto& norm = tax.at("t.normalizing");
  auto build = build_binary_prompt(spec, norm, "That is common.");
  const std::string& sys = build.messages[0].content;
  CHECK(sys.find(norm.definition) != std::string::npos);
  for (const auto* code : tax.codes_for(Speaker::therapist)) {
    if (code->id != norm.id) CHECK(sys.find(code->definition) == std::string::npos);
  }
  CHECK(build.messages[1].content.rfind("Classify if the utterance contains Normalizing. Answer in Yes or No.", 0) == 0);
  CHECK(build_binary_prompt(spec, norm, "That is common.").messages == build.messages);
  CHECK(build.warnings.empty());
}

TEST_CASE("binary prompt with a positive-only pool warns") {
  ClassifierSpec spec;
  spec.mode = ClassifierMode::binary_def_ex;
  spec.example_pool = make_pool(6, 0, "t.normalizing");
  auto build = build_binary_prompt(spec, Taxonomy::builtin().at("t.normalizing"), "x");
  CHECK(count(build.messages[0].content, "Answer: Yes") == 3);
  CHECK(count(build.messages[0].content, "Answer: No") == 0);
  CHECK(build.warnings.size() == 1);
}

TEST_CASE("select_few_shot") {
  auto pool = make_pool(5, 5, "t.planning");
  SUBCASE("deterministic") {
    auto a = select_few_shot(pool, 3, 1);
    auto b = select_few_shot(pool, 3, 1);
    CHECK(a.demonstrations.size() == 3);
    CHECK(a.demonstrations == b.demonstrations);
  }
  SUBCASE("pool too small") { CHECK_THROWS_AS(select_few_shot(make_pool(1, 1, "t.planning"), 3, 1), PreconditionError); }
  SUBCASE("balanced for a code") {
    auto shots = select_few_shot(pool, 3, 1, "t.planning");
    int pos = 0;
    for (const auto& d : shots.demonstrations) pos += d.labels.contains("t.planning");
    CHECK(pos == 2);
    CHECK(shots.demonstrations.size() == 3);
    CHECK(shots.warnings.empty());
  }
  SUBCASE("short on positives tops up with negatives") {
    auto shots = select_few_shot(make_pool(1, 5, "t.planning"), 3, 1, "t.planning");
    int pos = 0;
    for (const auto& d : shots.demonstrations) pos += d.labels.contains("t.planning");
    CHECK(pos == 1);
    CHECK(shots.demonstrations.size() == 3);
    CHECK(shots.warnings.size() == 1);
  }
  SUBCASE("no duplicates") {
    for (std::int64_t seed = 0; seed < 50; ++seed) {
      auto shots = select_few_shot(pool, 7, seed, "t.planning");
      std::set<int> idx;
      for (const auto& d : shots.demonstrations) idx.insert(d.utterance_index);
      CHECK(idx.size() == 7);
    }
  }
}

TEST_CASE("parse_multi_label examples") {
  const auto& tax = Taxonomy::builtin();
  auto a = parse_multi_label("Reflections on Needs, Normalizing", tax, Speaker::therapist);
  CHECK(a.codes == LabelSet{"t.reflection_needs", "t.normalizing"});
  CHECK(a.warnings == 0);

  auto none = parse_multi_label("None.", tax, Speaker::therapist);
  CHECK(none.codes.empty());
  CHECK(none.warnings == 0);

  auto partial = parse_multi_label("Empathy, Planning", tax, Speaker::therapist);
  CHECK(partial.codes == LabelSet{"t.planning"});
  CHECK(partial.warnings == 1);

  auto listy = parse_multi_label("Behaviors:\n1. Planning\n- Psychoeducation and Normalizing", tax, Speaker::therapist);
  CHECK(listy.codes == LabelSet{"t.planning", "t.psychoeducation", "t.normalizing"});
}

TEST_CASE("parse(serialize(S)) == S for all client subsets and random therapist subsets") {
  const auto& tax = Taxonomy::builtin();
  const auto client = tax.ids_for(Speaker::client);
  for (unsigned mask = 0; mask < (1u << client.size()); ++mask) {
    LabelSet s;
    for (std::size_t i = 0; i < client.size(); ++i) {
      if (mask & (1u << i)) s.insert(client[i]);
    }
    auto parsed = parse_multi_label(serialize_labels(s, tax), tax, Speaker::client);
    CHECK(parsed.codes == s);
    CHECK(parsed.warnings == 0);
  }
  const auto therapist = tax.ids_for(Speaker::therapist);
  std::mt19937_64 gen(42);
  for (int n = 0; n < 200; ++n) {
    LabelSet s;
    for (const auto& id : therapist) {
      if (gen() % 2) s.insert(id);
    }
    CHECK(parse_multi_label(serialize_labels(s, tax), tax, Speaker::therapist).codes == s);
  }
}

TEST_CASE("parse_binary") {
  for (const char* yes : {"Yes.", "yes", "YES", " Yes, it does.", "\"Yes\""}) CHECK(parse_binary(yes) == BinaryAnswer::yes);
  for (const char* no : {"no", "No.", "NO", "No, it does not."}) CHECK(parse_binary(no) == BinaryAnswer::no);
  for (const char* other : {"Possibly", "", "Nope", "Yesterday"}) CHECK(parse_binary(other) == BinaryAnswer::unparseable);
}

TEST_CASE("classify_corpus with a constant mock") {
  auto gw = mock_gateway({{"default", "Normalizing"}});
  ClassifierSpec spec;
  auto run = classify_corpus(*gw, spec, Taxonomy::builtin(), four_therapist_turns());
  REQUIRE(run.predictions.size() == 4);
  for (const auto& p : run.predictions) CHECK(p.predicted == LabelSet{"t.normalizing"});
  CHECK(run.predictions[0].conversation_id == "a");
  CHECK(run.predictions[0].utterance_index == 1);
  CHECK(run.failures.empty());
}

TEST_CASE("binary mode issues one call per code and utterance") {
  TempDir cache;
  Corpus corpus;
  corpus.conversations.push_back(make_conversation("z", {{T, "one", {}}, {C, "two", {}}, {T, "three", {}}}));
  ClassifierSpec spec;
  spec.mode = ClassifierMode::binary_def_ex;
  spec.example_pool = make_pool(4, 4, "t.planning");
  auto gw = mock_gateway({{"rules", {{{"contains", "contains Planning"}, {"response", "Yes"}}}}, {"default", "No"}},
                         "mock", cache.path());
  auto run = classify_corpus(*gw, spec, Taxonomy::builtin(), corpus, 3);
  CHECK(gw->stats().network_calls == 26);
  REQUIRE(run.predictions.size() == 2);
  CHECK(run.predictions[0].predicted == LabelSet{"t.planning"});
  CHECK(run.predictions[0].raw_by_code.size() == 13);

  auto warm = mock_gateway(nlohmann::json::object(), "mock", cache.path());
  auto again = classify_corpus(*warm, spec, Taxonomy::builtin(), corpus, 3);
  CHECK(again.predictions == run.predictions);
  CHECK(warm->stats().network_calls == 0);
}

TEST_CASE("classification failures are per utterance") {
  auto gw = callback_gateway([](const ChatRequest& r) -> std::string {
    if (r.messages.back().content.find("How are you?") != std::string::npos) throw BackendError("down");
    return "Planning";
  });
  auto run = classify_corpus(*gw, ClassifierSpec{}, Taxonomy::builtin(), four_therapist_turns(), 2);
  CHECK(run.predictions.size() == 3);
  REQUIRE(run.failures.size() == 1);
  CHECK(run.failures[0].conversation_id == "b");
  CHECK(run.failures[0].utterance_index == 1);
}

TEST_CASE("few-shot pool must not contain targets") {
  Corpus corpus = four_therapist_turns();
  ClassifierSpec spec;
  spec.mode = ClassifierMode::multi_def_ex;
  spec.example_pool = make_pool(4, 0, "t.planning");
  spec.example_pool.push_back({"a", 1, Speaker::therapist, "Many people feel that way.", {"t.normalizing"}});
  auto gw = mock_gateway({{"default", "None"}});
  CHECK_THROWS_AS(classify_corpus(*gw, spec, Taxonomy::builtin(), corpus), PreconditionError);
}

TEST_CASE("context window shows preceding turns") {
  std::vector<std::string> users;
  std::mutex m;
  auto gw = callback_gateway([&](const ChatRequest& r) {
    std::lock_guard lock(m);
    users.push_back(r.messages.back().content);
    return std::string("None");
  });
  ClassifierSpec spec;
  spec.context_window = 1;
  Corpus corpus;
  corpus.conversations.push_back(make_conversation("a", {{C, "I feel lost.", {}}, {T, "Many feel that way.", {}}}));
  classify_corpus(*gw, spec, Taxonomy::builtin(), corpus);
  REQUIRE(users.size() == 1);
  CHECK(users[0].find("Client: I feel lost.") != std::string::npos);
}

TEST_CASE("prediction JSONL round trip and merge") {
  Prediction p;
  p.conversation_id = "a";
  p.utterance_index = 1;
  p.predicted = {"t.normalizing", "t.planning"};
  p.mode = ClassifierMode::multi_def_ex;
  p.warnings = 2;
  std::stringstream buf;
  write_predictions(buf, {p});
  auto back = read_predictions(buf);
  REQUIRE(back.size() == 1);
  CHECK(back[0].predicted == p.predicted);
  CHECK(back[0].warnings == 2);
  CHECK(back[0].mode == ClassifierMode::multi_def_ex);

  Corpus merged = merge_predictions(four_therapist_turns(), {p}, Speaker::therapist);
  CHECK(merged.conversations[0].utterances[1].labels == p.predicted);
  CHECK(merged.conversations[0].utterances[3].labels == LabelSet{});  // untouched

  std::istringstream junk("{\"conversation_id\": 3}\n");
  CHECK_THROWS_AS(read_predictions(junk), DataError);
}
