#include <doctest.h>

#include <algorithm>
#include <random>

#include "bolt/errors.hpp"
#include "bolt/lexicon.hpp"
#include "support.hpp"

using namespace bolt;
using namespace testutil;

namespace {

Lexicon sadness() {
  std::istringstream in("[Sadness]\nsad\ndown\ngriev*\n");
  return parse_lexicon(in, "fixture");
}

Lexicon parse(const std::string& text) {
  std::istringstream in(text);
  return parse_lexicon(in);
}

// Does `token` equal x + s for some string s? Checked one character at a time.
bool extends(const std::string& token, const std::string& x) {
  if (token.size() < x.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (token[i] != x[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("parse_lexicon") {
  auto lex = sadness();
  REQUIRE(lex.categories.size() == 1);
  CHECK(lex.categories[0].entries.size() == 3);
  CHECK(std::count_if(lex.categories[0].entries.begin(), lex.categories[0].entries.end(),
                      [](const auto& e) { return e.wildcard; }) == 1);
  CHECK(lex.warnings.empty());

  CHECK_THROWS_AS(parse("[S]\n*sad\n"), DataError);
  CHECK_THROWS_AS(parse("[S]\ns*d\n"), DataError);
  CHECK_THROWS_AS(parse("[S]\n*\n"), DataError);
  CHECK_THROWS_AS(parse("sad\n"), DataError);
  CHECK_THROWS_AS(parse("[S\nsad\n"), DataError);
  CHECK_THROWS_AS(parse("[S]\n[S]\n"), DataError);
  CHECK_THROWS_AS(parse("[S]\nvery sad\n"), DataError);

  auto empty = parse("");
  CHECK(empty.categories.empty());
  CHECK(empty.warnings.size() == 1);

  auto commented = parse("# header\n[Mixed]  # trailing\nHAPPY # upper\n\n");
  REQUIRE(commented.categories.size() == 1);
  CHECK(commented.categories[0].entries.at(0).text == "happy");
}

TEST_CASE("tokenize") {
  CHECK(tokenize("I can't do it!") == std::vector<std::string>{"i", "can't", "do", "it"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("well\xE2\x80\x94okay") == std::vector<std::string>{"well", "okay"});
  CHECK(tokenize("range 1\xE2\x80\x93" "2") == std::vector<std::string>{"range", "1", "2"});
  CHECK(tokenize("I\xE2\x80\x99m fine") == std::vector<std::string>{"i'm", "fine"});
  CHECK(tokenize("  ... -- !! ").empty());
  CHECK(tokenize("(hello), \"world\"") == std::vector<std::string>{"hello", "world"});
}

TEST_CASE("category_rate and big_words_rate") {
  auto lex = sadness();
  CHECK(category_rate(tokenize("I feel sad and down, grieving"), lex, "Sadness") == 50.0);
  CHECK(category_rate(tokenize("all is well"), lex, "Sadness") == 0.0);
  CHECK_FALSE(category_rate({}, lex, "Sadness").has_value());
  CHECK_THROWS_AS(category_rate({"x"}, lex, "Joy"), DataError);

  CHECK(big_words_rate(tokenize("I am feeling overwhelmed today")) == 40.0);
  CHECK(big_words_rate(tokenize("I am ok")) == 0.0);
  CHECK(big_words_rate(tokenize("understanding complicated psychological terminology")) == 100.0);
  CHECK_FALSE(big_words_rate({}).has_value());
  // code points, not bytes
  CHECK(utf8_length("caf\xC3\xA9") == 4);
  CHECK(big_words_rate({"na\xC3\xAFvet\xC3\xA9"}) == 100.0);
  CHECK(big_words_rate({"caf\xC3\xA9s"}) == 0.0);
}

TEST_CASE("hand-counted fixture sentences") {
  const auto fixture = nlohmann::json::parse(read_file(std::string(BOLT_FIXTURES) + "/lexicon_sentences.json"));
  const Lexicon lex = load_lexicon(std::string(BOLT_SOURCE_DIR) + "/data/demo_lexicon.txt");
  CHECK(lex.categories.size() == 6);
  for (const auto& s : fixture.at("sentences")) {
    const std::string text = s.at("text");
    CAPTURE(text);
    const auto tokens = tokenize(text);
    CHECK(tokens == s.at("tokens").get<std::vector<std::string>>());
    const double n = static_cast<double>(tokens.size());
    for (const auto& [category, hits] : s.at("hits").items()) {
      CAPTURE(category);
      const double expected = 100.0 * hits.get<double>() / n;
      if (category == "BigWords") {
        CHECK(big_words_rate(tokens) == expected);
      } else {
        CHECK(category_rate(tokens, lex, category) == expected);
      }
    }
  }
}

TEST_CASE("prefix wildcard equals a brute-force matcher") {
  std::mt19937_64 gen(17);
  const std::string alphabet = "abc'";
  auto word = [&](std::size_t max_len) {
    std::string w(1 + gen() % max_len, 'a');
    for (auto& ch : w) ch = alphabet[gen() % alphabet.size()];
    return w;
  };
  for (int round = 0; round < 20; ++round) {
    const std::string prefix = word(3);
    LexiconEntry entry{prefix, true};
    for (int i = 0; i < 50; ++i) {
      const std::string token = word(6);
      CHECK(entry.matches(token) == extends(token, prefix));
    }
  }
  LexiconEntry literal{"abc", false};
  CHECK(literal.matches("abc"));
  CHECK_FALSE(literal.matches("abcd"));
}

TEST_CASE("disjoint single-word categories covering every token sum to 100") {
  auto lex = parse("[A]\nred\nblue\n[B]\ngreen\n[C]\nteal*\n");
  const auto tokens = tokenize("red green teal teals blue red");
  double total = 0.0;
  for (const auto& c : lex.categories) total += *category_rate(tokens, lex, c.name);
  CHECK(total == 100.0);

  auto shuffled = tokens;
  std::reverse(shuffled.begin(), shuffled.end());
  for (const auto& c : lex.categories) CHECK(category_rate(shuffled, lex, c.name) == category_rate(tokens, lex, c.name));
}

TEST_CASE("lexicon_profile scores concatenated therapist text") {
  auto lex = sadness();
  std::vector<Conversation> group{
      make_conversation("a", {{T, "I feel sad", {}}, {C, "sad sad sad", {}}, {T, "and down, grieving", {}}}),
      make_conversation("b", {{C, "only the client speaks", {}}}),
  };
  auto p = lexicon_profile(group, "g", lex);
  CHECK(p.behaviors == std::vector<std::string>{"Sadness", "BigWords"});
  CHECK(p.per_behavior.at("Sadness") == std::vector<double>{50.0});
  CHECK(p.per_behavior.at("BigWords").size() == 1);
  CHECK(p.measure == Measure::lexicon_pct);

  auto reserved = parse("[BigWords]\nx\n");
  CHECK_THROWS_AS(lexicon_profile(group, "g", reserved), DataError);
}
