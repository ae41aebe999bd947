#include <doctest.h>

#include <random>

#include "bolt/errors.hpp"
#include "bolt/simulation.hpp"
#include "support.hpp"

using namespace bolt;
using namespace testutil;

namespace {

Conversation reference_tctct() {
  return make_conversation("ref", {{T, "Hi, what brings you in?", {}},
                                   {C, "I can't sleep.", {}},
                                   {T, "Tell me more.", {}},
                                   {C, "Work keeps me up.", {}},
                                   {T, "That sounds hard.", {}}});
}

}  // namespace

TEST_CASE("single-response task extraction") {
  auto tasks = extract_single_response_tasks(reference_tctct());
  REQUIRE(tasks.size() == 2);
  CHECK(tasks[0].size() == 2);
  CHECK(tasks[1].size() == 4);
  CHECK(tasks[1].back().text == "Work keeps me up.");

  CHECK(extract_single_response_tasks(make_conversation("c", {{C, "x", {}}})).size() == 1);
  CHECK(extract_single_response_tasks(make_conversation("t", {{T, "x", {}}, {T, "y", {}}})).empty());
}

TEST_CASE("task count equals client utterance count on random conversations") {
  std::mt19937_64 gen(11);
  for (int n = 0; n < 200; ++n) {
    Conversation c;
    c.id = "r";
    const int len = 1 + static_cast<int>(gen() % 30);
    int clients = 0;
    for (int i = 0; i < len; ++i) {
      const Speaker s = gen() % 2 ? T : C;
      clients += s == C;
      c.utterances.push_back({i, s, "x", std::nullopt});
    }
    CHECK(extract_single_response_tasks(c).size() == static_cast<std::size_t>(clients));
  }
}

TEST_CASE("turn messages map the simulated party to assistant") {
  const auto ref = reference_tctct();
  auto msgs = build_turn_messages("sys", ref.utterances, Speaker::therapist);
  REQUIRE(msgs.size() == 6);
  CHECK(msgs[0].role == Role::system);
  CHECK(msgs[1].role == Role::assistant);
  CHECK(msgs[2].role == Role::user);
  auto as_client = build_turn_messages("sys", ref.utterances, Speaker::client);
  CHECK(as_client[1].role == Role::user);
  CHECK(as_client[2].role == Role::assistant);
}

TEST_CASE("generate_single_response") {
  const auto templates = PromptTemplateSet::defaults();
  const auto ref = reference_tctct();
  std::vector<Utterance> prefix(ref.utterances.begin(), ref.utterances.begin() + 2);

  auto gw = mock_gateway({{"default", "That sounds difficult."}});
  Utterance u = generate_single_response(*gw, templates, prefix);
  CHECK(u.speaker == Speaker::therapist);
  CHECK(u.index == 2);
  CHECK(u.text == "That sounds difficult.");

  std::vector<Utterance> bad(ref.utterances.begin(), ref.utterances.begin() + 3);
  CHECK_THROWS_AS(generate_single_response(*gw, templates, bad), PreconditionError);

  auto empty = mock_gateway({{"default", "   "}});
  CHECK_THROWS_AS(generate_single_response(*empty, templates, prefix), BackendError);
}

TEST_CASE("therapist prompt is the base prompt") {
  std::vector<ChatMessage> seen;
  auto gw = callback_gateway([&](const ChatRequest& r) {
    seen = r.messages;
    return std::string("ok");
  });
  const auto ref = reference_tctct();
  std::vector<Utterance> prefix(ref.utterances.begin(), ref.utterances.begin() + 2);
  generate_single_response(*gw, PromptTemplateSet::defaults(), prefix);
  REQUIRE_FALSE(seen.empty());
  CHECK(seen[0].content == kBaseTherapistPrompt);
  CHECK(std::string(kBaseTherapistPrompt).rfind("Act as if you're a professional therapist.", 0) == 0);
}

TEST_CASE("simulate_single_response assembles client turns and replies") {
  auto gw = mock_gateway({{"default", "reply"}});
  Conversation sim = simulate_single_response(*gw, PromptTemplateSet::defaults(), reference_tctct());
  REQUIRE(sim.utterances.size() == 4);
  CHECK(sim.source == Source::sim_single_response);
  CHECK(sim.utterances[0].text == "I can't sleep.");
  CHECK(sim.utterances[1].text == "reply");
  CHECK(sim.utterances[2].speaker == Speaker::client);
  CHECK(sim.utterances[3].index == 3);
  CHECK(sim.extra.at("reference_id") == "ref");
  CHECK(validate(sim).empty());
}

TEST_CASE("full simulation runs to max_turns without an end token") {
  auto therapist = mock_gateway({{"default", "therapist line"}}, "t");
  auto client = mock_gateway({{"default", "client line"}}, "c");
  const auto ref = reference_tctct();
  SimulationJob job{&ref, therapist.get(), client.get(), SimulationMode::full, 20, 5};
  Conversation sim = simulate_full_conversation(job, PromptTemplateSet::defaults());
  CHECK(sim.utterances.size() == 20);
  CHECK(validate(sim).empty());
  CHECK(sim.extra.at("ended_by") == "max_turns");
  CHECK(sim.model_id == "t");
}

TEST_CASE("full simulation stops at the end token and strips it") {
  const auto templates = PromptTemplateSet::defaults();
  auto therapist = mock_gateway({{"default", "therapist line"}}, "t");
  std::atomic<int> client_turns{0};
  auto client = callback_gateway([&](const ChatRequest&) {
    return ++client_turns == 3 ? "Thanks, bye. " + templates.end_token : std::string("client line");
  });
  const auto ref = reference_tctct();
  SimulationJob job{&ref, therapist.get(), client.get(), SimulationMode::full, 20, 1};
  Conversation sim = simulate_full_conversation(job, templates);
  CHECK(client_turns.load() == 3);
  REQUIRE_FALSE(sim.utterances.empty());
  CHECK(sim.utterances.back().speaker == Speaker::client);
  CHECK(sim.utterances.back().text == "Thanks, bye.");
  for (const auto& u : sim.utterances) CHECK(u.text.find(templates.end_token) == std::string::npos);
  CHECK(sim.extra.at("ended_by") == "end_token:client");
}

TEST_CASE("full simulation first speaker is a seeded coin") {
  auto therapist = mock_gateway({{"default", "t"}}, "t");
  auto client = mock_gateway({{"default", "c"}}, "c");
  const auto ref = reference_tctct();
  std::set<std::string> firsts;
  for (std::int64_t seed = 0; seed < 16; ++seed) {
    SimulationJob job{&ref, therapist.get(), client.get(), SimulationMode::full, 4, seed};
    auto a = simulate_full_conversation(job, PromptTemplateSet::defaults());
    auto b = simulate_full_conversation(job, PromptTemplateSet::defaults());
    CHECK(a == b);
    CHECK(a.extra.at("first_speaker") == std::string(to_string(a.utterances[0].speaker)));
    firsts.insert(a.extra.at("first_speaker").get<std::string>());
  }
  CHECK(firsts.size() == 2);
}

TEST_CASE("full simulation is reproducible from a warm cache") {
  TempDir cache;
  std::mt19937_64 gen(3);
  auto noisy = [&](std::string who) {
    return [&gen, who](const ChatRequest&) { return who + " " + std::to_string(gen() % 1000); };
  };
  auto make = [&](std::string name, auto fn) {
    return std::make_unique<Gateway>(mock_config(name), std::make_unique<CallbackTransport>(fn), cache.path());
  };
  const auto ref = reference_tctct();
  auto t1 = make("t", noisy("therapist"));
  auto c1 = make("c", noisy("client"));
  SimulationJob job{&ref, t1.get(), c1.get(), SimulationMode::full, 8, 9};
  auto first = simulate_full_conversation(job, PromptTemplateSet::defaults());

  auto t2 = make("t", [](const ChatRequest&) -> std::string { throw BackendError("offline"); });
  auto c2 = make("c", [](const ChatRequest&) -> std::string { throw BackendError("offline"); });
  SimulationJob replay{&ref, t2.get(), c2.get(), SimulationMode::full, 8, 9};
  CHECK(simulate_full_conversation(replay, PromptTemplateSet::defaults()) == first);
  CHECK(t2->stats().network_calls == 0);
}

TEST_CASE("client persona carries the reference; therapist gets the end instruction") {
  const auto templates = PromptTemplateSet::defaults();
  const auto ref = reference_tctct();
  const std::string persona = templates.render_client_persona(ref);
  CHECK(persona.find("Client: I can't sleep.") != std::string::npos);
  CHECK(persona.find(templates.end_token) != std::string::npos);
  const std::string sys = templates.therapist_system_for_full();
  CHECK(sys.rfind(std::string(kBaseTherapistPrompt), 0) == 0);
  CHECK(sys.find(templates.end_token) != std::string::npos);
}

TEST_CASE("template validation") {
  auto t = PromptTemplateSet::defaults("motivational_interviewing");
  CHECK_NOTHROW(t.validate());
  CHECK_THROWS_AS(PromptTemplateSet::defaults("freudian"), DataError);
  t.therapist_system = "Be nice.";
  CHECK_THROWS_AS(t.validate(), DataError);
  auto leak = PromptTemplateSet::defaults();
  leak.client_persona += " [END_OF_SESSION]";
  CHECK_THROWS_AS(leak.validate(), DataError);
}

TEST_CASE("simulate_corpus collects failures with partial transcripts") {
  Corpus refs;
  refs.conversations.push_back(reference_tctct());
  auto second = reference_tctct();
  second.id = "ref2";
  refs.conversations.push_back(second);

  auto therapist = mock_gateway({{"default", "t"}}, "t");
  auto client = mock_gateway({{"default", "c"}}, "c");
  auto run = simulate_corpus(refs, SimulationMode::full, *therapist, client.get(), PromptTemplateSet::defaults(), 1,
                             6, 2);
  CHECK(run.failures.empty());
  REQUIRE(run.corpus.conversations.size() == 2);
  CHECK(run.corpus.conversations[0].id == "ref");
  CHECK(run.corpus.conversations[1].id == "ref2");

  auto broken = callback_gateway([&](const ChatRequest& r) -> std::string {
    if (r.messages.size() > 3) throw BackendError("boom");
    return "c";
  });
  auto failed = simulate_corpus(refs, SimulationMode::full, *therapist, broken.get(), PromptTemplateSet::defaults(),
                                1, 10, 1);
  CHECK(failed.corpus.conversations.empty());
  REQUIRE(failed.failures.size() == 2);
  CHECK(failed.failures[0].partial().utterances.size() >= 3);
  CHECK(std::string(failed.failures[0].what()).find("boom") != std::string::npos);

  CHECK_THROWS_AS(simulate_corpus(refs, SimulationMode::full, *therapist, nullptr, PromptTemplateSet::defaults(), 1),
                  PreconditionError);
}

TEST_CASE("manifest records templates and backends") {
  auto t = mock_gateway({{"default", "x"}}, "t");
  auto doc = simulation_manifest(SimulationMode::single_response, *t, nullptr, PromptTemplateSet::defaults(), 4, 20);
  CHECK(doc.at("mode") == "single_response");
  CHECK(doc.at("seed") == 4);
  CHECK(doc.at("client_backend").is_null());
  CHECK(doc.at("templates").at("therapist_system").get<std::string>().size() == 64);
}
