#include "bolt/simulation.hpp"

#include <mutex>
#include <optional>

#include <fmt/format.h>

#include "bolt/detail/parallel.hpp"
#include "bolt/detail/rng.hpp"

namespace bolt {

const std::string_view kBaseTherapistPrompt =
    "Act as if you're a professional therapist. You provide evidence-based therapy to help clients "
    "seeking help with mental health challenges. You should maintain your therapist persona while "
    "responding. Communicate in a conversational style, mirroring the style of previous therapist "
    "responses.";

const std::string_view kDefaultEndToken = "[END_OF_SESSION]";

namespace {

constexpr std::string_view kMotivationalInterviewingSuffix =
    " Follow the principles of Motivational Interviewing: express empathy, develop discrepancy "
    "between the client's goals and current behavior, roll with resistance, and support the "
    "client's self-efficacy.";

constexpr std::string_view kClientPersona =
    "You are role-playing a client in a counseling session. The transcript below is a previous "
    "session between you and a therapist. You are now meeting a different therapist in a parallel "
    "universe: act as if that session never happened and do not continue it. Keep the same "
    "conversational style, the same way of raising topics and concerns, and the same life events "
    "and emotions.\n"
    "\n"
    "Previous session:\n"
    "{reference}\n"
    "\n"
    "Reply only with what the client says next, in plain text without a speaker prefix.";

constexpr std::string_view kEndInstruction =
    "When the session has reached a natural close, write {end_token} at the end of your message.";

void replace_all(std::string& text, std::string_view from, std::string_view to) {
  for (std::size_t pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
}

std::string trim(std::string text) {
  const char* ws = " \t\r\n";
  const auto first = text.find_first_not_of(ws);
  if (first == std::string::npos) return {};
  const auto last = text.find_last_not_of(ws);
  return text.substr(first, last - first + 1);
}

}  // namespace

PromptTemplateSet PromptTemplateSet::defaults(std::string_view style) {
  PromptTemplateSet t;
  t.therapist_system = std::string(kBaseTherapistPrompt);
  if (style == "motivational_interviewing") {
    t.therapist_system += kMotivationalInterviewingSuffix;
  } else if (style != "base") {
    throw DataError(fmt::format("unknown therapy style '{}' (expected base|motivational_interviewing)", style));
  }
  t.client_persona = std::string(kClientPersona);
  t.end_instruction = std::string(kEndInstruction);
  t.end_token = std::string(kDefaultEndToken);
  return t;
}

void PromptTemplateSet::validate() const {
  if (therapist_system.find(kBaseTherapistPrompt) == std::string::npos) {
    throw DataError("therapist system prompt must contain the base therapist prompt verbatim");
  }
  if (end_token.empty()) throw DataError("end token must be non-empty");
  for (const std::string* text : {&therapist_system, &client_persona, &end_instruction}) {
    std::string stripped = *text;
    replace_all(stripped, "{end_token}", "");
    if (stripped.find(end_token) != std::string::npos) {
      throw DataError("end token occurs inside a prompt template");
    }
  }
  if (client_persona.find("{reference}") == std::string::npos) {
    throw DataError("client persona template lacks a {reference} slot");
  }
}

std::string PromptTemplateSet::therapist_system_for_full() const {
  std::string instruction = end_instruction;
  replace_all(instruction, "{end_token}", end_token);
  return therapist_system + "\n" + instruction;
}

std::string PromptTemplateSet::render_client_persona(const Conversation& reference) const {
  std::string persona = client_persona;
  std::string instruction = end_instruction;
  replace_all(instruction, "{end_token}", end_token);
  replace_all(persona, "{end_token}", end_token);
  replace_all(persona, "{reference}", render_transcript(reference.utterances));
  return persona + "\n" + instruction;
}

nlohmann::ordered_json PromptTemplateSet::hashes() const {
  return {
      {"therapist_system", sha256_hex(therapist_system)},
      {"client_persona", sha256_hex(client_persona)},
      {"end_instruction", sha256_hex(end_instruction)},
      {"end_token", end_token},
  };
}

std::string render_transcript(const std::vector<Utterance>& utterances) {
  std::string out;
  for (const auto& u : utterances) {
    out += u.speaker == Speaker::therapist ? "Therapist: " : "Client: ";
    out += u.text;
    out += '\n';
  }
  if (!out.empty()) out.pop_back();
  return out;
}

std::vector<std::vector<Utterance>> extract_single_response_tasks(const Conversation& reference) {
  std::vector<std::vector<Utterance>> tasks;
  for (std::size_t j = 0; j < reference.utterances.size(); ++j) {
    if (reference.utterances[j].speaker != Speaker::client) continue;
    tasks.emplace_back(reference.utterances.begin(),
                       reference.utterances.begin() + static_cast<std::ptrdiff_t>(j + 1));
  }
  return tasks;
}

std::vector<ChatMessage> build_turn_messages(std::string system_prompt,
                                             const std::vector<Utterance>& history,
                                             Speaker simulated) {
  std::vector<ChatMessage> messages;
  messages.reserve(history.size() + 1);
  messages.push_back({Role::system, std::move(system_prompt)});
  for (const auto& u : history) {
    messages.push_back({u.speaker == simulated ? Role::assistant : Role::user, u.text});
  }
  return messages;
}

Utterance generate_single_response(Gateway& backend, const PromptTemplateSet& templates,
                                   const std::vector<Utterance>& prefix,
                                   const GenerationParams& params) {
  if (prefix.empty() || prefix.back().speaker != Speaker::client) {
    throw PreconditionError("single-response prefix must end with a client utterance");
  }
  auto messages = build_turn_messages(templates.therapist_system, prefix, Speaker::therapist);
  std::string text = trim(backend.complete(messages, params));
  if (text.empty()) throw BackendError("backend returned an empty therapist response");
  return Utterance{static_cast<int>(prefix.size()), Speaker::therapist, std::move(text), std::nullopt};
}

Conversation simulate_single_response(Gateway& backend, const PromptTemplateSet& templates,
                                      const Conversation& reference, const GenerationParams& params) {
  Conversation out;
  out.id = reference.id;
  out.dataset_id = reference.dataset_id;
  out.quality = Quality::unknown;
  out.source = Source::sim_single_response;
  out.model_id = backend.config().model_id;
  out.extra["reference_id"] = reference.id;
  for (const auto& prefix : extract_single_response_tasks(reference)) {
    Utterance client = prefix.back();
    client.labels.reset();
    client.index = static_cast<int>(out.utterances.size());
    out.utterances.push_back(std::move(client));
    Utterance reply = generate_single_response(backend, templates, prefix, params);
    reply.index = static_cast<int>(out.utterances.size());
    out.utterances.push_back(std::move(reply));
  }
  return out;
}

Conversation simulate_full_conversation(const SimulationJob& job, const PromptTemplateSet& templates) {
  if (job.mode != SimulationMode::full) throw PreconditionError("simulate_full_conversation needs mode=full");
  if (job.reference == nullptr || job.therapist == nullptr || job.client == nullptr) {
    throw PreconditionError("full simulation needs a reference and both backends");
  }
  if (job.max_turns <= 0) throw PreconditionError("max_turns must be positive");
  templates.validate();

  const Conversation& reference = *job.reference;
  detail::Rng rng(detail::mix_seed(static_cast<std::uint64_t>(job.seed), reference.id));
  Speaker current = rng.coin() ? Speaker::therapist : Speaker::client;

  Conversation out;
  out.id = reference.id;
  out.dataset_id = reference.dataset_id;
  out.quality = Quality::unknown;
  out.source = Source::sim_full;
  out.model_id = job.therapist->config().model_id;
  out.extra["reference_id"] = reference.id;
  out.extra["first_speaker"] = to_string(current);
  out.extra["seed"] = job.seed;

  const std::string therapist_system = templates.therapist_system_for_full();
  const std::string client_system = templates.render_client_persona(reference);
  GenerationParams params = simulation_params();
  params.seed = job.seed;

  std::string ended_by = "max_turns";
  while (static_cast<int>(out.utterances.size()) < job.max_turns) {
    const bool therapist_turn = current == Speaker::therapist;
    Gateway& backend = therapist_turn ? *job.therapist : *job.client;
    std::string raw;
    try {
      raw = backend.complete(build_turn_messages(therapist_turn ? therapist_system : client_system,
                                                 out.utterances, current),
                             params);
    } catch (const std::exception& e) {
      out.extra["ended_by"] = "error";
      throw SimulationError(fmt::format("conversation {}: {} turn {}: {}", reference.id,
                                        to_string(current), out.utterances.size(), e.what()),
                            out);
    }
    const bool ended = raw.find(templates.end_token) != std::string::npos;
    replace_all(raw, templates.end_token, "");
    std::string text = trim(std::move(raw));
    if (text.empty() && !ended) {
      out.extra["ended_by"] = "error";
      throw SimulationError(fmt::format("conversation {}: empty {} generation at turn {}", reference.id,
                                        to_string(current), out.utterances.size()),
                            out);
    }
    if (!text.empty()) {
      out.utterances.push_back({static_cast<int>(out.utterances.size()), current, std::move(text), std::nullopt});
    }
    if (ended) {
      ended_by = fmt::format("end_token:{}", to_string(current));
      break;
    }
    current = therapist_turn ? Speaker::client : Speaker::therapist;
  }
  if (out.utterances.empty()) {
    out.extra["ended_by"] = ended_by;
    throw SimulationError(fmt::format("conversation {}: ended before any utterance", reference.id), out);
  }
  out.extra["ended_by"] = ended_by;
  return out;
}

SimulationRun simulate_corpus(const Corpus& references, SimulationMode mode, Gateway& therapist,
                              Gateway* client, const PromptTemplateSet& templates, std::int64_t seed,
                              int max_turns, int max_parallel) {
  templates.validate();
  if (mode == SimulationMode::full && client == nullptr) {
    throw PreconditionError("full simulation requires a client backend");
  }
  const auto& refs = references.conversations;
  std::vector<std::optional<Conversation>> results(refs.size());
  std::vector<std::optional<SimulationError>> errors(refs.size());
  detail::parallel_for(refs.size(), static_cast<std::size_t>(max_parallel), [&](std::size_t i) {
    try {
      if (mode == SimulationMode::single_response) {
        GenerationParams params = simulation_params();
        params.seed = seed;
        results[i] = simulate_single_response(therapist, templates, refs[i], params);
      } else {
        SimulationJob job{&refs[i], &therapist, client, mode, max_turns, seed};
        results[i] = simulate_full_conversation(job, templates);
      }
    } catch (const SimulationError& e) {
      errors[i].emplace(e);
    } catch (const BackendError& e) {
      Conversation partial;
      partial.id = refs[i].id;
      errors[i].emplace(fmt::format("conversation {}: {}", refs[i].id, e.what()), partial);
    }
  });
  SimulationRun run;
  run.corpus.provenance["mode"] = mode == SimulationMode::full ? "full" : "single_response";
  run.corpus.provenance["model_id"] = therapist.config().model_id;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (results[i]) run.corpus.conversations.push_back(std::move(*results[i]));
    if (errors[i]) run.failures.push_back(std::move(*errors[i]));
  }
  return run;
}

nlohmann::ordered_json simulation_manifest(SimulationMode mode, const Gateway& therapist,
                                           const Gateway* client, const PromptTemplateSet& templates,
                                           std::int64_t seed, int max_turns) {
  auto describe = [](const BackendConfig& b) {
    return nlohmann::ordered_json{{"name", b.name},
                                  {"kind", b.kind == BackendKind::http_chat ? "http_chat" : "scripted_mock"},
                                  {"model_id", b.model_id}};
  };
  nlohmann::ordered_json doc;
  doc["mode"] = mode == SimulationMode::full ? "full" : "single_response";
  doc["seed"] = seed;
  doc["max_turns"] = max_turns;
  doc["therapist_backend"] = describe(therapist.config());
  doc["client_backend"] = client ? describe(client->config()) : nlohmann::ordered_json(nullptr);
  doc["templates"] = templates.hashes();
  return doc;
}

}  // namespace bolt
