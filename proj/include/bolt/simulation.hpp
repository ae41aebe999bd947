#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bolt/corpus.hpp"
#include "bolt/llm_gateway.hpp"

namespace bolt {

/// The plain therapist persona system prompt.
extern const std::string_view kBaseTherapistPrompt;
extern const std::string_view kDefaultEndToken;

/// Prompt texts for both simulation strategies. `client_persona` and
/// `end_instruction` are templates with `{reference}` / `{end_token}` slots.
struct PromptTemplateSet {
  std::string therapist_system;
  std::string client_persona;
  std::string end_instruction;
  std::string end_token;

  /// `style` is "base" or "motivational_interviewing".
  static PromptTemplateSet defaults(std::string_view style = "base");

  /// therapist_system must contain the base prompt verbatim; end_token must
  /// be non-empty and absent from every prompt template.
  void validate() const;

  std::string therapist_system_for_full() const;
  std::string render_client_persona(const Conversation& reference) const;

  /// sha256 of each template, recorded in job manifests.
  nlohmann::ordered_json hashes() const;
};

/// "Therapist: ...\nClient: ..." rendering of a transcript.
std::string render_transcript(const std::vector<Utterance>& utterances);

/// One prefix per client utterance j: utterances [0, j], ordered by j.
std::vector<std::vector<Utterance>> extract_single_response_tasks(const Conversation& reference);

/// System prompt followed by the transcript, with the party being simulated
/// as `assistant` and the other party as `user`.
std::vector<ChatMessage> build_turn_messages(std::string system_prompt,
                                             const std::vector<Utterance>& history,
                                             Speaker simulated);

/// Generates the therapist reply to a client-terminated prefix. The result
/// carries index = prefix.size().
Utterance generate_single_response(Gateway& backend, const PromptTemplateSet& templates,
                                   const std::vector<Utterance>& prefix,
                                   const GenerationParams& params = simulation_params());

/// Runs every single-response task of `reference` and assembles a
/// conversation in which each client utterance is followed by the model's
/// reply; human therapist turns are dropped and indices renumbered.
Conversation simulate_single_response(Gateway& backend, const PromptTemplateSet& templates,
                                      const Conversation& reference,
                                      const GenerationParams& params = simulation_params());

enum class SimulationMode { single_response, full };

struct SimulationJob {
  const Conversation* reference = nullptr;
  Gateway* therapist = nullptr;
  Gateway* client = nullptr;  // required iff mode == full
  SimulationMode mode = SimulationMode::full;
  int max_turns = 20;
  std::int64_t seed = 0;
};

/// Raised when a backend fails mid-conversation; carries the transcript so far.
class SimulationError : public BackendError {
 public:
  SimulationError(const std::string& what, Conversation partial)
      : BackendError(what), partial_(std::move(partial)) {}
  const Conversation& partial() const { return partial_; }

 private:
  Conversation partial_;
};

/// Therapist/client dialogue seeded by `reference`. The first speaker is a
/// seeded coin flip; speakers alternate until one emits the end token or
/// max_turns utterances exist.
Conversation simulate_full_conversation(const SimulationJob& job, const PromptTemplateSet& templates);

struct SimulationRun {
  Corpus corpus;
  std::vector<SimulationError> failures;
};

/// Simulates every reference (concurrently up to `max_parallel`). Failed
/// conversations are reported with their partial transcripts; successful
/// ones keep the reference order.
SimulationRun simulate_corpus(const Corpus& references, SimulationMode mode, Gateway& therapist,
                              Gateway* client, const PromptTemplateSet& templates,
                              std::int64_t seed, int max_turns = 20, int max_parallel = 1);

nlohmann::ordered_json simulation_manifest(SimulationMode mode, const Gateway& therapist,
                                           const Gateway* client, const PromptTemplateSet& templates,
                                           std::int64_t seed, int max_turns);

}  // namespace bolt
