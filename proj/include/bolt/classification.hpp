#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bolt/corpus.hpp"
#include "bolt/llm_gateway.hpp"
#include "bolt/taxonomy.hpp"

namespace bolt {

enum class ClassifierMode { multi_def, multi_def_ex, binary_def_ex };

std::string_view to_string(ClassifierMode mode);
ClassifierMode classifier_mode_from_string(std::string_view text);

/// Prompt-based behavior classifier configuration.
struct ClassifierSpec {
  ClassifierMode mode = ClassifierMode::multi_def;
  Speaker speaker = Speaker::therapist;
  int k_shots = 3;
  std::vector<AnnotatedUtterance> example_pool;  // required for *_ex modes
  std::int64_t seed = 0;
  int context_window = 0;  // preceding utterances shown with the target; 0 = utterance alone

  void validate() const;
};

inline constexpr std::string_view kMultiLabelInstruction =
    "What are all possible conversational behaviors of this utterance";

struct FewShot {
  std::vector<AnnotatedUtterance> demonstrations;
  std::vector<std::string> warnings;
};

/// Seeded sample of k pool items without replacement. With `code`, prefers
/// ceil(k/2) positives and k - ceil(k/2) negatives, topping up from the other
/// side when one is short (and warning about it). Throws PreconditionError
/// when the pool holds fewer than k items.
FewShot select_few_shot(const std::vector<AnnotatedUtterance>& pool, int k, std::int64_t seed,
                        std::optional<std::string_view> code = std::nullopt);

/// Optional preceding turns rendered ahead of the target utterance.
struct UtteranceContext {
  std::vector<Utterance> preceding;
};

struct PromptBuild {
  std::vector<ChatMessage> messages;
  std::vector<std::string> warnings;
};

PromptBuild build_multi_label_prompt(const ClassifierSpec& spec, const Taxonomy& taxonomy,
                                     std::string_view utterance,
                                     const UtteranceContext& context = {});

PromptBuild build_binary_prompt(const ClassifierSpec& spec, const BehaviorCode& code,
                                std::string_view utterance, const UtteranceContext& context = {});

/// Display names joined by ", " in taxonomy order, or "None" for the empty set.
std::string serialize_labels(const LabelSet& labels, const Taxonomy& taxonomy);

struct ParsedLabels {
  LabelSet codes;
  int warnings = 0;
};

ParsedLabels parse_multi_label(std::string_view response, const Taxonomy& taxonomy, Speaker speaker);

enum class BinaryAnswer { yes, no, unparseable };

BinaryAnswer parse_binary(std::string_view response);

struct Prediction {
  std::string conversation_id;
  int utterance_index = 0;
  LabelSet predicted;
  std::string raw_response;                         // multi-label modes
  std::map<std::string, std::string> raw_by_code;  // binary mode
  ClassifierMode mode = ClassifierMode::multi_def;
  int warnings = 0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

struct ClassificationFailure {
  std::string conversation_id;
  int utterance_index = 0;
  std::optional<std::string> code;
  std::string error;
};

struct ClassificationRun {
  std::vector<Prediction> predictions;  // sorted by (conversation_id, utterance_index)
  std::vector<ClassificationFailure> failures;
  std::vector<std::string> warnings;
};

/// Classifies every `target` utterance of `corpus`. Multi-label modes issue
/// one request per utterance, binary mode one per (utterance, code). Failed
/// utterances are recorded and omitted from the predictions.
ClassificationRun classify_corpus(Gateway& backend, const ClassifierSpec& spec,
                                  const Taxonomy& taxonomy, const Corpus& corpus, int max_parallel = 1);

/// Classifies detached utterances (no conversational context available).
ClassificationRun classify_utterances(Gateway& backend, const ClassifierSpec& spec,
                                      const Taxonomy& taxonomy,
                                      const std::vector<AnnotatedUtterance>& items, int max_parallel = 1);

nlohmann::ordered_json to_json(const Prediction& prediction);
Prediction prediction_from_json(const nlohmann::json& doc);
void write_predictions(std::ostream& out, const std::vector<Prediction>& predictions);
std::vector<Prediction> read_predictions(std::istream& in);

/// Copy of `corpus` whose `speaker` utterances carry the predicted labels.
/// Utterances without a prediction keep their previous labels.
Corpus merge_predictions(const Corpus& corpus, const std::vector<Prediction>& predictions,
                         Speaker speaker, const Taxonomy& taxonomy = Taxonomy::builtin());

}  // namespace bolt
