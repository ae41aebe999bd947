#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bolt/detail/rng.hpp"
#include "bolt/errors.hpp"
#include "bolt/taxonomy.hpp"

namespace bolt {

using LabelSet = std::set<std::string>;

enum class Quality { high, low, unknown };
enum class Source { human, sim_single_response, sim_full };

std::string_view to_string(Quality quality);
std::string_view to_string(Source source);
Quality quality_from_string(std::string_view text);
Source source_from_string(std::string_view text);

struct Utterance {
  int index = 0;
  Speaker speaker = Speaker::client;
  std::string text;
  std::optional<LabelSet> labels;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct Conversation {
  std::string id;
  std::string dataset_id;
  Quality quality = Quality::unknown;
  Source source = Source::human;
  std::optional<std::string> model_id;
  std::vector<Utterance> utterances;
  // Unrecognised top-level fields, kept verbatim and written back after the
  // canonical keys.
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();

  friend bool operator==(const Conversation&, const Conversation&) = default;
};

struct Corpus {
  std::vector<Conversation> conversations;
  std::map<std::string, std::string> provenance;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

struct Violation {
  std::string conversation_id;
  std::optional<int> utterance_index;
  std::string message;
};

std::string to_string(const Violation& violation);

// JSONL codec. Parsing reports the line number; utterance objects with
// unknown keys are rejected.
Conversation conversation_from_json(const nlohmann::json& doc);
nlohmann::ordered_json to_json(const Conversation& conversation);
std::string to_jsonl_line(const Conversation& conversation);

/// Reads a JSONL corpus and runs validate(); throws DataError naming the
/// offending line or conversation id.
Corpus load_corpus(const std::filesystem::path& path,
                   const Taxonomy& taxonomy = Taxonomy::builtin());
Corpus parse_corpus(std::istream& in, const Taxonomy& taxonomy = Taxonomy::builtin(),
                    std::string_view origin = "<stream>");
void write_corpus(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

/// Reports every invariant breach; an empty result means the corpus is valid.
std::vector<Violation> validate(const Corpus& corpus,
                                const Taxonomy& taxonomy = Taxonomy::builtin());
std::vector<Violation> validate(const Conversation& conversation,
                                const Taxonomy& taxonomy = Taxonomy::builtin());

struct SpeakerStats {
  std::size_t n_utterances = 0;
  double words_mean = 0.0;
  double words_std = 0.0;  // sample (n-1) std, 0 when fewer than 2 utterances
};

struct CorpusStats {
  std::size_t n_conversations = 0;
  std::map<std::string, std::size_t> conversations_by_quality;
  SpeakerStats therapist;
  SpeakerStats client;
};

/// Word count used for utterance statistics: maximal runs of non-whitespace.
std::size_t word_count(std::string_view text);

CorpusStats corpus_stats(const Corpus& corpus);

/// A labelled utterance detached from its conversation; the unit of
/// classifier training and evaluation.
struct AnnotatedUtterance {
  std::string conversation_id;
  int utterance_index = 0;
  Speaker speaker = Speaker::client;
  std::string text;
  LabelSet labels;

  friend bool operator==(const AnnotatedUtterance&, const AnnotatedUtterance&) = default;
};

/// All utterances of `speaker` (or both speakers when nullopt) that carry labels.
std::vector<AnnotatedUtterance> annotated_utterances(const Corpus& corpus,
                                                     std::optional<Speaker> speaker);

/// Seeded partition into train/test with |train| = round(ratio * n).
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_annotated(std::vector<T> items, double ratio,
                                                          std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw PreconditionError("split ratio must be in (0, 1)");
  if (items.empty()) throw PreconditionError("cannot split an empty list");
  detail::Rng rng(seed);
  rng.shuffle(items);
  const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(items.size())));
  std::vector<T> test(std::make_move_iterator(items.begin() + static_cast<std::ptrdiff_t>(n_train)),
                      std::make_move_iterator(items.end()));
  items.resize(n_train);
  return {std::move(items), std::move(test)};
}

}  // namespace bolt
