#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bolt/corpus.hpp"
#include "bolt/stats.hpp"
#include "bolt/taxonomy.hpp"

namespace bolt {

enum class Measure { frequency_pct, first_turn, mean_position, conditional_pct, lexicon_pct };
enum class Unit { conversation, occurrence };

std::string_view to_string(Measure measure);
Measure measure_from_string(std::string_view text);

/// Per-group, per-behavior vectors of per-unit measurements. `behaviors`
/// fixes the row order; every entry has a (possibly empty) vector.
struct BehaviorProfile {
  std::string group_id;
  Measure measure = Measure::frequency_pct;
  Unit unit = Unit::conversation;
  std::vector<std::string> behaviors;
  std::map<std::string, std::vector<double>> per_behavior;

  void add(const std::string& behavior, double value) { per_behavior[behavior].push_back(value); }
};

struct ComparisonRow {
  std::string behavior;
  std::optional<std::string> condition;  // client code for adaptability rows
  double mean_compare = 0.0;
  double mean_baseline = 0.0;
  double mean_diff = 0.0;
  double std = 0.0;  // standard error of the mean difference
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  bool significant = false;
  std::size_t n_compare = 0;
  std::size_t n_baseline = 0;
  bool testable = true;  // false when either side has fewer than two units

  friend bool operator==(const ComparisonRow&, const ComparisonRow&) = default;
};

struct ComparisonTable {
  std::string compare_group;
  std::string baseline_group;
  Measure measure = Measure::frequency_pct;
  stats::Variance variance = stats::Variance::pooled;
  std::vector<ComparisonRow> rows;

  friend bool operator==(const ComparisonTable&, const ComparisonTable&) = default;
};

inline constexpr double kSignificanceLevel = 0.05;

/// Which utterances count as turns when numbering first occurrences.
enum class TurnBase { all_utterances, speaker_turns };

using ConversationSpan = std::span<const Conversation>;

// --- frequency ---------------------------------------------------------------

/// Percentage of the code's speaker's utterances exhibiting the code;
/// nullopt when the conversation has no utterance by that speaker. Throws
/// DataError on an unlabeled utterance of that speaker.
std::optional<double> behavior_frequency(const Conversation& conversation, const BehaviorCode& code);

/// One value per conversation per code, for all codes of the taxonomy.
BehaviorProfile frequency_profile(ConversationSpan group, std::string group_id,
                                  const Taxonomy& taxonomy = Taxonomy::builtin());

// --- temporal order ----------------------------------------------------------

/// 1-based turn of the first utterance exhibiting the code.
std::optional<int> first_occurrence_turn(const Conversation& conversation, const BehaviorCode& code,
                                         TurnBase base = TurnBase::all_utterances);

/// Mean of (turn - 1) / (len - 1) over all occurrences; 0 for a
/// single-utterance conversation.
std::optional<double> mean_occurrence_position(const Conversation& conversation, const BehaviorCode& code);

/// measure must be first_turn or mean_position. Conversations where a code
/// never occurs contribute no value for it.
BehaviorProfile temporal_profile(ConversationSpan group, std::string group_id, Measure measure,
                                 const Taxonomy& taxonomy = Taxonomy::builtin(),
                                 TurnBase base = TurnBase::all_utterances);

// --- adaptability ------------------------------------------------------------

/// For each client code: every client utterance exhibiting it that is
/// followed by a therapist reply contributes a 0/100 indicator per therapist
/// code. `window` > 1 looks at the next `window` utterances and unions the
/// labels of the therapist utterances among them.
std::map<std::string, BehaviorProfile> adaptability_matrix(ConversationSpan group, std::string group_id,
                                                           const Taxonomy& taxonomy = Taxonomy::builtin(),
                                                           int window = 1);

// --- comparison --------------------------------------------------------------

/// Per behavior: mean(compare) - mean(baseline) with a two-sided t test.
/// Rows with fewer than two units on either side are marked untestable
/// (t, p = NaN, not significant). Throws DataError on a measure mismatch.
ComparisonTable profile_difference(const BehaviorProfile& compare, const BehaviorProfile& baseline,
                                   stats::Variance variance = stats::Variance::pooled);

/// Rows for every (client code, therapist code) cell, client code in `condition`.
ComparisonTable adaptability_difference(const std::map<std::string, BehaviorProfile>& compare,
                                        const std::map<std::string, BehaviorProfile>& baseline,
                                        stats::Variance variance = stats::Variance::pooled);

/// Conversations grouped by dataset_id (input order kept inside each group).
std::map<std::string, std::vector<Conversation>> split_by_dataset(ConversationSpan group);

nlohmann::ordered_json to_json(const BehaviorProfile& profile);
nlohmann::ordered_json to_json(const ComparisonTable& table);
ComparisonTable comparison_table_from_json(const nlohmann::json& doc);

}  // namespace bolt
