#include "bolt/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "bolt/detail/json_number.hpp"

namespace bolt {

std::string_view to_string(Measure measure) {
  switch (measure) {
    case Measure::frequency_pct: return "frequency_pct";
    case Measure::first_turn: return "first_turn";
    case Measure::mean_position: return "mean_position";
    case Measure::conditional_pct: return "conditional_pct";
    case Measure::lexicon_pct: return "lexicon_pct";
  }
  return "frequency_pct";
}

Measure measure_from_string(std::string_view text) {
  for (Measure m : {Measure::frequency_pct, Measure::first_turn, Measure::mean_position,
                    Measure::conditional_pct, Measure::lexicon_pct}) {
    if (to_string(m) == text) return m;
  }
  throw DataError(fmt::format("unknown measure '{}'", text));
}

namespace {

const LabelSet& labels_of(const Conversation& conv, const Utterance& u) {
  if (!u.labels) {
    throw DataError(fmt::format("conversation {} utterance {} ({}) is not labeled", conv.id, u.index,
                                to_string(u.speaker)));
  }
  return *u.labels;
}

void require_labels(const Conversation& conv, Speaker speaker) {
  for (const auto& u : conv.utterances) {
    if (u.speaker == speaker) labels_of(conv, u);
  }
}

BehaviorProfile empty_profile(std::string group_id, Measure measure, Unit unit, const Taxonomy& taxonomy) {
  BehaviorProfile profile;
  profile.group_id = std::move(group_id);
  profile.measure = measure;
  profile.unit = unit;
  for (const auto& code : taxonomy.codes()) {
    profile.behaviors.push_back(code.id);
    profile.per_behavior[code.id];
  }
  return profile;
}

ComparisonRow compare_vectors(const std::string& behavior, const std::vector<double>& compare,
                              const std::vector<double>& baseline, stats::Variance variance) {
  ComparisonRow row;
  row.behavior = behavior;
  row.n_compare = compare.size();
  row.n_baseline = baseline.size();
  row.mean_compare = stats::mean(compare);
  row.mean_baseline = stats::mean(baseline);
  row.mean_diff = row.mean_compare - row.mean_baseline;
  if (compare.size() < 2 || baseline.size() < 2) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.testable = false;
    row.std = row.t = row.df = row.p = nan;
    row.significant = false;
    return row;
  }
  const auto result = stats::students_t_test(compare, baseline, variance);
  row.std = result.std_error;
  row.t = result.t;
  row.df = result.df;
  row.p = result.p;
  row.significant = result.p < kSignificanceLevel;
  return row;
}

}  // namespace

std::optional<double> behavior_frequency(const Conversation& conversation, const BehaviorCode& code) {
  std::size_t total = 0;
  std::size_t hits = 0;
  for (const auto& u : conversation.utterances) {
    if (u.speaker != code.speaker) continue;
    ++total;
    if (labels_of(conversation, u).contains(code.id)) ++hits;
  }
  if (total == 0) return std::nullopt;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

BehaviorProfile frequency_profile(ConversationSpan group, std::string group_id, const Taxonomy& taxonomy) {
  if (group.empty()) throw PreconditionError("frequency_profile needs a non-empty group");
  auto profile = empty_profile(std::move(group_id), Measure::frequency_pct, Unit::conversation, taxonomy);
  for (const auto& conv : group) {
    for (const auto& code : taxonomy.codes()) {
      if (auto f = behavior_frequency(conv, code)) profile.add(code.id, *f);
    }
  }
  return profile;
}

std::optional<int> first_occurrence_turn(const Conversation& conversation, const BehaviorCode& code,
                                         TurnBase base) {
  require_labels(conversation, code.speaker);
  int speaker_turn = 0;
  for (std::size_t i = 0; i < conversation.utterances.size(); ++i) {
    const auto& u = conversation.utterances[i];
    if (u.speaker != code.speaker) continue;
    ++speaker_turn;
    if (u.labels->contains(code.id)) {
      return base == TurnBase::all_utterances ? static_cast<int>(i) + 1 : speaker_turn;
    }
  }
  return std::nullopt;
}

std::optional<double> mean_occurrence_position(const Conversation& conversation, const BehaviorCode& code) {
  require_labels(conversation, code.speaker);
  const auto len = conversation.utterances.size();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < len; ++i) {
    const auto& u = conversation.utterances[i];
    if (u.speaker != code.speaker || !u.labels->contains(code.id)) continue;
    sum += len > 1 ? static_cast<double>(i) / static_cast<double>(len - 1) : 0.0;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

BehaviorProfile temporal_profile(ConversationSpan group, std::string group_id, Measure measure,
                                 const Taxonomy& taxonomy, TurnBase base) {
  if (measure != Measure::first_turn && measure != Measure::mean_position) {
    throw PreconditionError("temporal_profile measure must be first_turn or mean_position");
  }
  if (group.empty()) throw PreconditionError("temporal_profile needs a non-empty group");
  auto profile = empty_profile(std::move(group_id), measure, Unit::conversation, taxonomy);
  for (const auto& conv : group) {
    for (const auto& code : taxonomy.codes()) {
      if (measure == Measure::first_turn) {
        if (auto turn = first_occurrence_turn(conv, code, base)) profile.add(code.id, *turn);
      } else if (auto pos = mean_occurrence_position(conv, code)) {
        profile.add(code.id, *pos);
      }
    }
  }
  return profile;
}

std::map<std::string, BehaviorProfile> adaptability_matrix(ConversationSpan group, std::string group_id,
                                                           const Taxonomy& taxonomy, int window) {
  if (window < 1) throw PreconditionError("adaptability window must be >= 1");
  const auto therapist_codes = taxonomy.codes_for(Speaker::therapist);
  std::map<std::string, BehaviorProfile> matrix;
  for (const BehaviorCode* client_code : taxonomy.codes_for(Speaker::client)) {
    BehaviorProfile& profile = matrix[client_code->id];
    profile.group_id = group_id;
    profile.measure = Measure::conditional_pct;
    profile.unit = Unit::occurrence;
    for (const BehaviorCode* t : therapist_codes) {
      profile.behaviors.push_back(t->id);
      profile.per_behavior[t->id];
    }
  }
  for (const auto& conv : group) {
    const auto& us = conv.utterances;
    for (std::size_t i = 0; i < us.size(); ++i) {
      if (us[i].speaker != Speaker::client) continue;
      const LabelSet& client_labels = labels_of(conv, us[i]);
      if (client_labels.empty()) continue;
      LabelSet response;
      bool has_response = false;
      const std::size_t end = std::min(us.size(), i + 1 + static_cast<std::size_t>(window));
      for (std::size_t j = i + 1; j < end; ++j) {
        if (us[j].speaker != Speaker::therapist) continue;
        has_response = true;
        const LabelSet& labels = labels_of(conv, us[j]);
        response.insert(labels.begin(), labels.end());
      }
      if (!has_response) continue;
      for (const auto& client_code : client_labels) {
        auto it = matrix.find(client_code);
        if (it == matrix.end()) continue;
        for (const BehaviorCode* t : therapist_codes) {
          it->second.add(t->id, response.contains(t->id) ? 100.0 : 0.0);
        }
      }
    }
  }
  return matrix;
}

ComparisonTable profile_difference(const BehaviorProfile& compare, const BehaviorProfile& baseline,
                                   stats::Variance variance) {
  if (compare.measure != baseline.measure) {
    throw DataError(fmt::format("cannot compare {} profile against {} profile", to_string(compare.measure),
                                to_string(baseline.measure)));
  }
  ComparisonTable table;
  table.compare_group = compare.group_id;
  table.baseline_group = baseline.group_id;
  table.measure = compare.measure;
  table.variance = variance;
  std::vector<std::string> order = compare.behaviors;
  for (const auto& b : baseline.behaviors) {
    if (std::find(order.begin(), order.end(), b) == order.end()) order.push_back(b);
  }
  static const std::vector<double> none;
  for (const auto& behavior : order) {
    auto c = compare.per_behavior.find(behavior);
    auto b = baseline.per_behavior.find(behavior);
    table.rows.push_back(compare_vectors(behavior, c == compare.per_behavior.end() ? none : c->second,
                                         b == baseline.per_behavior.end() ? none : b->second, variance));
  }
  return table;
}

ComparisonTable adaptability_difference(const std::map<std::string, BehaviorProfile>& compare,
                                        const std::map<std::string, BehaviorProfile>& baseline,
                                        stats::Variance variance) {
  ComparisonTable table;
  table.measure = Measure::conditional_pct;
  table.variance = variance;
  for (const auto& [client_code, profile] : compare) {
    auto base = baseline.find(client_code);
    if (base == baseline.end()) continue;
    auto sub = profile_difference(profile, base->second, variance);
    table.compare_group = sub.compare_group;
    table.baseline_group = sub.baseline_group;
    for (auto& row : sub.rows) {
      row.condition = client_code;
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

std::map<std::string, std::vector<Conversation>> split_by_dataset(ConversationSpan group) {
  std::map<std::string, std::vector<Conversation>> out;
  for (const auto& conv : group) out[conv.dataset_id].push_back(conv);
  return out;
}

nlohmann::ordered_json to_json(const BehaviorProfile& profile) {
  nlohmann::ordered_json doc;
  doc["group_id"] = profile.group_id;
  doc["measure"] = to_string(profile.measure);
  doc["unit"] = profile.unit == Unit::conversation ? "conversation" : "occurrence";
  auto& rows = doc["per_behavior"] = nlohmann::ordered_json::object();
  for (const auto& b : profile.behaviors) {
    auto it = profile.per_behavior.find(b);
    rows[b] = it == profile.per_behavior.end() ? nlohmann::ordered_json::array() : nlohmann::ordered_json(it->second);
  }
  return doc;
}

nlohmann::ordered_json to_json(const ComparisonTable& table) {
  nlohmann::ordered_json doc;
  doc["compare_group"] = table.compare_group;
  doc["baseline_group"] = table.baseline_group;
  doc["measure"] = to_string(table.measure);
  doc["variance"] = table.variance == stats::Variance::pooled ? "pooled" : "welch";
  auto& rows = doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : table.rows) {
    nlohmann::ordered_json row;
    row["behavior"] = r.behavior;
    row["condition"] = r.condition ? nlohmann::ordered_json(*r.condition) : nullptr;
    row["mean_compare"] = detail::json_number(r.mean_compare);
    row["mean_baseline"] = detail::json_number(r.mean_baseline);
    row["mean_diff"] = detail::json_number(r.mean_diff);
    row["std"] = detail::json_number(r.std);
    row["t"] = detail::json_number(r.t);
    row["df"] = detail::json_number(r.df);
    row["p"] = detail::json_number(r.p);
    row["significant"] = r.significant;
    row["n_compare"] = r.n_compare;
    row["n_baseline"] = r.n_baseline;
    row["testable"] = r.testable;
    rows.push_back(std::move(row));
  }
  return doc;
}

ComparisonTable comparison_table_from_json(const nlohmann::json& doc) {
  try {
    ComparisonTable table;
    table.compare_group = doc.at("compare_group").get<std::string>();
    table.baseline_group = doc.at("baseline_group").get<std::string>();
    table.measure = measure_from_string(doc.at("measure").get<std::string>());
    const auto variance = doc.at("variance").get<std::string>();
    if (variance != "pooled" && variance != "welch") throw DataError("unknown variance '" + variance + "'");
    table.variance = variance == "pooled" ? stats::Variance::pooled : stats::Variance::welch;
    for (const auto& r : doc.at("rows")) {
      ComparisonRow row;
      row.behavior = r.at("behavior").get<std::string>();
      if (!r.at("condition").is_null()) row.condition = r.at("condition").get<std::string>();
      row.mean_compare = detail::json_number_from(r.at("mean_compare"));
      row.mean_baseline = detail::json_number_from(r.at("mean_baseline"));
      row.mean_diff = detail::json_number_from(r.at("mean_diff"));
      row.std = detail::json_number_from(r.at("std"));
      row.t = detail::json_number_from(r.at("t"));
      row.df = detail::json_number_from(r.at("df"));
      row.p = detail::json_number_from(r.at("p"));
      row.significant = r.at("significant").get<bool>();
      row.n_compare = r.at("n_compare").get<std::size_t>();
      row.n_baseline = r.at("n_baseline").get<std::size_t>();
      row.testable = r.at("testable").get<bool>();
      table.rows.push_back(std::move(row));
    }
    return table;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed comparison table: ") + e.what());
  }
}

}  // namespace bolt
