#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace bolt {

enum class Speaker { therapist, client };

enum class Category {
  reflections,
  questions,
  solutions,
  normalizing,
  psychoeducation,
  behavior_change,
  self_disclosure,
  gaining_insights,
};

std::string_view to_string(Speaker speaker);
std::string_view to_string(Category category);
Speaker speaker_from_string(std::string_view text);    // throws DataError
Category category_from_string(std::string_view text);  // throws DataError

/// One psychotherapy behavioral code. Ids are namespaced by speaker
/// (`t.*` for therapist, `c.*` for client).
struct BehaviorCode {
  std::string id;
  Speaker speaker = Speaker::therapist;
  Category category = Category::reflections;
  std::string display_name;
  std::string definition;
  std::string exemplar;

  friend bool operator==(const BehaviorCode&, const BehaviorCode&) = default;
};

/// Lowercases, maps `-`/`_` to spaces, collapses whitespace and trims
/// surrounding punctuation. Used for label name matching.
std::string normalize_label_name(std::string_view name);

/// Immutable registry of the 13 therapist and 6 client behavioral codes.
class Taxonomy {
 public:
  /// Validates the code set and alias table; throws DataError on any
  /// duplicate id, empty definition/exemplar or colliding alias.
  Taxonomy(std::vector<BehaviorCode> codes, std::map<std::string, std::string> aliases);

  /// The built-in taxonomy with definitions and exemplars from the
  /// published coding manual.
  static const Taxonomy& builtin();

  std::span<const BehaviorCode> codes() const { return codes_; }
  std::vector<const BehaviorCode*> codes_for(Speaker speaker) const;
  std::vector<std::string> ids_for(Speaker speaker) const;

  const BehaviorCode* find(std::string_view id) const;
  const BehaviorCode& at(std::string_view id) const;  // throws DataError

  /// Case- and whitespace-insensitive lookup on display name or alias,
  /// restricted to `speaker`. Returns nullptr when nothing matches.
  const BehaviorCode* resolve_label(std::string_view name, Speaker speaker) const;

  const std::map<std::string, std::string>& aliases() const { return aliases_; }

  nlohmann::ordered_json to_json() const;
  static Taxonomy from_json(const nlohmann::json& doc);

 private:
  std::vector<BehaviorCode> codes_;
  // normalized name -> code id; display names are registered here too.
  std::map<std::string, std::string> aliases_;
  std::map<std::string, std::string> lookup_;
};

}  // namespace bolt
