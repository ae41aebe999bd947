#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bolt/analytics.hpp"
#include "bolt/corpus.hpp"

namespace bolt {

struct LexiconEntry {
  std::string text;       // lowercase; the prefix when wildcard is set
  bool wildcard = false;  // trailing '*' in the source file

  bool matches(std::string_view token) const {
    return wildcard ? token.substr(0, text.size()) == text : token == text;
  }
};

struct LexiconCategory {
  std::string name;
  std::vector<LexiconEntry> entries;
};

/// Word-category dictionary in the trailing-asterisk format used by LIWC:
/// `[Category]` headers, one entry per line, `#` comments.
struct Lexicon {
  std::string name;
  std::vector<LexiconCategory> categories;
  std::vector<std::string> warnings;  // non-fatal load diagnostics

  const LexiconCategory* find(std::string_view category) const;
};

inline constexpr std::string_view kBigWords = "BigWords";

Lexicon load_lexicon(const std::filesystem::path& path);
Lexicon parse_lexicon(std::istream& in, std::string name = "lexicon");

/// Splits on whitespace and on em/en dashes, strips leading and trailing
/// punctuation (ASCII punctuation plus curly quotes and ellipses), keeps
/// internal apostrophes (curly ones normalized to '), lowercases ASCII.
std::vector<std::string> tokenize(std::string_view text);

/// Number of Unicode code points in a UTF-8 token.
std::size_t utf8_length(std::string_view token);

/// 100 * matching tokens / total; nullopt for an empty token list. Throws
/// DataError for an unknown category.
std::optional<double> category_rate(const std::vector<std::string>& tokens, const Lexicon& lexicon,
                                    std::string_view category);

/// 100 * tokens of 7 or more characters / total; nullopt when empty.
std::optional<double> big_words_rate(const std::vector<std::string>& tokens);

/// Per conversation: therapist utterances concatenated, tokenized, and
/// scored for every category plus BigWords. Conversations without
/// therapist tokens contribute nothing.
BehaviorProfile lexicon_profile(ConversationSpan group, std::string group_id, const Lexicon& lexicon);

}  // namespace bolt
