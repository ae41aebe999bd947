#include "bolt/lexicon.hpp"

#include <cctype>
#include <fstream>
#include <set>

#include <fmt/format.h>

namespace bolt {

const LexiconCategory* Lexicon::find(std::string_view category) const {
  for (const auto& c : categories) {
    if (c.name == category) return &c;
  }
  return nullptr;
}

namespace {

std::string trim(std::string_view s) {
  const auto is_ws = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_ws(s[b])) ++b;
  while (e > b && is_ws(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

// Multi-byte sequences treated as separators or strippable punctuation.
constexpr std::string_view kEmDash = "\xE2\x80\x94";
constexpr std::string_view kEnDash = "\xE2\x80\x93";
constexpr std::string_view kEdgePunct[] = {
    "\xE2\x80\x9C",  // left double quote
    "\xE2\x80\x9D",  // right double quote
    "\xE2\x80\x98",  // left single quote
    "\xE2\x80\x99",  // right single quote
    "\xE2\x80\xA6",  // ellipsis
};
constexpr std::string_view kCurlyApostrophe = "\xE2\x80\x99";

bool strip_prefix(std::string& token) {
  if (token.empty()) return false;
  if (std::ispunct(static_cast<unsigned char>(token.front()))) {
    token.erase(0, 1);
    return true;
  }
  for (auto p : kEdgePunct) {
    if (token.starts_with(p)) {
      token.erase(0, p.size());
      return true;
    }
  }
  return false;
}

bool strip_suffix(std::string& token) {
  if (token.empty()) return false;
  if (std::ispunct(static_cast<unsigned char>(token.back()))) {
    token.pop_back();
    return true;
  }
  for (auto p : kEdgePunct) {
    if (token.ends_with(p)) {
      token.resize(token.size() - p.size());
      return true;
    }
  }
  return false;
}

void emit(std::string raw, std::vector<std::string>& out) {
  while (strip_prefix(raw)) {
  }
  while (strip_suffix(raw)) {
  }
  if (raw.empty()) return;
  std::string token;
  token.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size();) {
    if (std::string_view(raw).substr(i).starts_with(kCurlyApostrophe)) {
      token.push_back('\'');
      i += kCurlyApostrophe.size();
      continue;
    }
    token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i]))));
    ++i;
  }
  out.push_back(std::move(token));
}

}  // namespace

Lexicon parse_lexicon(std::istream& in, std::string name) {
  Lexicon lexicon;
  lexicon.name = std::move(name);
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']' || text.size() < 3) {
        throw DataError(fmt::format("lexicon line {}: malformed category header '{}'", line_no, text));
      }
      std::string category = trim(std::string_view(text).substr(1, text.size() - 2));
      if (category.empty()) throw DataError(fmt::format("lexicon line {}: empty category name", line_no));
      if (!seen.insert(category).second) {
        throw DataError(fmt::format("lexicon line {}: duplicate category '{}'", line_no, category));
      }
      lexicon.categories.push_back({category, {}});
      continue;
    }
    if (lexicon.categories.empty()) {
      throw DataError(fmt::format("lexicon line {}: entry '{}' before any [Category] header", line_no, text));
    }
    if (text.find_first_of(" \t") != std::string::npos) {
      throw DataError(fmt::format("lexicon line {}: entry '{}' contains whitespace", line_no, text));
    }
    LexiconEntry entry;
    const auto star = text.find('*');
    if (star != std::string::npos) {
      if (star != text.size() - 1) {
        throw DataError(fmt::format("lexicon line {}: wildcard must be the last character in '{}'", line_no, text));
      }
      if (star == 0) throw DataError(fmt::format("lexicon line {}: bare wildcard entry", line_no));
      entry.wildcard = true;
      entry.text = text.substr(0, star);
    } else {
      entry.text = text;
    }
    for (char& c : entry.text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    lexicon.categories.back().entries.push_back(std::move(entry));
  }
  if (lexicon.categories.empty()) lexicon.warnings.push_back("lexicon has no categories");
  for (const auto& c : lexicon.categories) {
    if (c.entries.empty()) lexicon.warnings.push_back(fmt::format("category '{}' has no entries", c.name));
  }
  return lexicon;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon file " + path.string());
  return parse_lexicon(in, path.stem().string());
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (std::size_t i = 0; i < text.size();) {
    const auto rest = text.substr(i);
    if (rest.starts_with(kEmDash) || rest.starts_with(kEnDash)) {
      emit(std::move(current), out);
      current.clear();
      i += kEmDash.size();
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      emit(std::move(current), out);
      current.clear();
      ++i;
      continue;
    }
    current.push_back(text[i]);
    ++i;
  }
  emit(std::move(current), out);
  return out;
}

std::size_t utf8_length(std::string_view token) {
  std::size_t n = 0;
  for (unsigned char c : token) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::optional<double> category_rate(const std::vector<std::string>& tokens, const Lexicon& lexicon,
                                    std::string_view category) {
  const LexiconCategory* cat = lexicon.find(category);
  if (cat == nullptr) throw DataError(fmt::format("lexicon '{}' has no category '{}'", lexicon.name, category));
  if (tokens.empty()) return std::nullopt;
  std::size_t hits = 0;
  for (const auto& token : tokens) {
    for (const auto& entry : cat->entries) {
      if (entry.matches(token)) {
        ++hits;
        break;
      }
    }
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(tokens.size());
}

std::optional<double> big_words_rate(const std::vector<std::string>& tokens) {
  if (tokens.empty()) return std::nullopt;
  std::size_t big = 0;
  for (const auto& token : tokens) {
    if (utf8_length(token) >= 7) ++big;
  }
  return 100.0 * static_cast<double>(big) / static_cast<double>(tokens.size());
}

BehaviorProfile lexicon_profile(ConversationSpan group, std::string group_id, const Lexicon& lexicon) {
  if (group.empty()) throw PreconditionError("lexicon_profile needs a non-empty group");
  BehaviorProfile profile;
  profile.group_id = std::move(group_id);
  profile.measure = Measure::lexicon_pct;
  profile.unit = Unit::conversation;
  if (lexicon.find(kBigWords) != nullptr) {
    throw DataError(fmt::format("lexicon '{}' defines a category named {}, which is reserved", lexicon.name, kBigWords));
  }
  for (const auto& c : lexicon.categories) {
    profile.behaviors.push_back(c.name);
    profile.per_behavior[c.name];
  }
  profile.behaviors.emplace_back(kBigWords);
  profile.per_behavior[std::string(kBigWords)];
  for (const auto& conv : group) {
    std::string text;
    for (const auto& u : conv.utterances) {
      if (u.speaker != Speaker::therapist) continue;
      if (!text.empty()) text.push_back(' ');
      text += u.text;
    }
    const auto tokens = tokenize(text);
    if (tokens.empty()) continue;
    for (const auto& c : lexicon.categories) profile.add(c.name, *category_rate(tokens, lexicon, c.name));
    profile.add(std::string(kBigWords), *big_words_rate(tokens));
  }
  return profile;
}

}  // namespace bolt
