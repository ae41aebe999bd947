#include "bolt/corpus.hpp"

#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

namespace bolt {

namespace {

const std::set<std::string> kConversationKeys = {"id",     "dataset_id", "quality",
                                                 "source", "model_id",   "utterances"};
const std::set<std::string> kUtteranceKeys = {"index", "speaker", "text", "labels"};

template <typename T>
T required(const nlohmann::json& doc, const char* key, std::string_view where) {
  if (!doc.contains(key)) throw DataError(fmt::format("{}: missing field '{}'", where, key));
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DataError(fmt::format("{}: field '{}' has the wrong type", where, key));
  }
}

SpeakerStats summarize(const std::vector<double>& words) {
  SpeakerStats stats;
  stats.n_utterances = words.size();
  if (words.empty()) return stats;
  const double n = static_cast<double>(words.size());
  stats.words_mean = std::accumulate(words.begin(), words.end(), 0.0) / n;
  if (words.size() > 1) {
    double ss = 0.0;
    for (double w : words) ss += (w - stats.words_mean) * (w - stats.words_mean);
    stats.words_std = std::sqrt(ss / (n - 1.0));
  }
  return stats;
}

}  // namespace

std::string_view to_string(Quality quality) {
  switch (quality) {
    case Quality::high: return "high";
    case Quality::low: return "low";
    case Quality::unknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(Source source) {
  switch (source) {
    case Source::human: return "human";
    case Source::sim_single_response: return "sim_single_response";
    case Source::sim_full: return "sim_full";
  }
  return "human";
}

Quality quality_from_string(std::string_view text) {
  if (text == "high") return Quality::high;
  if (text == "low") return Quality::low;
  if (text == "unknown") return Quality::unknown;
  throw DataError(fmt::format("invalid quality '{}' (expected high|low|unknown)", text));
}

Source source_from_string(std::string_view text) {
  if (text == "human") return Source::human;
  if (text == "sim_single_response") return Source::sim_single_response;
  if (text == "sim_full") return Source::sim_full;
  throw DataError(
      fmt::format("invalid source '{}' (expected human|sim_single_response|sim_full)", text));
}

std::string to_string(const Violation& v) {
  if (v.utterance_index) {
    return fmt::format("conversation {} utterance {}: {}", v.conversation_id, *v.utterance_index,
                       v.message);
  }
  return fmt::format("conversation {}: {}", v.conversation_id, v.message);
}

Conversation conversation_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw DataError("conversation record is not a JSON object");
  Conversation conv;
  conv.id = required<std::string>(doc, "id", "conversation");
  const std::string where = "conversation " + conv.id;
  conv.dataset_id = required<std::string>(doc, "dataset_id", where);
  conv.quality = quality_from_string(required<std::string>(doc, "quality", where));
  conv.source = source_from_string(required<std::string>(doc, "source", where));
  if (doc.contains("model_id") && !doc.at("model_id").is_null()) {
    conv.model_id = required<std::string>(doc, "model_id", where);
  }
  if (!doc.contains("utterances") || !doc.at("utterances").is_array()) {
    throw DataError(where + ": 'utterances' must be an array");
  }
  for (const auto& item : doc.at("utterances")) {
    if (!item.is_object()) throw DataError(where + ": utterance is not an object");
    for (const auto& [key, _] : item.items()) {
      if (!kUtteranceKeys.contains(key)) {
        throw DataError(fmt::format("{}: unknown utterance field '{}'", where, key));
      }
    }
    Utterance u;
    u.index = required<int>(item, "index", where);
    const std::string uwhere = fmt::format("{} utterance {}", where, u.index);
    const auto speaker = required<std::string>(item, "speaker", uwhere);
    try {
      u.speaker = speaker_from_string(speaker);
    } catch (const DataError& e) {
      throw DataError(uwhere + ": " + e.what());
    }
    u.text = required<std::string>(item, "text", uwhere);
    if (item.contains("labels") && !item.at("labels").is_null()) {
      auto labels = required<std::vector<std::string>>(item, "labels", uwhere);
      u.labels = LabelSet(labels.begin(), labels.end());
    }
    conv.utterances.push_back(std::move(u));
  }
  for (const auto& [key, value] : doc.items()) {
    if (!kConversationKeys.contains(key)) conv.extra[key] = value;
  }
  return conv;
}

nlohmann::ordered_json to_json(const Conversation& conv) {
  nlohmann::ordered_json doc;
  doc["id"] = conv.id;
  doc["dataset_id"] = conv.dataset_id;
  doc["quality"] = to_string(conv.quality);
  doc["source"] = to_string(conv.source);
  doc["model_id"] = conv.model_id ? nlohmann::ordered_json(*conv.model_id) : nullptr;
  auto& utterances = doc["utterances"] = nlohmann::ordered_json::array();
  for (const auto& u : conv.utterances) {
    nlohmann::ordered_json item;
    item["index"] = u.index;
    item["speaker"] = to_string(u.speaker);
    item["text"] = u.text;
    if (u.labels) {
      item["labels"] = nlohmann::ordered_json::array();
      for (const auto& label : *u.labels) item["labels"].push_back(label);
    } else {
      item["labels"] = nullptr;
    }
    utterances.push_back(std::move(item));
  }
  for (const auto& [key, value] : conv.extra.items()) doc[key] = value;
  return doc;
}

std::string to_jsonl_line(const Conversation& conv) { return to_json(conv).dump(); }

Corpus parse_corpus(std::istream& in, const Taxonomy& taxonomy, std::string_view origin) {
  Corpus corpus;
  corpus.provenance["origin"] = std::string(origin);
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Conversation conv;
    try {
      conv = conversation_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(fmt::format("{}:{}: JSON parse error: {}", origin, line_no, e.what()));
    } catch (const DataError& e) {
      throw DataError(fmt::format("{}:{}: {}", origin, line_no, e.what()));
    }
    if (!seen.insert(conv.id).second) {
      throw DataError(fmt::format("{}:{}: duplicate conversation id '{}'", origin, line_no, conv.id));
    }
    corpus.conversations.push_back(std::move(conv));
  }
  if (auto violations = validate(corpus, taxonomy); !violations.empty()) {
    std::string message = fmt::format("{}: {} invariant violation(s)", origin, violations.size());
    for (const auto& v : violations) message += "\n  " + to_string(v);
    throw DataError(message);
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const Taxonomy& taxonomy) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  return parse_corpus(in, taxonomy, path.string());
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& conv : corpus.conversations) out << to_jsonl_line(conv) << '\n';
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  write_corpus(out, corpus);
}

std::vector<Violation> validate(const Conversation& conv, const Taxonomy& taxonomy) {
  std::vector<Violation> out;
  auto report = [&](std::optional<int> index, std::string message) {
    out.push_back({conv.id, index, std::move(message)});
  };
  if (conv.id.empty()) report(std::nullopt, "empty conversation id");
  if (conv.utterances.empty()) report(std::nullopt, "conversation has no utterances");
  for (std::size_t i = 0; i < conv.utterances.size(); ++i) {
    const auto& u = conv.utterances[i];
    if (u.index != static_cast<int>(i)) {
      report(u.index, fmt::format("index {} at position {} (indices must be 0..n-1)", u.index, i));
    }
    if (u.text.empty()) report(u.index, "empty utterance text");
    if (u.labels) {
      for (const auto& label : *u.labels) {
        const BehaviorCode* code = taxonomy.find(label);
        if (code == nullptr) {
          report(u.index, fmt::format("unknown label '{}'", label));
        } else if (code->speaker != u.speaker) {
          report(u.index, fmt::format("{} label '{}' on a {} utterance", to_string(code->speaker),
                                      label, to_string(u.speaker)));
        }
      }
    }
    if (conv.source == Source::sim_full && i > 0 &&
        conv.utterances[i - 1].speaker == u.speaker) {
      report(u.index, fmt::format("consecutive {} turns in a full simulation", to_string(u.speaker)));
    }
  }
  return out;
}

std::vector<Violation> validate(const Corpus& corpus, const Taxonomy& taxonomy) {
  std::vector<Violation> out;
  std::set<std::string> seen;
  for (const auto& conv : corpus.conversations) {
    if (!seen.insert(conv.id).second) out.push_back({conv.id, std::nullopt, "duplicate conversation id"});
    auto more = validate(conv, taxonomy);
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

std::size_t word_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  if (corpus.conversations.empty()) throw PreconditionError("corpus_stats requires a non-empty corpus");
  CorpusStats stats;
  stats.n_conversations = corpus.conversations.size();
  std::vector<double> therapist_words;
  std::vector<double> client_words;
  for (const auto& conv : corpus.conversations) {
    ++stats.conversations_by_quality[std::string(to_string(conv.quality))];
    for (const auto& u : conv.utterances) {
      auto& bucket = u.speaker == Speaker::therapist ? therapist_words : client_words;
      bucket.push_back(static_cast<double>(word_count(u.text)));
    }
  }
  stats.therapist = summarize(therapist_words);
  stats.client = summarize(client_words);
  return stats;
}

std::vector<AnnotatedUtterance> annotated_utterances(const Corpus& corpus,
                                                     std::optional<Speaker> speaker) {
  std::vector<AnnotatedUtterance> out;
  for (const auto& conv : corpus.conversations) {
    for (const auto& u : conv.utterances) {
      if (!u.labels || (speaker && u.speaker != *speaker)) continue;
      out.push_back({conv.id, u.index, u.speaker, u.text, *u.labels});
    }
  }
  return out;
}

}  // namespace bolt
