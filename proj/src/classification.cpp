#include "bolt/classification.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "bolt/detail/parallel.hpp"
#include "bolt/detail/rng.hpp"

namespace bolt {

std::string_view to_string(ClassifierMode mode) {
  switch (mode) {
    case ClassifierMode::multi_def: return "multi_def";
    case ClassifierMode::multi_def_ex: return "multi_def_ex";
    case ClassifierMode::binary_def_ex: return "binary_def_ex";
  }
  return "multi_def";
}

ClassifierMode classifier_mode_from_string(std::string_view text) {
  if (text == "multi_def") return ClassifierMode::multi_def;
  if (text == "multi_def_ex") return ClassifierMode::multi_def_ex;
  if (text == "binary_def_ex") return ClassifierMode::binary_def_ex;
  throw DataError(fmt::format("unknown classifier mode '{}' (expected multi_def|multi_def_ex|binary_def_ex)", text));
}

void ClassifierSpec::validate() const {
  const bool needs_examples = mode != ClassifierMode::multi_def;
  if (needs_examples && k_shots < 1) throw PreconditionError("k_shots must be >= 1 for example-based modes");
  if (needs_examples && example_pool.empty()) {
    throw PreconditionError(fmt::format("mode {} requires an example pool", to_string(mode)));
  }
  if (context_window < 0) throw PreconditionError("context_window must be >= 0");
}

namespace {

std::vector<AnnotatedUtterance> pool_for(const ClassifierSpec& spec) {
  std::vector<AnnotatedUtterance> out;
  for (const auto& item : spec.example_pool) {
    if (item.speaker == spec.speaker) out.push_back(item);
  }
  return out;
}

std::string quote(std::string_view text) { return fmt::format("\"{}\"", text); }

std::string render_target(std::string_view utterance, const UtteranceContext& context) {
  std::string out;
  if (!context.preceding.empty()) {
    out += "Preceding conversation:\n";
    for (const auto& u : context.preceding) {
      out += fmt::format("{}: {}\n", u.speaker == Speaker::therapist ? "Therapist" : "Client", u.text);
    }
    out += "\n";
  }
  out += "Utterance: " + quote(utterance);
  return out;
}

std::string speaker_noun(Speaker s) { return s == Speaker::therapist ? "therapist" : "client"; }

std::string trim_copy(std::string_view text) {
  const auto is_ws = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0, e = text.size();
  while (b < e && is_ws(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && is_ws(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

// Drops list markers such as "-", "*", "1." or "2)" in front of a label.
std::string strip_list_marker(std::string token) {
  std::size_t i = 0;
  while (i < token.size() && (token[i] == '-' || token[i] == '*' || token[i] == '#' ||
                              std::isspace(static_cast<unsigned char>(token[i])))) {
    ++i;
  }
  std::size_t j = i;
  while (j < token.size() && std::isdigit(static_cast<unsigned char>(token[j]))) ++j;
  if (j > i && j < token.size() && (token[j] == '.' || token[j] == ')')) i = j + 1;
  return trim_copy(std::string_view(token).substr(i));
}

}  // namespace

FewShot select_few_shot(const std::vector<AnnotatedUtterance>& pool, int k, std::int64_t seed,
                        std::optional<std::string_view> code) {
  if (k < 0) throw PreconditionError("k must be non-negative");
  const auto want = static_cast<std::size_t>(k);
  if (pool.size() < want) {
    throw PreconditionError(fmt::format("example pool has {} items, fewer than k={}", pool.size(), k));
  }
  FewShot out;
  detail::Rng rng(detail::mix_seed(static_cast<std::uint64_t>(seed), code.value_or("")));
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  if (!code) {
    for (std::size_t i = 0; i < want; ++i) out.demonstrations.push_back(pool[order[i]]);
    return out;
  }
  std::vector<std::size_t> positives, negatives;
  for (std::size_t i : order) {
    (pool[i].labels.contains(std::string(*code)) ? positives : negatives).push_back(i);
  }
  std::size_t n_pos = std::min(positives.size(), (want + 1) / 2);
  std::size_t n_neg = std::min(negatives.size(), want - n_pos);
  if (n_pos + n_neg < want) n_pos = std::min(positives.size(), want - n_neg);
  if (n_pos < (want + 1) / 2) {
    out.warnings.push_back(fmt::format("few-shot for {}: only {} positive example(s) available", *code, positives.size()));
  }
  if (n_neg < want - (want + 1) / 2) {
    out.warnings.push_back(fmt::format("few-shot for {}: only {} negative example(s) available", *code, negatives.size()));
  }
  std::vector<std::size_t> chosen(positives.begin(), positives.begin() + static_cast<std::ptrdiff_t>(n_pos));
  chosen.insert(chosen.end(), negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(n_neg));
  rng.shuffle(chosen);
  for (std::size_t i : chosen) out.demonstrations.push_back(pool[i]);
  return out;
}

std::string serialize_labels(const LabelSet& labels, const Taxonomy& taxonomy) {
  std::string out;
  for (const auto& code : taxonomy.codes()) {
    if (!labels.contains(code.id)) continue;
    if (!out.empty()) out += ", ";
    out += code.display_name;
  }
  return out.empty() ? "None" : out;
}

PromptBuild build_multi_label_prompt(const ClassifierSpec& spec, const Taxonomy& taxonomy,
                                     std::string_view utterance, const UtteranceContext& context) {
  if (spec.mode == ClassifierMode::binary_def_ex) {
    throw PreconditionError("build_multi_label_prompt needs a multi-label mode");
  }
  spec.validate();
  PromptBuild build;
  std::string system = fmt::format(
      "You are an expert in psychotherapy. You identify the conversational behaviors expressed in "
      "a {} utterance from a counseling conversation.\n\nConversational behaviors:\n",
      speaker_noun(spec.speaker));
  for (const BehaviorCode* code : taxonomy.codes_for(spec.speaker)) {
    system += fmt::format("- {}: {}\n", code->display_name, code->definition);
  }
  if (spec.mode == ClassifierMode::multi_def_ex) {
    auto shots = select_few_shot(pool_for(spec), spec.k_shots, spec.seed);
    build.warnings = std::move(shots.warnings);
    system += "\nExamples:\n";
    for (const auto& demo : shots.demonstrations) {
      system += fmt::format("Utterance: {}\nBehaviors: {}\n\n", quote(demo.text),
                            serialize_labels(demo.labels, taxonomy));
    }
    system.pop_back();
  }
  system +=
      "\nAnswer with a comma-separated list of the behavior names above, or the word None if no "
      "behavior applies.";
  build.messages.push_back({Role::system, std::move(system)});
  build.messages.push_back(
      {Role::user, fmt::format("{}?\n{}", kMultiLabelInstruction, render_target(utterance, context))});
  return build;
}

PromptBuild build_binary_prompt(const ClassifierSpec& spec, const BehaviorCode& code,
                                std::string_view utterance, const UtteranceContext& context) {
  if (spec.mode != ClassifierMode::binary_def_ex) {
    throw PreconditionError("build_binary_prompt needs mode binary_def_ex");
  }
  spec.validate();
  if (code.speaker != spec.speaker) throw PreconditionError("code speaker differs from classifier speaker");
  PromptBuild build;
  auto shots = select_few_shot(pool_for(spec), spec.k_shots, spec.seed, code.id);
  build.warnings = std::move(shots.warnings);
  std::string system = fmt::format(
      "You are an expert in psychotherapy. You decide whether a {} utterance from a counseling "
      "conversation contains one specific conversational behavior.\n\n"
      "Behavior: {}\nDefinition: {}\n\nExamples:\n",
      speaker_noun(spec.speaker), code.display_name, code.definition);
  for (const auto& demo : shots.demonstrations) {
    system += fmt::format("Utterance: {}\nAnswer: {}\n\n", quote(demo.text),
                          demo.labels.contains(code.id) ? "Yes" : "No");
  }
  system.pop_back();
  build.messages.push_back({Role::system, std::move(system)});
  build.messages.push_back(
      {Role::user, fmt::format("Classify if the utterance contains {}. Answer in Yes or No.\n{}",
                               code.display_name, render_target(utterance, context))});
  return build;
}

ParsedLabels parse_multi_label(std::string_view response, const Taxonomy& taxonomy, Speaker speaker) {
  ParsedLabels out;
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    tokens.push_back(current);
    current.clear();
  };
  for (char c : response) {
    if (c == ',' || c == ';' || c == '\n') {
      flush();
    } else {
      current.push_back(c);
    }
  }
  flush();
  std::vector<std::string> parts;
  for (auto& token : tokens) {
    // "A and B" splits into two labels; no label name contains " and ".
    std::string lowered = token;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::size_t start = 0;
    for (std::size_t pos = lowered.find(" and "); pos != std::string::npos; pos = lowered.find(" and ", start)) {
      parts.push_back(token.substr(start, pos - start));
      start = pos + 5;
    }
    parts.push_back(token.substr(start));
  }
  for (auto& part : parts) {
    std::string token = strip_list_marker(part);
    if (auto colon = token.rfind(':'); colon != std::string::npos) token = trim_copy(token.substr(colon + 1));
    const std::string key = normalize_label_name(token);
    if (key.empty() || key == "none") continue;
    if (const BehaviorCode* code = taxonomy.resolve_label(token, speaker)) {
      out.codes.insert(code->id);
    } else {
      ++out.warnings;
    }
  }
  return out;
}

BinaryAnswer parse_binary(std::string_view response) {
  std::size_t i = 0;
  while (i < response.size() && (std::isspace(static_cast<unsigned char>(response[i])) ||
                                 std::ispunct(static_cast<unsigned char>(response[i])))) {
    ++i;
  }
  std::string word;
  while (i < response.size() && std::isalpha(static_cast<unsigned char>(response[i]))) {
    word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(response[i]))));
    ++i;
  }
  if (word == "yes") return BinaryAnswer::yes;
  if (word == "no") return BinaryAnswer::no;
  return BinaryAnswer::unparseable;
}

namespace {

struct Target {
  std::string conversation_id;
  int utterance_index;
  std::string text;
  UtteranceContext context;
};

ClassificationRun classify_targets(Gateway& backend, const ClassifierSpec& spec, const Taxonomy& taxonomy,
                                   const std::vector<Target>& targets, int max_parallel) {
  spec.validate();
  ClassificationRun run;
  const auto codes = taxonomy.codes_for(spec.speaker);
  const bool binary = spec.mode == ClassifierMode::binary_def_ex;
  const std::size_t per_target = binary ? codes.size() : 1;
  const GenerationParams params = classification_params();

  // Prompt warnings (few-shot balance) depend only on the spec, so collect them once.
  std::set<std::string> warnings;
  if (binary) {
    for (const BehaviorCode* code : codes) {
      for (auto& w : select_few_shot(pool_for(spec), spec.k_shots, spec.seed, code->id).warnings) {
        warnings.insert(std::move(w));
      }
    }
  }

  std::vector<std::string> responses(targets.size() * per_target);
  std::vector<std::optional<std::string>> errors(targets.size() * per_target);
  detail::parallel_for(responses.size(), static_cast<std::size_t>(max_parallel), [&](std::size_t slot) {
    const Target& target = targets[slot / per_target];
    try {
      PromptBuild build = binary ? build_binary_prompt(spec, *codes[slot % per_target], target.text, target.context)
                                 : build_multi_label_prompt(spec, taxonomy, target.text, target.context);
      responses[slot] = backend.complete(build.messages, params);
    } catch (const BackendError& e) {
      errors[slot] = e.what();
    }
  });

  for (std::size_t t = 0; t < targets.size(); ++t) {
    const Target& target = targets[t];
    bool failed = false;
    for (std::size_t c = 0; c < per_target; ++c) {
      if (const auto& err = errors[t * per_target + c]) {
        failed = true;
        std::optional<std::string> code;
        if (binary) code = codes[c]->id;
        run.failures.push_back({target.conversation_id, target.utterance_index, code, *err});
      }
    }
    if (failed) continue;
    Prediction p;
    p.conversation_id = target.conversation_id;
    p.utterance_index = target.utterance_index;
    p.mode = spec.mode;
    if (binary) {
      for (std::size_t c = 0; c < per_target; ++c) {
        const std::string& raw = responses[t * per_target + c];
        p.raw_by_code[codes[c]->id] = raw;
        switch (parse_binary(raw)) {
          case BinaryAnswer::yes: p.predicted.insert(codes[c]->id); break;
          case BinaryAnswer::no: break;
          case BinaryAnswer::unparseable: ++p.warnings; break;
        }
      }
    } else {
      p.raw_response = responses[t];
      auto parsed = parse_multi_label(p.raw_response, taxonomy, spec.speaker);
      p.predicted = std::move(parsed.codes);
      p.warnings = parsed.warnings;
    }
    run.predictions.push_back(std::move(p));
  }
  std::sort(run.predictions.begin(), run.predictions.end(), [](const Prediction& a, const Prediction& b) {
    return std::tie(a.conversation_id, a.utterance_index) < std::tie(b.conversation_id, b.utterance_index);
  });
  run.warnings.assign(warnings.begin(), warnings.end());
  return run;
}

void check_pool_disjoint(const ClassifierSpec& spec, const std::vector<Target>& targets) {
  std::set<std::pair<std::string, int>> pool;
  for (const auto& item : spec.example_pool) pool.emplace(item.conversation_id, item.utterance_index);
  for (const auto& t : targets) {
    if (pool.contains({t.conversation_id, t.utterance_index})) {
      throw PreconditionError(fmt::format("utterance {}#{} is both a few-shot example and a classification target",
                                          t.conversation_id, t.utterance_index));
    }
  }
}

}  // namespace

ClassificationRun classify_corpus(Gateway& backend, const ClassifierSpec& spec, const Taxonomy& taxonomy,
                                  const Corpus& corpus, int max_parallel) {
  std::vector<Target> targets;
  for (const auto& conv : corpus.conversations) {
    for (std::size_t i = 0; i < conv.utterances.size(); ++i) {
      const auto& u = conv.utterances[i];
      if (u.speaker != spec.speaker) continue;
      Target t{conv.id, u.index, u.text, {}};
      const std::size_t from = i > static_cast<std::size_t>(spec.context_window) ? i - spec.context_window : 0;
      t.context.preceding.assign(conv.utterances.begin() + static_cast<std::ptrdiff_t>(from),
                                 conv.utterances.begin() + static_cast<std::ptrdiff_t>(i));
      targets.push_back(std::move(t));
    }
  }
  check_pool_disjoint(spec, targets);
  return classify_targets(backend, spec, taxonomy, targets, max_parallel);
}

ClassificationRun classify_utterances(Gateway& backend, const ClassifierSpec& spec, const Taxonomy& taxonomy,
                                      const std::vector<AnnotatedUtterance>& items, int max_parallel) {
  std::vector<Target> targets;
  for (const auto& item : items) {
    if (item.speaker != spec.speaker) continue;
    targets.push_back({item.conversation_id, item.utterance_index, item.text, {}});
  }
  check_pool_disjoint(spec, targets);
  return classify_targets(backend, spec, taxonomy, targets, max_parallel);
}

nlohmann::ordered_json to_json(const Prediction& p) {
  nlohmann::ordered_json doc;
  doc["conversation_id"] = p.conversation_id;
  doc["utterance_index"] = p.utterance_index;
  doc["predicted"] = nlohmann::ordered_json::array();
  for (const auto& code : p.predicted) doc["predicted"].push_back(code);
  doc["mode"] = to_string(p.mode);
  doc["warnings"] = p.warnings;
  return doc;
}

Prediction prediction_from_json(const nlohmann::json& doc) {
  try {
    Prediction p;
    p.conversation_id = doc.at("conversation_id").get<std::string>();
    p.utterance_index = doc.at("utterance_index").get<int>();
    for (const auto& code : doc.at("predicted")) p.predicted.insert(code.get<std::string>());
    p.mode = classifier_mode_from_string(doc.at("mode").get<std::string>());
    p.warnings = doc.at("warnings").get<int>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed prediction record: ") + e.what());
  }
}

void write_predictions(std::ostream& out, const std::vector<Prediction>& predictions) {
  for (const auto& p : predictions) out << to_json(p).dump() << '\n';
}

std::vector<Prediction> read_predictions(std::istream& in) {
  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(prediction_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(fmt::format("predictions line {}: {}", line_no, e.what()));
    } catch (const DataError& e) {
      throw DataError(fmt::format("predictions line {}: {}", line_no, e.what()));
    }
  }
  return out;
}

Corpus merge_predictions(const Corpus& corpus, const std::vector<Prediction>& predictions, Speaker speaker,
                         const Taxonomy& taxonomy) {
  std::map<std::pair<std::string, int>, const Prediction*> index;
  for (const auto& p : predictions) {
    for (const auto& code : p.predicted) {
      const BehaviorCode& c = taxonomy.at(code);
      if (c.speaker != speaker) {
        throw DataError(fmt::format("prediction for {}#{} carries {} code {}", p.conversation_id,
                                    p.utterance_index, to_string(c.speaker), code));
      }
    }
    index[{p.conversation_id, p.utterance_index}] = &p;
  }
  Corpus out = corpus;
  for (auto& conv : out.conversations) {
    for (auto& u : conv.utterances) {
      if (u.speaker != speaker) continue;
      if (auto it = index.find({conv.id, u.index}); it != index.end()) u.labels = it->second->predicted;
    }
  }
  return out;
}

}  // namespace bolt
