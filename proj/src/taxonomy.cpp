#include "bolt/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <fmt/format.h>

#include "bolt/errors.hpp"

namespace bolt {

std::string_view to_string(Speaker speaker) {
  return speaker == Speaker::therapist ? "therapist" : "client";
}

std::string_view to_string(Category category) {
  switch (category) {
    case Category::reflections: return "reflections";
    case Category::questions: return "questions";
    case Category::solutions: return "solutions";
    case Category::normalizing: return "normalizing";
    case Category::psychoeducation: return "psychoeducation";
    case Category::behavior_change: return "behavior_change";
    case Category::self_disclosure: return "self_disclosure";
    case Category::gaining_insights: return "gaining_insights";
  }
  return "reflections";
}

Speaker speaker_from_string(std::string_view text) {
  if (text == "therapist") return Speaker::therapist;
  if (text == "client") return Speaker::client;
  throw DataError(fmt::format("invalid speaker '{}' (expected therapist|client)", text));
}

Category category_from_string(std::string_view text) {
  static constexpr Category all[] = {
      Category::reflections,     Category::questions,       Category::solutions,
      Category::normalizing,     Category::psychoeducation, Category::behavior_change,
      Category::self_disclosure, Category::gaining_insights,
  };
  for (Category c : all) {
    if (to_string(c) == text) return c;
  }
  throw DataError(fmt::format("invalid category '{}'", text));
}

std::string normalize_label_name(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  bool pending_space = false;
  for (char raw : name) {
    unsigned char ch = static_cast<unsigned char>(raw);
    if (std::isspace(ch) || ch == '-' || ch == '_') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(ch)));
  }
  auto is_trim = [](char c) {
    return std::ispunct(static_cast<unsigned char>(c)) && c != '\'' ? true : c == ' ';
  };
  while (!out.empty() && is_trim(out.back())) out.pop_back();
  std::size_t start = 0;
  while (start < out.size() && is_trim(out[start])) ++start;
  return out.substr(start);
}

Taxonomy::Taxonomy(std::vector<BehaviorCode> codes, std::map<std::string, std::string> aliases)
    : codes_(std::move(codes)) {
  std::set<std::string> ids;
  for (const auto& code : codes_) {
    if (!ids.insert(code.id).second) throw DataError("duplicate behavior code id: " + code.id);
    if (code.definition.empty() || code.exemplar.empty() || code.display_name.empty()) {
      throw DataError("behavior code with empty text field: " + code.id);
    }
    std::string key = normalize_label_name(code.display_name);
    auto [it, inserted] = lookup_.emplace(key, code.id);
    if (!inserted) throw DataError("display name collides: " + code.display_name);
  }
  for (auto& [name, id] : aliases) {
    if (!ids.contains(id)) throw DataError(fmt::format("alias '{}' names unknown code {}", name, id));
    std::string key = normalize_label_name(name);
    auto it = lookup_.find(key);
    if (it != lookup_.end() && it->second != id) {
      throw DataError(fmt::format("alias '{}' is ambiguous ({} vs {})", name, it->second, id));
    }
    lookup_[key] = id;
    aliases_[key] = id;
  }
}

std::vector<const BehaviorCode*> Taxonomy::codes_for(Speaker speaker) const {
  std::vector<const BehaviorCode*> out;
  for (const auto& code : codes_) {
    if (code.speaker == speaker) out.push_back(&code);
  }
  return out;
}

std::vector<std::string> Taxonomy::ids_for(Speaker speaker) const {
  std::vector<std::string> out;
  for (const auto& code : codes_) {
    if (code.speaker == speaker) out.push_back(code.id);
  }
  return out;
}

const BehaviorCode* Taxonomy::find(std::string_view id) const {
  auto it = std::find_if(codes_.begin(), codes_.end(), [&](const auto& c) { return c.id == id; });
  return it == codes_.end() ? nullptr : &*it;
}

const BehaviorCode& Taxonomy::at(std::string_view id) const {
  const BehaviorCode* code = find(id);
  if (code == nullptr) throw DataError(fmt::format("unknown behavior code '{}'", id));
  return *code;
}

const BehaviorCode* Taxonomy::resolve_label(std::string_view name, Speaker speaker) const {
  const BehaviorCode* code = find(name);  // canonical id
  if (code == nullptr) {
    auto it = lookup_.find(normalize_label_name(name));
    if (it == lookup_.end()) return nullptr;
    code = find(it->second);
  }
  if (code == nullptr || code->speaker != speaker) return nullptr;
  return code;
}

nlohmann::ordered_json Taxonomy::to_json() const {
  nlohmann::ordered_json codes = nlohmann::ordered_json::array();
  for (const auto& code : codes_) {
    codes.push_back({
        {"id", code.id},
        {"speaker", to_string(code.speaker)},
        {"category", to_string(code.category)},
        {"display_name", code.display_name},
        {"definition", code.definition},
        {"exemplar", code.exemplar},
    });
  }
  nlohmann::ordered_json aliases = nlohmann::ordered_json::object();
  for (const auto& [name, id] : aliases_) aliases[name] = id;
  return {{"codes", codes}, {"aliases", aliases}};
}

Taxonomy Taxonomy::from_json(const nlohmann::json& doc) {
  try {
    std::vector<BehaviorCode> codes;
    for (const auto& item : doc.at("codes")) {
      codes.push_back({
          item.at("id").get<std::string>(),
          speaker_from_string(item.at("speaker").get<std::string>()),
          category_from_string(item.at("category").get<std::string>()),
          item.at("display_name").get<std::string>(),
          item.at("definition").get<std::string>(),
          item.at("exemplar").get<std::string>(),
      });
    }
    std::map<std::string, std::string> aliases;
    if (doc.contains("aliases")) {
      for (const auto& [name, id] : doc.at("aliases").items()) aliases[name] = id.get<std::string>();
    }
    return Taxonomy(std::move(codes), std::move(aliases));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed taxonomy document: ") + e.what());
  }
}

namespace {

Taxonomy make_builtin() {
  using C = Category;
  const auto T = Speaker::therapist;
  const auto K = Speaker::client;
  std::vector<BehaviorCode> codes = {
      {"t.reflection_needs", T, C::reflections, "Reflections on Needs",
       "Identifies an implied or background need for the client.",
       "It sounds like you've realized that maintaining a balance between your work and personal "
       "life is essential for your overall well-being."},
      {"t.reflection_emotions", T, C::reflections, "Reflections on Emotions",
       "Identifies an implied or background emotion for the client",
       "So it seems like you have been feeling a little overwhelmed and anxious about all the moving "
       "parts in your new job."},
      {"t.reflection_values", T, C::reflections, "Reflections on Values",
       "Identifies an implied or background value or set of values for the client.",
       "Being respected by others is a significant value for you."},
      {"t.reflection_consequences", T, C::reflections, "Reflections on Consequences",
       "Identifies consequences the client experience or could experience",
       "Whenever you overspend on luxury items, you struggle to pay your bills at the end of the "
       "month."},
      {"t.reflection_conflict", T, C::reflections, "Reflections on Conflict",
       "Identifies an implied or background emotional or situational conflict for the client.",
       "You're striving to improve your health, but your demanding job leaves you with little time "
       "for exercise and nutrition."},
      {"t.reflection_strength", T, C::reflections, "Reflections on Strength",
       "Identifies an implied or background strength or resource that the client exhibits.",
       "Your ability to adapt and overcome adversity really shows your resilience and "
       "determination."},
      {"t.question_experiences", T, C::questions, "Questions on Experiences",
       "More information about a specific event or statement is sought",
       "You mentioned you are trying to eat healthier. What changes did you make to your diet?"},
      {"t.question_perspectives", T, C::questions, "Questions on Perspectives",
       "Client is asked to consider an experience from a different perspective or vantage point.",
       "That's fantastic, now let's focus on the goals you want to accomplish. Can you visualize any "
       "particular approach or strategy you'd like to implement to achieve these goals?"},
      {"t.question_emotions", T, C::questions, "Questions on Emotions",
       "Asks client to express how they are feeling in the immediate present about something that "
       "just happened in the therapy.",
       "Would you like to talk more about what that feels like for you right now?"},
      {"t.problem_solving", T, C::solutions, "Problem-Solving",
       "Therapist offers possible solutions to a client problem.",
       "It may help to create a routine for daily relaxation techniques, such as deep breathing or "
       "meditation. This could assist in managing your anxiety levels."},
      {"t.planning", T, C::solutions, "Planning",
       "Therapist works with client to construct a specific plan of action.",
       "Let's create a meal plan together. Try to follow it for the next two weeks and note down "
       "any changes you notice in your energy levels and overall well-being."},
      {"t.normalizing", T, C::normalizing, "Normalizing",
       "The therapist acknowledges and validates the client's experience as \"normal\" or "
       "expectable, sympathizes with their challenges, and provides reassurance to foster a "
       "supportive and encouraging therapeutic atmosphere.",
       "I hear you, it's perfectly normal to feel overwhelmed given your circumstances."},
      {"t.psychoeducation", T, C::psychoeducation, "Psychoeducation",
       "Therapeutically relevant information about psychological principles is provided.",
       "Cognitive behavioral therapy aids in altering detrimental thought patterns."},
      {"c.changing_unhealthy_behavior", K, C::behavior_change, "Changing Unhealthy Behavior",
       "Showing intention or action taken on changing unhealthy behavior.",
       "I've tried to quit drinking, but I end up drinking more than I try to drink less."},
      {"c.sustaining_unhealthy_behavior", K, C::behavior_change, "Sustaining Unhealthy Behavior",
       "Showing intention or action taken on sustaining unhealthy behavior",
       "I am smoking around 20 cigarettes a day for the past couple of years. I know it's bad for my "
       "health, but I'm not ready to quit yet."},
      {"c.sharing_negative_emotions", K, C::self_disclosure, "Sharing Negative Emotions",
       "Clients describe discomfort or suffering without a specific object, or explicitly "
       "acknowledge specific negative emotion.",
       "Life has been really challenging lately, I am feeling lost."},
      {"c.sharing_positive_emotions", K, C::self_disclosure, "Sharing Positive Emotions",
       "Client describes enjoyment without a specific object, or explicitly acknowledges specific "
       "positive emotion.",
       "I was so thankful when I received that news."},
      {"c.gained_insight", K, C::gaining_insights, "Gained Insight",
       "Client expresses that they learned something new about themselves or about their "
       "situation.",
       "I hadn't considered how much I avoid confrontations."},
      {"c.sharing_experiences", K, C::self_disclosure, "Sharing Experiences",
       "Client shares the details of their basic background, their life events, the situation they "
       "faced or the changes in their life.",
       "I lost my job due to the pandemic, and I've now had to move back in with my parents at age "
       "35 which is a significant change for me."},
  };

  std::map<std::string, std::string> aliases;
  const std::pair<const char*, const char*> reflection_stems[] = {
      {"needs", "t.reflection_needs"},          {"need", "t.reflection_needs"},
      {"emotions", "t.reflection_emotions"},    {"emotion", "t.reflection_emotions"},
      {"values", "t.reflection_values"},        {"value", "t.reflection_values"},
      {"consequences", "t.reflection_consequences"}, {"consequence", "t.reflection_consequences"},
      {"conflict", "t.reflection_conflict"},    {"conflicts", "t.reflection_conflict"},
      {"strength", "t.reflection_strength"},    {"strengths", "t.reflection_strength"},
  };
  for (auto [stem, id] : reflection_stems) {
    for (const char* head : {"reflections on ", "reflection on ", "reflection of ", "reflecting "}) {
      aliases[std::string(head) + stem] = id;
    }
  }
  const std::pair<const char*, const char*> question_stems[] = {
      {"experiences", "t.question_experiences"},   {"experience", "t.question_experiences"},
      {"perspectives", "t.question_perspectives"}, {"perspective", "t.question_perspectives"},
      {"emotions", "t.question_emotions"},         {"emotion", "t.question_emotions"},
  };
  for (auto [stem, id] : question_stems) {
    for (const char* head : {"questions on ", "question on ", "questions about ", "question about "}) {
      aliases[std::string(head) + stem] = id;
    }
  }
  const std::pair<const char*, const char*> extra[] = {
      {"problem solving", "t.problem_solving"},
      {"problemsolving", "t.problem_solving"},
      {"solutions", "t.problem_solving"},
      {"plan", "t.planning"},
      {"normalization", "t.normalizing"},
      {"normalising", "t.normalizing"},
      {"psycho education", "t.psychoeducation"},
      {"change unhealthy behavior", "c.changing_unhealthy_behavior"},
      {"changing unhealthy behaviour", "c.changing_unhealthy_behavior"},
      {"sustain unhealthy behavior", "c.sustaining_unhealthy_behavior"},
      {"sustaining unhealthy behaviour", "c.sustaining_unhealthy_behavior"},
      {"sharing negative feeling or emotion", "c.sharing_negative_emotions"},
      {"sharing negative emotion", "c.sharing_negative_emotions"},
      {"share negative emotions", "c.sharing_negative_emotions"},
      {"sharing positive feeling or emotion", "c.sharing_positive_emotions"},
      {"sharing positive emotion", "c.sharing_positive_emotions"},
      {"share positive emotions", "c.sharing_positive_emotions"},
      {"gained insights", "c.gained_insight"},
      {"gaining insight", "c.gained_insight"},
      {"gaining insights", "c.gained_insight"},
      {"sharing life event or situation", "c.sharing_experiences"},
      {"sharing experience", "c.sharing_experiences"},
      {"share experiences", "c.sharing_experiences"},
  };
  for (auto [name, id] : extra) aliases[name] = id;
  return Taxonomy(std::move(codes), std::move(aliases));
}

}  // namespace

const Taxonomy& Taxonomy::builtin() {
  static const Taxonomy taxonomy = make_builtin();
  return taxonomy;
}

}  // namespace bolt
