#include "bolt/modulation.hpp"

#include <cmath>
#include <future>
#include <limits>

#include <fmt/format.h>

#include "bolt/detail/json_number.hpp"

namespace bolt {

std::string_view to_string(Direction direction) {
  return direction == Direction::increase ? "increase" : "decrease";
}

void ModulationSpec::validate(const Taxonomy& taxonomy) const {
  if (instruction.empty()) throw DataError("modulation instruction must be non-empty");
  const BehaviorCode& code = taxonomy.at(target_code);
  if (code.speaker != Speaker::therapist) throw DataError("modulation target must be a therapist code");
}

const std::vector<ModulationSpec>& builtin_modulations() {
  static const std::vector<ModulationSpec> specs = {
      {"increase_questions_experiences", "t.question_experiences", Direction::increase,
       "focus more on asking questions to allow client to express their experiences"},
      {"decrease_problem_solving", "t.problem_solving", Direction::decrease,
       "focus less on offering possible solutions to client's problem"},
      {"decrease_normalizing", "t.normalizing", Direction::decrease,
       "focus less on validating client's experiences or feelings as normal, on sympathizing with their "
       "challenges, and on providing reassurance"},
  };
  return specs;
}

const ModulationSpec& builtin_modulation(std::string_view name) {
  for (const auto& spec : builtin_modulations()) {
    if (spec.name == name) return spec;
  }
  throw DataError(fmt::format("unknown built-in modulation '{}'", name));
}

std::string build_modulated_prompt(std::string_view base_system, const ModulationSpec& spec) {
  if (spec.instruction.empty()) throw PreconditionError("modulation instruction must be non-empty");
  if (base_system.find(spec.instruction) != std::string_view::npos) {
    throw PreconditionError("system prompt already contains the modulation instruction");
  }
  return fmt::format("{}\n{}", base_system, spec.instruction);
}

ArmSummary summarize_frequency(const Corpus& labeled, const BehaviorCode& code) {
  ArmSummary arm;
  std::size_t total = 0;
  std::size_t hits = 0;
  for (const auto& conv : labeled.conversations) {
    if (auto f = behavior_frequency(conv, code)) arm.per_conversation.push_back(*f);
    for (const auto& u : conv.utterances) {
      if (u.speaker != code.speaker) continue;
      ++total;
      if (u.labels->contains(code.id)) ++hits;
    }
  }
  arm.mean_freq = arm.per_conversation.empty() ? std::numeric_limits<double>::quiet_NaN()
                                               : stats::mean(arm.per_conversation);
  arm.pooled_freq = total == 0 ? std::numeric_limits<double>::quiet_NaN()
                               : 100.0 * static_cast<double>(hits) / static_cast<double>(total);
  return arm;
}

namespace {

Corpus run_arm(const ModulationBackends& backends, const PromptTemplateSet& templates, const Corpus& references,
               std::int64_t seed, const ClassifierSpec& classifier, const Taxonomy& taxonomy, int max_turns,
               int max_parallel, std::string_view arm) {
  SimulationRun sim = simulate_corpus(references, SimulationMode::full, *backends.therapist, backends.client,
                                      templates, seed, max_turns, max_parallel);
  if (!sim.failures.empty()) {
    throw BackendError(fmt::format("simulation[{}]: {}", arm, sim.failures.front().what()));
  }
  ClassificationRun cls = classify_corpus(*backends.classifier, classifier, taxonomy, sim.corpus, max_parallel);
  if (!cls.failures.empty()) {
    const auto& f = cls.failures.front();
    throw BackendError(fmt::format("classification[{}]: {}#{}: {}", arm, f.conversation_id, f.utterance_index, f.error));
  }
  return merge_predictions(sim.corpus, cls.predictions, classifier.speaker, taxonomy);
}

}  // namespace

ModulationResult run_modulation_experiment(const ModulationBackends& backends, const PromptTemplateSet& templates,
                                           const Corpus& references, const ModulationSpec& spec, std::int64_t seed,
                                           const ClassifierSpec& classifier, const Taxonomy& taxonomy, int max_turns,
                                           int max_parallel) {
  if (references.conversations.empty()) throw PreconditionError("modulation needs at least one reference");
  if (!backends.therapist || !backends.client || !backends.classifier) {
    throw PreconditionError("modulation needs therapist, client and classifier backends");
  }
  if (classifier.speaker != Speaker::therapist) throw PreconditionError("modulation classifies therapist turns");
  spec.validate(taxonomy);

  PromptTemplateSet modulated_templates = templates;
  modulated_templates.therapist_system = build_modulated_prompt(templates.therapist_system, spec);

  auto baseline_future = std::async(std::launch::async, [&] {
    return run_arm(backends, templates, references, seed, classifier, taxonomy, max_turns, max_parallel, "baseline");
  });
  Corpus modulated = run_arm(backends, modulated_templates, references, seed, classifier, taxonomy, max_turns,
                             max_parallel, "modulated");
  Corpus baseline = baseline_future.get();

  const BehaviorCode& code = taxonomy.at(spec.target_code);
  ModulationResult result;
  result.model_id = backends.therapist->config().model_id;
  result.spec = spec;
  result.baseline = summarize_frequency(baseline, code);
  result.modulated = summarize_frequency(modulated, code);
  result.delta = result.modulated.mean_freq - result.baseline.mean_freq;
  if (result.baseline.per_conversation.size() >= 2 && result.modulated.per_conversation.size() >= 2) {
    const auto tt = stats::students_t_test(result.modulated.per_conversation, result.baseline.per_conversation);
    result.t = tt.t;
    result.df = tt.df;
    result.p = tt.p;
    result.significant = tt.p < kSignificanceLevel;
  } else {
    result.t = result.df = result.p = std::numeric_limits<double>::quiet_NaN();
  }
  result.baseline_corpus = std::move(baseline);
  result.modulated_corpus = std::move(modulated);
  return result;
}

nlohmann::ordered_json to_json(const ModulationResult& r) {
  using detail::json_number;
  nlohmann::ordered_json doc;
  doc["table_kind"] = "modulation";
  doc["model_id"] = r.model_id;
  doc["modulation"] = r.spec.name;
  doc["target"] = r.spec.target_code;
  doc["direction"] = to_string(r.spec.direction);
  doc["instruction"] = r.spec.instruction;
  doc["baseline_freq"] = json_number(r.baseline.mean_freq);
  doc["modulated_freq"] = json_number(r.modulated.mean_freq);
  doc["baseline_pooled_freq"] = json_number(r.baseline.pooled_freq);
  doc["modulated_pooled_freq"] = json_number(r.modulated.pooled_freq);
  doc["delta"] = json_number(r.delta);
  doc["t"] = json_number(r.t);
  doc["df"] = json_number(r.df);
  doc["p"] = json_number(r.p);
  doc["significant"] = r.significant;
  doc["reference_freq"] = r.reference_freq ? json_number(*r.reference_freq) : nlohmann::ordered_json(nullptr);
  doc["n_conversations"] = r.baseline.per_conversation.size();
  return doc;
}

}  // namespace bolt
