#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bolt/analytics.hpp"
#include "bolt/classification.hpp"
#include "bolt/simulation.hpp"

namespace bolt {

enum class Direction { increase, decrease };

std::string_view to_string(Direction direction);

/// A single instruction appended to the therapist system prompt to steer one behavior.
struct ModulationSpec {
  std::string name;
  std::string target_code;
  Direction direction = Direction::increase;
  std::string instruction;

  void validate(const Taxonomy& taxonomy = Taxonomy::builtin()) const;
};

/// increase_questions_experiences, decrease_problem_solving, decrease_normalizing.
const std::vector<ModulationSpec>& builtin_modulations();
const ModulationSpec& builtin_modulation(std::string_view name);  // throws DataError

/// base + "\n" + instruction. Throws PreconditionError when the instruction
/// is already present.
std::string build_modulated_prompt(std::string_view base_system, const ModulationSpec& spec);

struct ArmSummary {
  double mean_freq = 0.0;    // mean of per-conversation frequencies
  double pooled_freq = 0.0;  // over all target-speaker utterances of the arm
  std::vector<double> per_conversation;
};

struct ModulationResult {
  std::string model_id;
  ModulationSpec spec;
  ArmSummary baseline;
  ArmSummary modulated;
  double delta = 0.0;  // modulated.mean_freq - baseline.mean_freq
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  bool significant = false;
  std::optional<double> reference_freq;  // high-quality human baseline, when supplied
  Corpus baseline_corpus;
  Corpus modulated_corpus;
};

struct ModulationBackends {
  Gateway* therapist = nullptr;
  Gateway* client = nullptr;
  Gateway* classifier = nullptr;
};

/// Paired design: both arms simulate the same references with the same seed
/// (full mode); only the therapist system prompt differs. Each arm is then
/// classified and the target frequency compared with a t test over
/// per-conversation frequencies. Errors are rethrown tagged with the phase.
ModulationResult run_modulation_experiment(const ModulationBackends& backends, const PromptTemplateSet& templates,
                                           const Corpus& references, const ModulationSpec& spec,
                                           std::int64_t seed, const ClassifierSpec& classifier,
                                           const Taxonomy& taxonomy = Taxonomy::builtin(), int max_turns = 20,
                                           int max_parallel = 1);

/// Target frequency of a labeled corpus (e.g. a high-quality human baseline).
ArmSummary summarize_frequency(const Corpus& labeled, const BehaviorCode& code);

nlohmann::ordered_json to_json(const ModulationResult& result);

}  // namespace bolt
