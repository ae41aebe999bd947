#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "bolt/llm_gateway.hpp"
#include "bolt/modulation.hpp"

namespace bolt {

/// Parsed INI-style configuration file:
///
///   [general]
///   cache_dir = .bolt-cache      ; relative paths resolve against the file
///   seed = 42
///   max_parallel = 4
///
///   [backend.gpt4]
///   kind = http_chat
///   base_url = https://api.openai.com/v1
///   model_id = gpt-4
///   api_key_env = BOLT_API_KEY_GPT4
///   max_parallel = 4
///   rate_per_minute = 60
///   max_retries = 5
///   base_backoff_ms = 500
///
///   [backend.mock]
///   kind = scripted_mock
///   model_id = mock-therapist
///   script_path = mock.json
///
///   [templates]
///   style = motivational_interviewing
///   therapist_system_file = therapist.txt
///   client_persona_file = persona.txt
///   end_token = [END_OF_SESSION]
///
///   [modulation.fewer_questions]     ; usable as `modulate --modulation fewer_questions`
///   target = t.question_experiences  ; code id or display name
///   direction = decrease
///   instruction = focus less on asking questions
struct AppConfig {
  std::map<std::string, BackendConfig> backends;
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::int64_t> seed;
  std::optional<int> max_parallel;

  std::optional<std::string> style;
  std::optional<std::filesystem::path> therapist_system_file;
  std::optional<std::filesystem::path> client_persona_file;
  std::optional<std::string> end_token;

  std::map<std::string, ModulationSpec> modulations;

  const BackendConfig& backend(const std::string& name) const;  // throws DataError
};

AppConfig load_config(const std::filesystem::path& path);
AppConfig parse_config(std::istream& in, const std::filesystem::path& base_dir);

/// Resolves a `--backend` argument: either a configured backend name or the
/// shorthand `mock:<script.json>`.
BackendConfig resolve_backend(const AppConfig& config, const std::string& spec);

/// Built-in modulation by name, else one defined in the config.
const ModulationSpec& resolve_modulation(const AppConfig& config, const std::string& name);

}  // namespace bolt
