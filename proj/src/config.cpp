#include "bolt/config.hpp"

#include <fstream>
#include <set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "bolt/errors.hpp"

namespace bolt {

namespace pt = boost::property_tree;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

template <typename T>
T get_as(const pt::ptree& tree, const std::string& key, const std::string& section) {
  try {
    return tree.get<T>(key);
  } catch (const pt::ptree_error&) {
    throw DataError(fmt::format("config [{}]: '{}' is missing or malformed", section, key));
  }
}

BackendConfig parse_backend(const std::string& name, const pt::ptree& tree,
                            const std::filesystem::path& base_dir) {
  static const std::set<std::string> known = {
      "kind",          "base_url",     "model_id",    "api_key_env",    "script_path",
      "max_parallel",  "rate_per_minute", "max_retries", "base_backoff_ms",
  };
  const std::string section = "backend." + name;
  for (const auto& [key, _] : tree) {
    if (!known.contains(key)) throw DataError(fmt::format("config [{}]: unknown key '{}'", section, key));
  }
  BackendConfig b;
  b.name = name;
  const auto kind = get_as<std::string>(tree, "kind", section);
  if (kind == "http_chat") {
    b.kind = BackendKind::http_chat;
  } else if (kind == "scripted_mock") {
    b.kind = BackendKind::scripted_mock;
    b.rate_per_minute = kMockRatePerMinute;
  } else {
    throw DataError(fmt::format("config [{}]: unknown kind '{}'", section, kind));
  }
  b.base_url = tree.get<std::string>("base_url", "");
  b.model_id = tree.get<std::string>("model_id", b.kind == BackendKind::scripted_mock ? name : "");
  b.api_key_env = tree.get<std::string>("api_key_env", "");
  if (auto script = tree.get_optional<std::string>("script_path")) {
    b.script_path = resolve(base_dir, *script);
  }
  if (tree.count("max_parallel")) b.max_parallel = get_as<int>(tree, "max_parallel", section);
  if (tree.count("rate_per_minute")) b.rate_per_minute = get_as<int>(tree, "rate_per_minute", section);
  if (tree.count("max_retries")) b.max_retries = get_as<int>(tree, "max_retries", section);
  if (tree.count("base_backoff_ms")) {
    b.base_backoff = std::chrono::milliseconds(get_as<int>(tree, "base_backoff_ms", section));
  }
  b.validate();
  return b;
}

ModulationSpec parse_modulation(const std::string& name, const pt::ptree& tree) {
  const std::string section = "modulation." + name;
  for (const auto& [key, _] : tree) {
    if (key != "target" && key != "direction" && key != "instruction") {
      throw DataError(fmt::format("config [{}]: unknown key '{}'", section, key));
    }
  }
  for (const auto& builtin : builtin_modulations()) {
    if (builtin.name == name) throw DataError(fmt::format("config [{}]: '{}' is a built-in modulation", section, name));
  }
  const Taxonomy& taxonomy = Taxonomy::builtin();
  const auto target = get_as<std::string>(tree, "target", section);
  const BehaviorCode* code = taxonomy.find(target);
  if (code == nullptr) code = taxonomy.resolve_label(target, Speaker::therapist);
  if (code == nullptr) throw DataError(fmt::format("config [{}]: unknown therapist behavior '{}'", section, target));

  ModulationSpec spec;
  spec.name = name;
  spec.target_code = code->id;
  const auto direction = get_as<std::string>(tree, "direction", section);
  if (direction == "increase") {
    spec.direction = Direction::increase;
  } else if (direction == "decrease") {
    spec.direction = Direction::decrease;
  } else {
    throw DataError(fmt::format("config [{}]: direction must be increase or decrease", section));
  }
  spec.instruction = get_as<std::string>(tree, "instruction", section);
  try {
    spec.validate(taxonomy);
  } catch (const DataError& e) {
    throw DataError(fmt::format("config [{}]: {}", section, e.what()));
  }
  return spec;
}

}  // namespace

const BackendConfig& AppConfig::backend(const std::string& name) const {
  auto it = backends.find(name);
  if (it == backends.end()) throw DataError(fmt::format("no backend named '{}' in config", name));
  return it->second;
}

AppConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree root;
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw DataError(fmt::format("config line {}: {}", e.line(), e.message()));
  }
  AppConfig config;
  for (const auto& [section, tree] : root) {
    if (section == "general") {
      if (auto v = tree.get_optional<std::string>("cache_dir")) config.cache_dir = resolve(base_dir, *v);
      if (tree.count("seed")) config.seed = get_as<std::int64_t>(tree, "seed", section);
      if (tree.count("max_parallel")) config.max_parallel = get_as<int>(tree, "max_parallel", section);
    } else if (section == "templates") {
      if (auto v = tree.get_optional<std::string>("style")) config.style = *v;
      if (auto v = tree.get_optional<std::string>("therapist_system_file")) {
        config.therapist_system_file = resolve(base_dir, *v);
      }
      if (auto v = tree.get_optional<std::string>("client_persona_file")) {
        config.client_persona_file = resolve(base_dir, *v);
      }
      if (auto v = tree.get_optional<std::string>("end_token")) config.end_token = *v;
    } else if (section.rfind("modulation.", 0) == 0) {
      const std::string name = section.substr(11);
      if (name.empty()) throw DataError("config: modulation section without a name");
      config.modulations.emplace(name, parse_modulation(name, tree));
    } else if (section.rfind("backend.", 0) == 0) {
      const std::string name = section.substr(8);
      if (name.empty()) throw DataError("config: backend section without a name");
      config.backends.emplace(name, parse_backend(name, tree, base_dir));
    } else {
      throw DataError(fmt::format("config: unknown section [{}]", section));
    }
  }
  return config;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  return parse_config(in, path.parent_path());
}

BackendConfig resolve_backend(const AppConfig& config, const std::string& spec) {
  if (spec.rfind("mock:", 0) == 0) {
    BackendConfig b;
    b.kind = BackendKind::scripted_mock;
    b.script_path = spec.substr(5);
    b.name = "mock:" + b.script_path.stem().string();
    b.model_id = b.name;
    b.rate_per_minute = kMockRatePerMinute;
    if (config.max_parallel) b.max_parallel = *config.max_parallel;
    b.validate();
    return b;
  }
  return config.backend(spec);
}

const ModulationSpec& resolve_modulation(const AppConfig& config, const std::string& name) {
  for (const auto& spec : builtin_modulations()) {
    if (spec.name == name) return spec;
  }
  if (auto it = config.modulations.find(name); it != config.modulations.end()) return it->second;
  std::string known;
  for (const auto& spec : builtin_modulations()) known += " " + spec.name;
  for (const auto& [n, _] : config.modulations) known += " " + n;
  throw DataError(fmt::format("unknown modulation '{}' (known:{})", name, known));
}

}  // namespace bolt
