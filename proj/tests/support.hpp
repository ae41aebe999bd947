#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <atomic>
#include <optional>
#include <unistd.h>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bolt/corpus.hpp"
#include "bolt/llm_gateway.hpp"

namespace testutil {

struct Turn {
  bolt::Speaker speaker;
  std::string text;
  bolt::LabelSet labels;
};

inline bolt::Conversation make_conversation(std::string id, std::initializer_list<Turn> turns,
                                            bolt::Source source = bolt::Source::human,
                                            bolt::Quality quality = bolt::Quality::high) {
  bolt::Conversation c;
  c.id = std::move(id);
  c.dataset_id = "demo";
  c.quality = quality;
  c.source = source;
  int i = 0;
  for (const auto& t : turns) c.utterances.push_back({i++, t.speaker, t.text, t.labels});
  return c;
}

inline constexpr auto T = bolt::Speaker::therapist;
inline constexpr auto C = bolt::Speaker::client;

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("bolt-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline bolt::BackendConfig mock_config(std::string name = "mock") {
  bolt::BackendConfig cfg;
  cfg.name = name;
  cfg.model_id = name;
  cfg.kind = bolt::BackendKind::scripted_mock;
  cfg.script_path = "inline";
  cfg.rate_per_minute = bolt::kMockRatePerMinute;
  cfg.max_parallel = 4;
  return cfg;
}

inline std::unique_ptr<bolt::Gateway> mock_gateway(const nlohmann::json& script, std::string name = "mock",
                                                   std::optional<std::filesystem::path> cache = std::nullopt) {
  return std::make_unique<bolt::Gateway>(mock_config(std::move(name)),
                                         std::make_unique<bolt::ScriptedMock>(script), std::move(cache));
}

inline std::unique_ptr<bolt::Gateway> callback_gateway(bolt::CallbackTransport::Fn fn, std::string name = "cb") {
  return std::make_unique<bolt::Gateway>(mock_config(std::move(name)),
                                         std::make_unique<bolt::CallbackTransport>(std::move(fn)));
}

}  // namespace testutil
