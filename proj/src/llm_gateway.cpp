#include "bolt/llm_gateway.hpp"

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "bolt/errors.hpp"

namespace bolt {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

void GenerationParams::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw PreconditionError(fmt::format("temperature {} outside [0, 2]", temperature));
  }
  if (max_tokens <= 0) throw PreconditionError("max_tokens must be positive");
}

GenerationParams simulation_params() {
  GenerationParams p;
  p.temperature = 0.7;
  p.max_tokens = 512;
  return p;
}

GenerationParams classification_params() {
  GenerationParams p;
  p.temperature = 0.0;
  p.max_tokens = 128;
  return p;
}

void BackendConfig::validate() const {
  auto fail = [&](std::string_view what) {
    throw DataError(fmt::format("backend '{}': {}", name, what));
  };
  if (name.empty()) throw DataError("backend with empty name");
  if (max_parallel <= 0) fail("max_parallel must be positive");
  if (rate_per_minute <= 0) fail("rate_per_minute must be positive");
  if (max_retries < 0 || max_retries > 20) fail("max_retries must be in [0, 20]");
  if (kind == BackendKind::http_chat) {
    if (base_url.empty()) fail("http_chat requires base_url");
    if (api_key_env.empty()) fail("http_chat requires api_key_env");
    if (model_id.empty()) fail("http_chat requires model_id");
    if (!script_path.empty()) fail("script_path is only valid for scripted_mock");
  } else {
    if (script_path.empty()) fail("scripted_mock requires script_path");
    if (!base_url.empty() || !api_key_env.empty()) {
      fail("base_url/api_key_env are only valid for http_chat");
    }
  }
}

nlohmann::ordered_json canonical_request(const ChatRequest& request) {
  nlohmann::ordered_json doc;
  doc["backend"] = request.backend_name;
  doc["model"] = request.model_id;
  auto& messages = doc["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  doc["temperature"] = request.params.temperature;
  doc["max_tokens"] = request.params.max_tokens;
  doc["stop"] = request.params.stop ? nlohmann::ordered_json(*request.params.stop) : nullptr;
  doc["seed"] = request.params.seed ? nlohmann::ordered_json(*request.params.seed) : nullptr;
  return doc;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string request_key(const ChatRequest& request) {
  return sha256_hex(canonical_request(request).dump(-1, ' ', false,
                                                    nlohmann::json::error_handler_t::strict));
}

std::string request_key(std::string_view backend_name, std::string_view model_id,
                        const std::vector<ChatMessage>& messages, const GenerationParams& params) {
  return request_key(ChatRequest{std::string(backend_name), std::string(model_id), messages, params});
}

// ---------------------------------------------------------------------------

namespace {

class SteadyClock : public Clock {
 public:
  time_point now() override { return std::chrono::steady_clock::now(); }
  void sleep_until(time_point when) override { std::this_thread::sleep_until(when); }
};

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

Clock& system_clock() {
  static SteadyClock clock;
  return clock;
}

RateLimiter::RateLimiter(int max_parallel, int rate_per_minute, Clock& clock)
    : max_parallel_(max_parallel), rate_per_minute_(rate_per_minute), clock_(clock) {
  if (max_parallel <= 0 || rate_per_minute <= 0) {
    throw PreconditionError("rate limiter bounds must be positive");
  }
}

RateLimiter::Permit::~Permit() {
  if (owner_ != nullptr) owner_->release();
}

RateLimiter::Permit RateLimiter::acquire() {
  using namespace std::chrono_literals;
  std::unique_lock lock(mutex_);
  slot_freed_.wait(lock, [&] { return in_flight_ < max_parallel_; });
  ++in_flight_;
  for (;;) {
    const auto now = clock_.now();
    while (!admitted_.empty() && admitted_.front() + 60s <= now) admitted_.pop_front();
    if (static_cast<int>(admitted_.size()) < rate_per_minute_) {
      admitted_.push_back(now);
      return Permit(this);
    }
    const auto wake = admitted_.front() + 60s;
    lock.unlock();
    clock_.sleep_until(wake);
    lock.lock();
  }
}

void RateLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    --in_flight_;
  }
  slot_freed_.notify_one();
}

// ---------------------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::ifstream in(dir_ / (key + ".json"), std::ios::binary);
  if (!in) return std::nullopt;
  try {
    auto doc = nlohmann::json::parse(in);
    return doc.at("response_text").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

void ResponseCache::put(const std::string& key, const ChatRequest& request,
                        const std::string& response_text) const {
  static std::atomic<std::uint64_t> counter{0};
  nlohmann::ordered_json doc;
  doc["request"] = canonical_request(request);
  doc["response_text"] = response_text;
  doc["timestamp"] = utc_timestamp();
  doc["backend_name"] = request.backend_name;
  const auto final_path = dir_ / (key + ".json");
  const auto temp_path =
      dir_ / fmt::format(".{}.tmp.{}.{}", key, static_cast<long>(::getpid()), counter++);
  {
    std::ofstream out(temp_path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write cache entry " + temp_path.string());
    out << doc.dump(2) << '\n';
    out.flush();
    if (!out) throw DataError("short write on cache entry " + temp_path.string());
  }
  std::filesystem::rename(temp_path, final_path);
}

// ---------------------------------------------------------------------------

ScriptedMock::ScriptedMock(const nlohmann::json& script) {
  try {
    if (script.contains("responses")) {
      for (const auto& [key, text] : script.at("responses").items()) {
        responses_[key] = text.get<std::string>();
      }
    }
    if (script.contains("rules")) {
      for (const auto& rule : script.at("rules")) {
        rules_.push_back({rule.value("contains", ""), rule.value("system_contains", ""),
                          rule.at("response").get<std::string>()});
      }
    }
    if (script.contains("sequence")) sequence_ = script.at("sequence").get<std::vector<std::string>>();
    if (script.contains("default") && !script.at("default").is_null()) {
      default_ = script.at("default").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed mock script: ") + e.what());
  }
}

std::unique_ptr<ScriptedMock> ScriptedMock::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open mock script " + path.string());
  try {
    return std::make_unique<ScriptedMock>(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(fmt::format("mock script {}: {}", path.string(), e.what()));
  }
}

std::string ScriptedMock::generate(const ChatRequest& request) {
  ++calls_;
  const std::string key = request_key(request);
  if (auto it = responses_.find(key); it != responses_.end()) return it->second;
  if (!rules_.empty() && !request.messages.empty()) {
    const std::string& last = request.messages.back().content;
    std::string_view system;
    if (request.messages.front().role == Role::system) system = request.messages.front().content;
    for (const auto& rule : rules_) {
      bool hit = last.find(rule.contains) != std::string::npos &&
                 system.find(rule.system_contains) != std::string_view::npos;
      if (hit) return rule.response;
    }
  }
  {
    std::lock_guard lock(mutex_);
    if (next_ < sequence_.size()) return sequence_[next_++];
  }
  if (default_) return *default_;
  throw BackendError(fmt::format("mock script has no entry for request {}", key));
}

// ---------------------------------------------------------------------------

HttpChatTransport::HttpChatTransport(BackendConfig config, std::unique_ptr<HttpPoster> poster,
                                     Clock& clock)
    : config_(std::move(config)), poster_(std::move(poster)), clock_(clock) {}

std::string HttpChatTransport::endpoint_url(const std::string& base_url) {
  std::string url = base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  constexpr std::string_view suffix = "/chat/completions";
  if (url.size() >= suffix.size() && url.compare(url.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return url;
  }
  return url + std::string(suffix);
}

nlohmann::ordered_json HttpChatTransport::wire_body(const ChatRequest& request) {
  nlohmann::ordered_json body;
  body["model"] = request.model_id;
  auto& messages = body["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  body["temperature"] = request.params.temperature;
  body["max_tokens"] = request.params.max_tokens;
  if (request.params.stop) body["stop"] = *request.params.stop;
  if (request.params.seed) body["seed"] = *request.params.seed;
  return body;
}

std::string HttpChatTransport::parse_completion(const std::string& body) {
  try {
    auto doc = nlohmann::json::parse(body);
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    if (content.is_null()) return {};
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("malformed completion response: ") + e.what());
  }
}

std::string HttpChatTransport::generate(const ChatRequest& request) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw BackendError(fmt::format("backend '{}': environment variable {} is not set", config_.name,
                                   config_.api_key_env));
  }
  const std::map<std::string, std::string> headers = {
      {"Authorization", std::string("Bearer ") + key},
      {"Content-Type", "application/json"},
  };
  const std::string url = endpoint_url(config_.base_url);
  const std::string body = wire_body(request).dump();
  const int attempts = config_.max_retries + 1;
  HttpReply reply;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    std::chrono::milliseconds backoff{0};
    if (attempt > 0) {
      std::uint64_t jitter;
      {
        std::lock_guard lock(mutex_);
        jitter_state_ ^= jitter_state_ << 13;
        jitter_state_ ^= jitter_state_ >> 7;
        jitter_state_ ^= jitter_state_ << 17;
        jitter = jitter_state_;
      }
      const auto base = config_.base_backoff.count() * (std::int64_t{1} << std::min(attempt - 1, 10));
      const auto spread = std::max<std::int64_t>(1, config_.base_backoff.count());
      backoff = std::chrono::milliseconds(base + static_cast<std::int64_t>(jitter % static_cast<std::uint64_t>(spread)));
      ++retries_;
      clock_.sleep_for(backoff);
    }
    reply = poster_->post(url, headers, body);
    {
      std::lock_guard lock(mutex_);
      log_.push_back({reply.status, backoff});
    }
    if (reply.status == 200) return parse_completion(reply.body);
    if (reply.status == 401 || reply.status == 403) {
      throw BackendError(fmt::format("backend '{}': authentication rejected (HTTP {})", config_.name,
                                     reply.status));
    }
    const bool retryable = reply.status == 0 || reply.status == 429 || reply.status >= 500;
    if (!retryable) {
      throw BackendError(fmt::format("backend '{}': HTTP {}: {}", config_.name, reply.status,
                                     reply.body.substr(0, 300)));
    }
  }
  throw BackendError(fmt::format("backend '{}': transport failure after {} attempts (last: {})",
                                 config_.name, attempts,
                                 reply.status == 0 ? reply.error : fmt::format("HTTP {}", reply.status)));
}

std::vector<HttpChatTransport::Attempt> HttpChatTransport::call_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

// ---------------------------------------------------------------------------

Gateway::Gateway(BackendConfig config, std::unique_ptr<ChatTransport> transport,
                 std::optional<std::filesystem::path> cache_dir, Clock& clock)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      limiter_(config_.max_parallel, config_.rate_per_minute, clock) {
  if (cache_dir) cache_.emplace(*cache_dir);
}

std::unique_ptr<Gateway> Gateway::create(const BackendConfig& config,
                                         std::optional<std::filesystem::path> cache_dir) {
  config.validate();
  std::unique_ptr<ChatTransport> transport;
  if (config.kind == BackendKind::scripted_mock) {
    transport = ScriptedMock::from_file(config.script_path);
  } else {
    transport = std::make_unique<HttpChatTransport>(config, make_httplib_poster());
  }
  return std::make_unique<Gateway>(config, std::move(transport), std::move(cache_dir));
}

std::string Gateway::complete(const std::vector<ChatMessage>& messages,
                              const GenerationParams& params) {
  if (messages.empty()) throw PreconditionError("complete() needs at least one message");
  params.validate();
  ChatRequest request{config_.name, config_.model_id, messages, params};
  const std::string key = request_key(request);
  if (cache_) {
    if (auto hit = cache_->get(key)) {
      ++cache_hits_;
      return *hit;
    }
  }
  std::string text;
  {
    auto permit = limiter_.acquire();
    ++network_calls_;
    text = transport_->generate(request);
  }
  if (cache_) cache_->put(key, request, text);
  return text;
}

}  // namespace bolt
