#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace bolt {

enum class Role { system, user, assistant };

std::string_view to_string(Role role);

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct GenerationParams {
  double temperature = 0.0;
  int max_tokens = 512;
  std::optional<std::vector<std::string>> stop;
  std::optional<std::int64_t> seed;

  void validate() const;  // throws PreconditionError
};

/// Defaults: 0.7 for simulation (diversity), 0.0 for classification (label stability).
GenerationParams simulation_params();
GenerationParams classification_params();

enum class BackendKind { http_chat, scripted_mock };

// Mocks are local; throttling them only slows tests down.
inline constexpr int kMockRatePerMinute = 1'000'000;

struct BackendConfig {
  std::string name;
  BackendKind kind = BackendKind::scripted_mock;
  std::string base_url;     // http_chat only
  std::string model_id;
  std::string api_key_env;  // http_chat only
  std::filesystem::path script_path;  // scripted_mock only
  int max_parallel = 1;
  int rate_per_minute = 60;
  int max_retries = 3;
  std::chrono::milliseconds base_backoff{500};

  void validate() const;  // throws DataError on kind-specific field mismatches
};

struct ChatRequest {
  std::string backend_name;
  std::string model_id;
  std::vector<ChatMessage> messages;
  GenerationParams params;
};

/// Canonical request form hashed into the cache key. Field order is fixed.
nlohmann::ordered_json canonical_request(const ChatRequest& request);

/// Lowercase hex SHA-256 of the compact canonical serialization.
std::string request_key(const ChatRequest& request);
std::string request_key(std::string_view backend_name, std::string_view model_id,
                        const std::vector<ChatMessage>& messages, const GenerationParams& params);

std::string sha256_hex(std::string_view data);

// ---------------------------------------------------------------------------
// Time

class Clock {
 public:
  using time_point = std::chrono::steady_clock::time_point;
  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_until(time_point when) = 0;
  void sleep_for(std::chrono::nanoseconds d) { sleep_until(now() + d); }
};

Clock& system_clock();

/// Caps in-flight calls at max_parallel and admissions at rate_per_minute
/// over any sliding 60 s window.
class RateLimiter {
 public:
  RateLimiter(int max_parallel, int rate_per_minute, Clock& clock);

  class Permit {
   public:
    Permit(Permit&& other) noexcept : owner_(std::exchange(other.owner_, nullptr)) {}
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;
    Permit& operator=(Permit&&) = delete;
    ~Permit();

   private:
    friend class RateLimiter;
    explicit Permit(RateLimiter* owner) : owner_(owner) {}
    RateLimiter* owner_;
  };

  Permit acquire();

 private:
  void release();

  int max_parallel_;
  int rate_per_minute_;
  Clock& clock_;
  std::mutex mutex_;
  std::condition_variable slot_freed_;
  int in_flight_ = 0;
  std::deque<Clock::time_point> admitted_;
};

// ---------------------------------------------------------------------------
// Cache

/// Directory of `<request_key>.json` files, written via temp file + rename.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const ChatRequest& request, const std::string& response_text) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Transports

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  /// Performs one logical completion (including any transport retries).
  virtual std::string generate(const ChatRequest& request) = 0;
};

/// Deterministic mock driven by a JSON script:
///   {"responses": {"<request_key>": "text"},
///    "rules": [{"contains": "...", "system_contains": "...", "response": "..."}],
///    "sequence": ["...", ...],
///    "default": "..."}
/// Lookup order: exact key, first matching rule (substring tests on the last
/// message and on the system message), next sequence entry, default.
class ScriptedMock : public ChatTransport {
 public:
  explicit ScriptedMock(const nlohmann::json& script);
  static std::unique_ptr<ScriptedMock> from_file(const std::filesystem::path& path);

  std::string generate(const ChatRequest& request) override;
  std::size_t calls() const { return calls_; }

 private:
  struct Rule {
    std::string contains;
    std::string system_contains;
    std::string response;
  };
  std::map<std::string, std::string> responses_;
  std::vector<Rule> rules_;
  std::vector<std::string> sequence_;
  std::optional<std::string> default_;
  std::mutex mutex_;
  std::size_t next_ = 0;
  std::atomic<std::size_t> calls_{0};
};

/// Wraps a callable; handy for tests and custom adapters.
class CallbackTransport : public ChatTransport {
 public:
  using Fn = std::function<std::string(const ChatRequest&)>;
  explicit CallbackTransport(Fn fn) : fn_(std::move(fn)) {}
  std::string generate(const ChatRequest& request) override { return fn_(request); }

 private:
  Fn fn_;
};

struct HttpReply {
  int status = 0;  // 0 when the connection itself failed
  std::string body;
  std::string error;
};

class HttpPoster {
 public:
  virtual ~HttpPoster() = default;
  virtual HttpReply post(const std::string& url, const std::map<std::string, std::string>& headers,
                         const std::string& body) = 0;
};

/// cpp-httplib backed poster (https supported through OpenSSL).
std::unique_ptr<HttpPoster> make_httplib_poster(std::chrono::seconds timeout = std::chrono::seconds(120));

/// OpenAI-style chat-completion client. Retries HTTP 429, 5xx and connection
/// failures with exponential backoff plus jitter; 401/403 fail immediately.
class HttpChatTransport : public ChatTransport {
 public:
  struct Attempt {
    int status = 0;
    std::chrono::milliseconds backoff{0};
  };

  HttpChatTransport(BackendConfig config, std::unique_ptr<HttpPoster> poster,
                    Clock& clock = system_clock());

  std::string generate(const ChatRequest& request) override;

  static std::string endpoint_url(const std::string& base_url);
  static nlohmann::ordered_json wire_body(const ChatRequest& request);
  static std::string parse_completion(const std::string& body);

  std::vector<Attempt> call_log() const;
  std::size_t retries() const { return retries_; }

 private:
  BackendConfig config_;
  std::unique_ptr<HttpPoster> poster_;
  Clock& clock_;
  mutable std::mutex mutex_;
  std::vector<Attempt> log_;
  std::uint64_t jitter_state_ = 0x2545f4914f6cdd1dULL;
  std::atomic<std::size_t> retries_{0};
};

// ---------------------------------------------------------------------------
// Gateway

struct GatewayStats {
  std::size_t network_calls = 0;
  std::size_t cache_hits = 0;
};

/// Uniform completion entry point: cache lookup, rate limiting, transport.
/// Safe for concurrent use.
class Gateway {
 public:
  Gateway(BackendConfig config, std::unique_ptr<ChatTransport> transport,
          std::optional<std::filesystem::path> cache_dir = std::nullopt,
          Clock& clock = system_clock());

  /// Builds the transport that matches config.kind.
  static std::unique_ptr<Gateway> create(const BackendConfig& config,
                                         std::optional<std::filesystem::path> cache_dir);

  std::string complete(const std::vector<ChatMessage>& messages, const GenerationParams& params);

  const BackendConfig& config() const { return config_; }
  ChatTransport& transport() { return *transport_; }
  GatewayStats stats() const { return {network_calls_.load(), cache_hits_.load()}; }

 private:
  BackendConfig config_;
  std::unique_ptr<ChatTransport> transport_;
  std::optional<ResponseCache> cache_;
  RateLimiter limiter_;
  std::atomic<std::size_t> network_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

}  // namespace bolt
