#include <httplib.h>

#include "bolt/llm_gateway.hpp"

namespace bolt {

namespace {

class HttplibPoster : public HttpPoster {
 public:
  explicit HttplibPoster(std::chrono::seconds timeout) : timeout_(timeout) {}

  HttpReply post(const std::string& url, const std::map<std::string, std::string>& headers,
                 const std::string& body) override {
    // Split "scheme://host[:port]" from the path.
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers h;
    for (const auto& [k, v] : headers) {
      if (k != "Content-Type") h.emplace(k, v);
    }
    auto result = client.Post(path, h, body, "application/json");
    if (!result) return {0, {}, httplib::to_string(result.error())};
    return {result->status, result->body, {}};
  }

 private:
  std::chrono::seconds timeout_;
};

}  // namespace

std::unique_ptr<HttpPoster> make_httplib_poster(std::chrono::seconds timeout) {
  return std::make_unique<HttplibPoster>(timeout);
}

}  // namespace bolt
