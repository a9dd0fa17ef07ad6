#include "mcqforge/error.hpp"
#include "mcqforge/providers.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cstdlib>

namespace mcqforge {

HttpChatBackend::HttpChatBackend(std::string base_url, std::string model,
                                 std::string credentials_env, int timeout_ms)
    : base_url_(std::move(base_url)),
      model_(std::move(model)),
      credentials_env_(std::move(credentials_env)),
      timeout_ms_(timeout_ms) {
  if (base_url_.empty()) throw Error(ErrorCode::config, "live backend requires base_url");
}

std::string HttpChatBackend::complete(std::string_view /*role*/, const std::string& prompt) {
  // Split "scheme://host[:port]/prefix" into the client origin and path prefix.
  const auto scheme_end = base_url_.find("://");
  const auto path_start =
      base_url_.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string origin = base_url_.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : base_url_.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Headers headers;
  if (!credentials_env_.empty()) {
    const char* key = std::getenv(credentials_env_.c_str());
    if (!key || !*key)
      throw Error(ErrorCode::config, "credentials variable is not set: " + credentials_env_);
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  nlohmann::json body = {{"model", model_},
                         {"messages", {{{"role", "user"}, {"content", prompt}}}}};

  httplib::Client cli(origin);
  const auto timeout = std::chrono::milliseconds(timeout_ms_);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);

  auto res = cli.Post(prefix + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) throw TransportError("transport error: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw TransportError("backend status " + std::to_string(res->status));
  if (res->status != 200)
    throw Error(ErrorCode::provider_failure, "backend status " + std::to_string(res->status),
                res->body.substr(0, 512));
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::provider_failure, "unexpected backend response shape", e.what());
  }
}

}  // namespace mcqforge
