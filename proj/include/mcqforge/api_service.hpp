#pragma once

// HTTP/JSON facade over sessions, gates, quality reports, metrics and banks.
// `handle` is the transport-free core; `listen`/`start` wrap it in an
// HTTP/1.1 server.

#include "mcqforge/bank.hpp"
#include "mcqforge/error.hpp"
#include "mcqforge/pipeline.hpp"
#include "mcqforge/quality.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>

namespace mcqforge {

struct ApiConfig {
  std::optional<std::string> bearer_token;  // when set, every route but /health needs it
  GoverningPolicy policy = GoverningPolicy::deterministic_first;
  std::string evaluator_role = "evaluator";
  std::string feature_role = "feature_extractor";
  bool async_fanout = false;  // G2 closing decisions return 202 and fan out in the background
};

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string body;
};

int http_status(ErrorCode code);

class ApiService {
 public:
  ApiService(Pipeline& pipeline, BankStore& banks, ApiConfig config = {});
  ~ApiService();
  ApiService(const ApiService&) = delete;
  ApiService& operator=(const ApiService&) = delete;

  ApiResponse handle(const ApiRequest& request);

  // Binds and serves on a background thread; returns the bound port (pass 0
  // for an ephemeral one). Throws config on bind failure.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Blocks until stop().
  void listen(const std::string& host, int port);
  void stop();

  // Waits for background fan-outs started by async gate decisions.
  void drain();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mcqforge
