#pragma once

// Text-generation providers addressed by role, with retries, transcript
// logging and a deterministic fixture-driven mock.

#include "mcqforge/text.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mcqforge {

namespace roles {
inline constexpr std::string_view concept_mapper = "concept_mapper";
inline constexpr std::string_view question_writer = "question_writer";
inline constexpr std::string_view evaluator = "evaluator";
inline constexpr std::string_view feature_extractor = "feature_extractor";
std::string item_writer(int n);  // "item_writer_<n>", 1-based

bool is_known(std::string_view name);
std::vector<std::string> defaults(int item_writers = 4);
}  // namespace roles

// Thrown by backends for failures worth retrying (connection refused,
// timeouts, 5xx). Anything else propagates immediately.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(std::string_view role, const std::string& prompt) = 0;
};

struct MockFixture {
  std::optional<std::string> role;  // scoped fixtures win over unscoped ones
  std::string key;
  std::string response;
};

// Stable short hash of a prompt; fixtures may be keyed by it.
std::string prompt_hash_key(std::string_view prompt);

inline constexpr std::string_view kMockStubLabel = "[mock stub]";

class MockBackend final : public Backend {
 public:
  // Replaces the fixture set. Throws on a repeated (role, key) pair.
  void load(std::vector<MockFixture> fixtures);
  void load(const std::map<std::string, std::string>& fixtures);
  void load_file(const std::string& path);

  // Resolution order: exact key (or hash key), then longest key that prefixes
  // the prompt, role-scoped before unscoped; otherwise a labelled stub.
  std::string complete(std::string_view role, const std::string& prompt) override;

  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<MockFixture> fixtures_;
};

// Client for the common /chat/completions JSON protocol.
class HttpChatBackend final : public Backend {
 public:
  HttpChatBackend(std::string base_url, std::string model, std::string credentials_env,
                  int timeout_ms);
  std::string complete(std::string_view role, const std::string& prompt) override;

 private:
  std::string base_url_;
  std::string model_;
  std::string credentials_env_;
  int timeout_ms_;
};

enum class BackendKind { live, mock };

struct BackendConfig {
  BackendKind kind = BackendKind::mock;
  std::string base_url;
  std::string model_name;
  std::string credentials_env;
  int timeout_ms = 60000;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
};

struct ProviderConfig {
  std::map<std::string, BackendConfig> roles;
  RetryPolicy retry;
  std::size_t max_response_bytes = 256 * 1024;
  std::optional<std::string> mock_fixtures;  // fixture file for mock roles

  static ProviderConfig all_mock(int item_writers = 4);
};

ProviderConfig load_provider_config(const std::string& path);

struct TranscriptEntry {
  std::string id;
  std::string role;
  std::string prompt;
  std::optional<std::string> context;
  std::string response;
  std::int64_t latency_ms = 0;
  Timestamp timestamp{};
  int retry_count = 0;
};

// Append-only; writes are serialized. With a sink path every entry is also
// appended to a line-delimited JSON file.
class TranscriptLog {
 public:
  explicit TranscriptLog(std::string id_prefix = "tr", std::optional<std::string> sink = {});

  std::string append(TranscriptEntry entry);
  std::vector<TranscriptEntry> entries() const;
  std::optional<TranscriptEntry> find(const std::string& id) const;
  std::vector<TranscriptEntry> select(const std::vector<std::string>& ids) const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::string prefix_;
  std::optional<std::string> sink_;
  std::vector<TranscriptEntry> entries_;
};

struct DispatchResult {
  std::string response;
  TranscriptEntry entry;
};

// Context (e.g. a textbook fragment) travels as a delimited preamble block.
std::string compose_prompt(const std::string& prompt, const std::optional<std::string>& context);

class ProviderHub {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  ProviderHub(ProviderConfig config, TranscriptLog& log);

  // Injects a backend for one role, replacing whatever the config built.
  void set_backend(const std::string& role, std::shared_ptr<Backend> backend);
  void set_sleeper(Sleeper sleeper) { sleep_ = std::move(sleeper); }

  MockBackend& mock() { return *mock_; }
  bool has_role(std::string_view role) const;
  std::vector<std::string> role_names() const;
  const ProviderConfig& config() const { return config_; }
  TranscriptLog& transcripts() { return log_; }

  DispatchResult dispatch(const std::string& role, const std::string& prompt,
                          const std::optional<std::string>& context = std::nullopt);

 private:
  ProviderConfig config_;
  TranscriptLog& log_;
  std::shared_ptr<MockBackend> mock_;
  std::map<std::string, std::shared_ptr<Backend>, std::less<>> backends_;
  Sleeper sleep_;
};

}  // namespace mcqforge
