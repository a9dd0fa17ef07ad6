#include "mcqforge/providers.hpp"

#include "mcqforge/error.hpp"
#include "mcqforge/serialization.hpp"

#include <cstdio>
#include <fstream>
#include <thread>

namespace mcqforge {

namespace roles {

std::string item_writer(int n) { return "item_writer_" + std::to_string(n); }

bool is_known(std::string_view name) {
  if (name == concept_mapper || name == question_writer || name == evaluator ||
      name == feature_extractor)
    return true;
  constexpr std::string_view prefix = "item_writer_";
  if (name.substr(0, prefix.size()) != prefix || name.size() == prefix.size()) return false;
  for (char c : name.substr(prefix.size()))
    if (c < '0' || c > '9') return false;
  return name.substr(prefix.size()) != "0";
}

std::vector<std::string> defaults(int item_writers) {
  std::vector<std::string> out{std::string(concept_mapper), std::string(question_writer)};
  for (int i = 1; i <= item_writers; ++i) out.push_back(item_writer(i));
  out.emplace_back(evaluator);
  out.emplace_back(feature_extractor);
  return out;
}

}  // namespace roles

std::string prompt_hash_key(std::string_view prompt) {
  // FNV-1a 64
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : prompt) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "h:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void MockBackend::load(std::vector<MockFixture> fixtures) {
  for (std::size_t i = 0; i < fixtures.size(); ++i)
    for (std::size_t j = i + 1; j < fixtures.size(); ++j)
      if (fixtures[i].key == fixtures[j].key && fixtures[i].role == fixtures[j].role)
        throw Error(ErrorCode::validation, "duplicate mock fixture key", fixtures[i].key);
  std::lock_guard lk(mu_);
  fixtures_ = std::move(fixtures);
}

void MockBackend::load(const std::map<std::string, std::string>& fixtures) {
  std::vector<MockFixture> out;
  for (const auto& [k, v] : fixtures) out.push_back({std::nullopt, k, v});
  load(std::move(out));
}

void MockBackend::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config, "cannot open fixture file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, "malformed fixture file: " + path, e.what());
  }
  std::vector<MockFixture> fixtures;
  if (j.is_object() && j.contains("fixtures")) j = j["fixtures"];
  if (j.is_array()) {
    for (const auto& f : j) {
      MockFixture fx;
      if (f.contains("role") && !f["role"].is_null()) fx.role = f["role"].get<std::string>();
      fx.key = f.at("key").get<std::string>();
      fx.response = f.at("response").get<std::string>();
      fixtures.push_back(std::move(fx));
    }
  } else if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      fixtures.push_back({std::nullopt, it.key(), it.value().get<std::string>()});
  } else {
    throw Error(ErrorCode::config, "fixture file must hold an array or object: " + path);
  }
  load(std::move(fixtures));
}

std::size_t MockBackend::size() const {
  std::lock_guard lk(mu_);
  return fixtures_.size();
}

std::string MockBackend::complete(std::string_view role, const std::string& prompt) {
  std::lock_guard lk(mu_);
  const auto hash = prompt_hash_key(prompt);
  for (bool scoped : {true, false}) {
    auto applies = [&](const MockFixture& f) {
      return scoped ? (f.role && *f.role == role) : !f.role.has_value();
    };
    for (const auto& f : fixtures_)
      if (applies(f) && (f.key == prompt || f.key == hash)) return f.response;
    // Prefix keys see the instruction, not the context preamble.
    std::string_view body = prompt;
    if (body.rfind("<<<CONTEXT\n", 0) == 0) {
      constexpr std::string_view close = "\n>>>CONTEXT\n\n";
      const auto end = body.find(close);
      if (end != std::string_view::npos) body.remove_prefix(end + close.size());
    }
    const MockFixture* best = nullptr;
    for (const auto& f : fixtures_) {
      if (!applies(f) || f.key.empty() || f.key.size() > body.size()) continue;
      if (body.compare(0, f.key.size(), f.key) != 0) continue;
      if (!best || f.key.size() > best->key.size()) best = &f;
    }
    if (best) return best->response;
  }
  return std::string(kMockStubLabel) + " role=" + std::string(role) + " prompt=" + hash;
}

ProviderConfig ProviderConfig::all_mock(int item_writers) {
  ProviderConfig cfg;
  for (const auto& r : roles::defaults(item_writers)) cfg.roles[r] = BackendConfig{};
  return cfg;
}

ProviderConfig load_provider_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config, "cannot open provider config: " + path);
  try {
    nlohmann::json j;
    in >> j;
    return j.get<ProviderConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, "malformed provider config: " + path, e.what());
  }
}

TranscriptLog::TranscriptLog(std::string id_prefix, std::optional<std::string> sink)
    : prefix_(std::move(id_prefix)), sink_(std::move(sink)) {}

std::string TranscriptLog::append(TranscriptEntry entry) {
  std::lock_guard lk(mu_);
  char buf[32];
  std::snprintf(buf, sizeof buf, "-%06zu", entries_.size() + 1);
  entry.id = prefix_ + buf;
  if (sink_) {
    std::ofstream out(*sink_, std::ios::app);
    out << nlohmann::json(entry).dump() << '\n';
  }
  entries_.push_back(std::move(entry));
  return entries_.back().id;
}

std::vector<TranscriptEntry> TranscriptLog::entries() const {
  std::lock_guard lk(mu_);
  return entries_;
}

std::optional<TranscriptEntry> TranscriptLog::find(const std::string& id) const {
  std::lock_guard lk(mu_);
  for (const auto& e : entries_)
    if (e.id == id) return e;
  return std::nullopt;
}

std::vector<TranscriptEntry> TranscriptLog::select(const std::vector<std::string>& ids) const {
  std::lock_guard lk(mu_);
  std::vector<TranscriptEntry> out;
  for (const auto& id : ids)
    for (const auto& e : entries_)
      if (e.id == id) out.push_back(e);
  return out;
}

std::size_t TranscriptLog::size() const {
  std::lock_guard lk(mu_);
  return entries_.size();
}

std::string compose_prompt(const std::string& prompt, const std::optional<std::string>& context) {
  if (!context || context->empty()) return prompt;
  return "<<<CONTEXT\n" + *context + "\n>>>CONTEXT\n\n" + prompt;
}

ProviderHub::ProviderHub(ProviderConfig config, TranscriptLog& log)
    : config_(std::move(config)),
      log_(log),
      mock_(std::make_shared<MockBackend>()),
      sleep_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  if (config_.mock_fixtures) mock_->load_file(*config_.mock_fixtures);
  for (const auto& [role, bc] : config_.roles) {
    if (!roles::is_known(role)) throw Error(ErrorCode::config, "unknown provider role: " + role);
    if (bc.kind == BackendKind::mock)
      backends_[role] = mock_;
    else
      backends_[role] = std::make_shared<HttpChatBackend>(bc.base_url, bc.model_name,
                                                          bc.credentials_env, bc.timeout_ms);
  }
}

void ProviderHub::set_backend(const std::string& role, std::shared_ptr<Backend> backend) {
  if (!roles::is_known(role)) throw Error(ErrorCode::config, "unknown provider role: " + role);
  backends_[role] = std::move(backend);
}

bool ProviderHub::has_role(std::string_view role) const { return backends_.count(role) > 0; }

std::vector<std::string> ProviderHub::role_names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : backends_) out.push_back(name);
  return out;
}

DispatchResult ProviderHub::dispatch(const std::string& role, const std::string& prompt,
                                     const std::optional<std::string>& context) {
  if (prompt.empty()) throw Error(ErrorCode::validation, "prompt must be non-empty");
  const auto it = backends_.find(role);
  if (it == backends_.end())
    throw Error(ErrorCode::unconfigured_role, "role is not configured: " + role);

  const std::string composed = compose_prompt(prompt, context);
  const auto started = std::chrono::steady_clock::now();
  auto delay = config_.retry.initial_backoff;
  int retries = 0;
  std::string response;
  for (;;) {
    try {
      response = it->second->complete(role, composed);
      break;
    } catch (const TransportError& e) {
      if (retries >= config_.retry.max_retries)
        throw Error(ErrorCode::provider_failure,
                    "provider retries exhausted for role " + role, e.what());
      sleep_(delay);
      delay = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(delay.count()) * config_.retry.multiplier));
      ++retries;
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::provider_failure, "provider error for role " + role, e.what());
    }
  }
  if (response.size() > config_.max_response_bytes)
    throw Error(ErrorCode::provider_failure, "response exceeds size cap for role " + role,
                std::to_string(response.size()) + " bytes");

  TranscriptEntry entry;
  entry.role = role;
  entry.prompt = prompt;
  entry.context = context;
  entry.response = response;
  entry.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - started)
                         .count();
  entry.timestamp = now();
  entry.retry_count = retries;
  entry.id = log_.append(entry);
  return {std::move(response), std::move(entry)};
}

}  // namespace mcqforge
