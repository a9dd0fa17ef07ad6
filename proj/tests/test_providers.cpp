#include "mcqforge/error.hpp"
#include "mcqforge/providers.hpp"
#include "mcqforge/serialization.hpp"
#include "support.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <thread>

using namespace mcqforge;
using namespace std::chrono_literals;

namespace {

class Flaky : public Backend {
 public:
  explicit Flaky(int failures) : failures_(failures) {}
  std::string complete(std::string_view, const std::string& prompt) override {
    ++calls;
    if (calls <= failures_) throw TransportError("connection refused");
    return "ok:" + prompt;
  }
  int calls = 0;

 private:
  int failures_;
};

class Recorder : public Backend {
 public:
  std::string complete(std::string_view, const std::string& prompt) override {
    seen.push_back(prompt);
    return "r" + std::to_string(seen.size());
  }
  std::vector<std::string> seen;
};

class Broken : public Backend {
 public:
  std::string complete(std::string_view, const std::string&) override {
    ++calls;
    throw std::runtime_error("malformed payload");
  }
  int calls = 0;
};

struct Harness {
  TranscriptLog log;
  ProviderHub hub{ProviderConfig::all_mock(), log};
  std::vector<std::chrono::milliseconds> sleeps;
  Harness() {
    hub.set_sleeper([this](std::chrono::milliseconds d) { sleeps.push_back(d); });
  }
};

}  // namespace

TEST(Retry, BacksOffOneTwoFourThenSucceeds) {
  Harness h;
  auto flaky = std::make_shared<Flaky>(3);
  h.hub.set_backend("evaluator", flaky);
  const auto r = h.hub.dispatch("evaluator", "hello");
  EXPECT_EQ(r.response, "ok:hello");
  EXPECT_EQ(flaky->calls, 4);
  ASSERT_EQ(h.sleeps.size(), 3u);
  EXPECT_EQ(h.sleeps[0], 1000ms);
  EXPECT_EQ(h.sleeps[1], 2000ms);
  EXPECT_EQ(h.sleeps[2], 4000ms);
  EXPECT_EQ(r.entry.retry_count, 3);
  EXPECT_EQ(h.log.size(), 1u);
}

TEST(Retry, ExhaustionIsProviderFailureAndLogsNothing) {
  Harness h;
  auto flaky = std::make_shared<Flaky>(100);
  h.hub.set_backend("evaluator", flaky);
  try {
    h.hub.dispatch("evaluator", "hello");
    FAIL() << "expected provider_failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::provider_failure);
  }
  EXPECT_EQ(flaky->calls, 4);
  EXPECT_EQ(h.sleeps.size(), 3u);
  EXPECT_EQ(h.log.size(), 0u);
}

TEST(Retry, NonTransportErrorsAreNotRetried) {
  Harness h;
  auto broken = std::make_shared<Broken>();
  h.hub.set_backend("evaluator", broken);
  try {
    h.hub.dispatch("evaluator", "hello");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::provider_failure);
  }
  EXPECT_EQ(broken->calls, 1);
  EXPECT_TRUE(h.sleeps.empty());
}

TEST(Dispatch, UnconfiguredRoleAndEmptyPrompt) {
  TranscriptLog log;
  ProviderConfig cfg;
  cfg.roles["evaluator"] = BackendConfig{};
  ProviderHub hub(cfg, log);
  try {
    hub.dispatch("item_writer_1", "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unconfigured_role);
  }
  try {
    hub.dispatch("evaluator", "");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::validation);
  }
  EXPECT_THROW(hub.set_backend("stranger", std::make_shared<MockBackend>()), Error);
}

TEST(Dispatch, ResponseSizeCap) {
  TranscriptLog log;
  auto cfg = ProviderConfig::all_mock();
  cfg.max_response_bytes = 8;
  ProviderHub hub(cfg, log);
  hub.mock().load(std::map<std::string, std::string>{{"long", "0123456789"}});
  try {
    hub.dispatch("evaluator", "long");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::provider_failure);
  }
}

TEST(Transcripts, RecordPromptContextAndResponse) {
  Harness h;
  h.hub.mock().load(std::map<std::string, std::string>{{"Summarize", "summary"}});
  const auto r = h.hub.dispatch("evaluator", "Summarize this", std::string("fragment text"));
  EXPECT_EQ(r.response, "summary");
  const auto e = h.log.find(r.entry.id);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->prompt, "Summarize this");
  EXPECT_EQ(e->context, std::optional<std::string>("fragment text"));
  EXPECT_EQ(e->role, "evaluator");
  EXPECT_EQ(h.log.select({r.entry.id}).size(), 1u);
}

TEST(Transcripts, PromptsKeptByteForByte) {
  Harness h;
  auto rec = std::make_shared<Recorder>();
  h.hub.set_backend("evaluator", rec);
  std::mt19937_64 rng(99);
  const std::vector<std::string> pieces = {" ",   "  ",  "\t", "\r\n", "\n\n", "word", "\xE2\x80\x94",
                                           "\xC2\xB1", "{x}", "\"q\"", "\\",   "MCQ 1:", "\xF0\x9F\x8C\xB1"};
  for (int k = 0; k < 300; ++k) {
    std::string prompt;
    const auto n = 1 + rng() % 12;
    for (std::size_t i = 0; i < n; ++i) prompt += pieces[rng() % pieces.size()];
    if (prompt.find_first_not_of(" \t\r\n") == std::string::npos) prompt += "x";
    std::optional<std::string> ctx;
    if (k % 3 == 0) ctx = "  fragment\r\n" + std::to_string(k) + " ";
    const auto r = h.hub.dispatch("evaluator", prompt, ctx);
    const auto e = h.log.find(r.entry.id);
    ASSERT_TRUE(e);
    ASSERT_EQ(e->prompt, prompt) << k;
    ASSERT_EQ(e->context, ctx) << k;
    ASSERT_EQ(rec->seen.back(), compose_prompt(prompt, ctx)) << k;
    ASSERT_EQ(e->response, r.response);
  }
}

TEST(Mock, SameSessionTwiceGivesSameResponses) {
  auto run = [] {
    TranscriptLog log;
    ProviderHub hub(ProviderConfig::all_mock(), log);
    testsupport::load_session_fixtures(hub);
    std::vector<std::string> out;
    for (const auto& f : testsupport::session_fixtures())
      for (const auto* suffix : {"", " extra words", "\nQuestion 2"})
        out.push_back(hub.dispatch(f.role.value_or("evaluator"), f.key + suffix).response);
    out.push_back(hub.dispatch("evaluator", "a prompt no fixture matches").response);
    return out;
  };
  const auto first = run();
  EXPECT_EQ(first, run());
  EXPECT_EQ(first.size(), 19u);
}

TEST(Transcripts, SinkWritesOneLinePerEntry) {
  const auto path = std::filesystem::temp_directory_path() / "mcqforge_sink_test.jsonl";
  std::filesystem::remove(path);
  TranscriptLog log("tr", path.string());
  ProviderHub hub(ProviderConfig::all_mock(), log);
  hub.dispatch("evaluator", "a");
  hub.dispatch("evaluator", "b");
  std::ifstream in(path);
  int lines = 0;
  for (std::string line; std::getline(in, line);) {
    const auto j = json::parse(line);
    EXPECT_EQ(j.at("role"), "evaluator");
    ++lines;
  }
  EXPECT_EQ(lines, 2);
  std::filesystem::remove(path);
}

TEST(Transcripts, IdsAreUniqueUnderConcurrentAppends) {
  TranscriptLog log;
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&] {
      for (int i = 0; i < 100; ++i) log.append(TranscriptEntry{});
    });
  for (auto& t : threads) t.join();
  std::set<std::string> ids;
  for (const auto& e : log.entries()) ids.insert(e.id);
  EXPECT_EQ(ids.size(), 800u);
}

TEST(Mock, ResolutionOrder) {
  MockBackend m;
  m.load({{std::nullopt, "Present", "unscoped prefix"},
          {std::string("item_writer_2"), "Present", "scoped prefix"},
          {std::nullopt, "Present the Question", "longer unscoped"},
          {std::nullopt, "exact prompt", "exact"}});
  EXPECT_EQ(m.complete("item_writer_2", "Present the Question 2"), "scoped prefix");
  EXPECT_EQ(m.complete("item_writer_1", "Present the Question 2"), "longer unscoped");
  EXPECT_EQ(m.complete("item_writer_1", "Present it"), "unscoped prefix");
  EXPECT_EQ(m.complete("evaluator", "exact prompt"), "exact");
  const auto stub = m.complete("evaluator", "unknown");
  EXPECT_EQ(stub.rfind(std::string(kMockStubLabel), 0), 0u);
  EXPECT_EQ(stub, m.complete("evaluator", "unknown"));
}

TEST(Mock, HashKeysAndContextPreamble) {
  MockBackend m;
  const std::string prompt = "What are the main concepts?";
  m.load({{std::nullopt, prompt_hash_key(compose_prompt(prompt, std::string("ctx"))), "by hash"},
          {std::nullopt, "What are", "by prefix"}});
  EXPECT_EQ(m.complete("evaluator", compose_prompt(prompt, std::string("ctx"))), "by hash");
  EXPECT_EQ(m.complete("evaluator", compose_prompt(prompt, std::string("other"))), "by prefix");
  EXPECT_THROW(m.load({{std::nullopt, "k", "1"}, {std::nullopt, "k", "2"}}), Error);
}

TEST(Mock, SessionFixtureFileLoads) {
  MockBackend m;
  m.load_file(testsupport::fixture_path("photosynthesis_session.json"));
  EXPECT_EQ(m.size(), 6u);
  EXPECT_NE(m.complete("item_writer_4", "Present the Question below as an MCQ").find("Heat cycling"),
            std::string::npos);
}

TEST(Config, CredentialsOnlyByEnvironmentName) {
  EXPECT_THROW(json::parse(R"({"kind":"live","base_url":"http://x","api_key":"sk-1"})").get<BackendConfig>(),
               Error);
  const auto cfg = load_provider_config(testsupport::fixture_path("providers.live.example.json"));
  EXPECT_EQ(cfg.roles.at("evaluator").credentials_env, "MCQFORGE_LLM_KEY");
  const auto dumped = json(cfg).dump();
  EXPECT_EQ(dumped.find("sk-"), std::string::npos);
  EXPECT_EQ(cfg.retry.max_retries, 3);
}

TEST(HttpBackend, SendsBearerFromEnvAndRetries503) {
  httplib::Server srv;
  std::atomic<int> hits{0};
  std::string auth;
  srv.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (++hits == 1) {
      res.status = 503;
      return;
    }
    auth = req.get_header_value("Authorization");
    const auto body = json::parse(req.body);
    const std::string content = "echo:" + body["messages"][0]["content"].get<std::string>();
    res.set_content(json{{"choices", {{{"message", {{"content", content}}}}}}}.dump(), "application/json");
  });
  const int port = srv.bind_to_any_port("127.0.0.1");
  std::thread t([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();

  ::setenv("MCQFORGE_TEST_KEY", "secret-value", 1);
  TranscriptLog log;
  ProviderConfig cfg;
  cfg.roles["evaluator"] = BackendConfig{BackendKind::live, "http://127.0.0.1:" + std::to_string(port) + "/v1",
                                         "test-model", "MCQFORGE_TEST_KEY", 2000};
  ProviderHub hub(cfg, log);
  hub.set_sleeper([](auto) {});
  const auto r = hub.dispatch("evaluator", "ping");
  EXPECT_EQ(r.response, "echo:ping");
  EXPECT_EQ(r.entry.retry_count, 1);
  EXPECT_EQ(auth, "Bearer secret-value");
  // The credential never reaches the transcript.
  EXPECT_EQ(json(log.entries()).dump().find("secret-value"), std::string::npos);

  ::unsetenv("MCQFORGE_TEST_KEY");
  try {
    hub.dispatch("evaluator", "ping");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::config);
  }
  srv.stop();
  t.join();
}

TEST(HttpBackend, ConnectionRefusedExhaustsRetries) {
  TranscriptLog log;
  ProviderConfig cfg;
  cfg.roles["evaluator"] = BackendConfig{BackendKind::live, "http://127.0.0.1:1", "m", "", 500};
  ProviderHub hub(cfg, log);
  int sleeps = 0;
  hub.set_sleeper([&](auto) { ++sleeps; });
  try {
    hub.dispatch("evaluator", "ping");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::provider_failure);
  }
  EXPECT_EQ(sleeps, 3);
}
