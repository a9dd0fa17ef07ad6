// HTTP service entry point.

#include "mcqforge/api_service.hpp"
#include "mcqforge/error.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>

using namespace mcqforge;
namespace fs = std::filesystem;

namespace {
ApiService* g_service = nullptr;
void on_signal(int) {
  if (g_service) g_service->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mcqforge-server"};
  std::string config, templates, data_dir, transcripts, host = "127.0.0.1", policy = "deterministic_first";
  std::string token_env = "MCQFORGE_API_TOKEN";
  int port = 8080;
  bool mock = false;
  app.add_option("--config", config, "provider config JSON (all roles mocked when omitted)");
  app.add_option("--templates", templates, "prompt template directory");
  app.add_option("--data-dir", data_dir, "bank persistence directory");
  app.add_option("--transcripts", transcripts, "transcript JSONL sink");
  app.add_option("--host", host);
  app.add_option("--port", port);
  app.add_option("--policy", policy, "deterministic_first | human_overrides");
  app.add_option("--token-env", token_env, "environment variable holding the bearer token");
  app.add_flag("--mock", mock, "force every role onto the fixture mock");
  CLI11_PARSE(app, argc, argv);

  try {
    ProviderConfig cfg = config.empty() ? ProviderConfig::all_mock() : load_provider_config(config);
    if (cfg.mock_fixtures && fs::path(*cfg.mock_fixtures).is_relative() && !config.empty())
      cfg.mock_fixtures = (fs::path(config).parent_path() / *cfg.mock_fixtures).string();
    if (mock)
      for (auto& [_, bc] : cfg.roles) bc.kind = BackendKind::mock;

    TranscriptLog log("tr", transcripts.empty() ? std::nullopt : std::optional<std::string>(transcripts));
    ProviderHub hub(cfg, log);
    Pipeline pipeline(hub, templates.empty() ? PromptTemplates::defaults()
                                             : PromptTemplates::load_dir(templates));
    if (!data_dir.empty()) fs::create_directories(data_dir);
    BankStore banks(data_dir.empty() ? std::nullopt : std::optional<std::string>(data_dir));

    ApiConfig api;
    api.policy = governing_policy_from_string(policy);
    if (const char* t = std::getenv(token_env.c_str()); t && *t) api.bearer_token = t;
    ApiService service(pipeline, banks, api);
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "listening on " << host << ":" << port
              << (api.bearer_token ? " (bearer auth on)" : " (no auth)") << "\n";
    service.listen(host, port);
    service.drain();
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 2;
  }
  return 0;
}
