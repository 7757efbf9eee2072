#pragma once

#include <memory>
#include <optional>
#include <string>

#include "atgen/extract.hpp"
#include "atgen/gateway.hpp"
#include "atgen/page.hpp"
#include "atgen/pipeline.hpp"
#include "atgen/prompt.hpp"
#include "atgen/story_source.hpp"

namespace atgen::config {

enum class BackendMode { replay, live, record };
BackendMode backend_mode_from_string(std::string_view s);

struct Config {
  BackendMode backend = BackendMode::replay;
  std::string endpoint;  // chat-completions URL for live and record modes
  std::string model_id = "gpt-4-1106-preview";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string auth_header = "Authorization";
  gateway::CostRates rates{0.01, 0.03, "EUR"};
  gateway::CompletionParams params;
  std::string cassette;

  std::string template_dir;
  std::string dialect_profile;
  std::string product_context;

  // Issues resolve through the tracker when one is configured, otherwise
  // through `<stories_dir>/<KEY>/`.
  std::optional<stories::TrackerConfig> tracker;
  std::string tracker_user_env = "TRACKER_USER";
  std::string tracker_token_env = "TRACKER_TOKEN";
  std::string stories_dir;

  // Empty means pages are fetched over HTTP.
  std::string pages_fixture_dir;

  std::string service_token_env = "ATGEN_SERVICE_TOKEN";

  // Bundled templates, dialect, context and offline fixtures.
  static Config defaults();
  // Keys absent from the file keep their defaults; relative paths resolve
  // against the file's directory.
  static Config load(const std::string& path);
};

// Everything one generation run needs, wired together. Not movable: the
// pipeline holds references into it.
class Runtime {
 public:
  explicit Runtime(Config config);
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  const Config& config() const { return config_; }
  pipeline::Pipeline& pipeline() { return *pipeline_; }
  gateway::Gateway& gateway() { return *gateway_; }
  page::PageSource& pages() { return *pages_; }

  // Tracker or local story directory. Throws not_found for an unknown key.
  stories::StoryBundle resolve_issue(const std::string& key, bool require_gherkin);

 private:
  Config config_;
  prompt::TemplateStore templates_;
  std::unique_ptr<gateway::Gateway> gateway_;
  std::unique_ptr<page::PageSource> pages_;
  std::unique_ptr<pipeline::Pipeline> pipeline_;
};

// 0 success, 1 input error, 2 gateway or transport error.
int exit_code_for(Errc code);

}  // namespace atgen::config
