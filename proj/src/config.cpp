#include "atgen/config.hpp"

#include <cstdlib>
#include <filesystem>

#include <json.hpp>

#include "atgen/text.hpp"

#ifndef ATGEN_DATA_DIR
#define ATGEN_DATA_DIR "data"
#endif
#ifndef ATGEN_FIXTURES_DIR
#define ATGEN_FIXTURES_DIR "fixtures"
#endif

namespace atgen::config {

namespace fs = std::filesystem;
using nlohmann::json;

BackendMode backend_mode_from_string(std::string_view s) {
  if (s == "replay") return BackendMode::replay;
  if (s == "live") return BackendMode::live;
  if (s == "record") return BackendMode::record;
  throw Error(Errc::invalid_input, "unknown backend '" + std::string(s) + "'").with_reason("backend");
}

Config Config::defaults() {
  Config c;
  fs::path data(ATGEN_DATA_DIR);
  fs::path fixtures(ATGEN_FIXTURES_DIR);
  c.template_dir = (data / "prompts").string();
  c.dialect_profile = (data / "dialects" / "cypress-typescript.json").string();
  c.product_context = (fixtures / "product_context.json").string();
  c.cassette = (fixtures / "cassettes" / "golden.json").string();
  c.stories_dir = (fixtures / "stories").string();
  c.pages_fixture_dir = (fixtures / "pages").string();
  return c;
}

Config Config::load(const std::string& path) {
  json j;
  try {
    j = json::parse(text::read_file(path));
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, "config " + path + ": " + e.what()).about(path);
  }
  auto base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (base / p).lexically_normal().string();
  };

  Config c = defaults();
  try {
    if (j.contains("backend")) c.backend = backend_mode_from_string(j["backend"].get<std::string>());
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model_id = j.value("model_id", c.model_id);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.auth_header = j.value("auth_header", c.auth_header);
    if (j.contains("rates")) {
      const auto& r = j["rates"];
      c.rates.per_1k_input = r.value("per_1k_input", c.rates.per_1k_input);
      c.rates.per_1k_output = r.value("per_1k_output", c.rates.per_1k_output);
      c.rates.currency = r.value("currency", c.rates.currency);
    }
    c.params.temperature = j.value("temperature", c.params.temperature);
    c.params.max_output_tokens = j.value("max_output_tokens", c.params.max_output_tokens);
    if (j.contains("cassette")) c.cassette = resolve(j["cassette"].get<std::string>());
    if (j.contains("template_dir")) c.template_dir = resolve(j["template_dir"].get<std::string>());
    if (j.contains("dialect_profile")) c.dialect_profile = resolve(j["dialect_profile"].get<std::string>());
    if (j.contains("product_context")) c.product_context = resolve(j["product_context"].get<std::string>());
    if (j.contains("stories_dir")) c.stories_dir = resolve(j["stories_dir"].get<std::string>());
    if (j.contains("pages_fixture_dir")) c.pages_fixture_dir = resolve(j["pages_fixture_dir"].get<std::string>());
    c.service_token_env = j.value("service_token_env", c.service_token_env);
    if (j.contains("tracker") && !j["tracker"].is_null()) {
      const auto& t = j["tracker"];
      stories::TrackerConfig tc;
      tc.base_url = t.at("base_url").get<std::string>();
      tc.issue_path = t.value("issue_path", tc.issue_path);
      tc.title_field = t.value("title_field", tc.title_field);
      tc.description_field = t.value("description_field", tc.description_field);
      tc.gherkin_field = t.value("gherkin_field", tc.gherkin_field);
      if (t.contains("timeout_ms")) tc.timeout = std::chrono::milliseconds(t["timeout_ms"].get<int>());
      c.tracker_user_env = t.value("user_env", c.tracker_user_env);
      c.tracker_token_env = t.value("token_env", c.tracker_token_env);
      c.tracker = tc;
    }
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, "config " + path + ": " + e.what()).about(path);
  }
  return c;
}

namespace {

std::unique_ptr<gateway::Backend> make_backend(const Config& c) {
  auto live_config = [&] {
    if (c.endpoint.empty()) throw Error(Errc::invalid_input, "live backend needs an endpoint").with_reason("endpoint");
    gateway::LiveConfig lc;
    lc.endpoint = c.endpoint;
    lc.model_id = c.model_id;
    lc.auth_header = c.auth_header;
    if (const char* key = std::getenv(c.api_key_env.c_str())) lc.api_key = key;
    return lc;
  };
  switch (c.backend) {
    case BackendMode::replay: {
      auto cassette = std::make_shared<gateway::Cassette>(gateway::Cassette::load(c.cassette));
      return std::make_unique<gateway::ReplayBackend>(std::move(cassette), c.model_id);
    }
    case BackendMode::live:
      return std::make_unique<gateway::LiveBackend>(live_config());
    case BackendMode::record: {
      auto cassette = std::make_shared<gateway::Cassette>(
          fs::exists(c.cassette) ? gateway::Cassette::load(c.cassette) : gateway::Cassette{});
      return std::make_unique<gateway::RecordingBackend>(std::make_unique<gateway::LiveBackend>(live_config()),
                                                         std::move(cassette), c.cassette);
    }
  }
  throw Error(Errc::invalid_input, "unknown backend");
}

std::unique_ptr<page::PageSource> make_pages(const Config& c) {
  if (!c.pages_fixture_dir.empty()) return std::make_unique<page::FixturePageSource>(c.pages_fixture_dir);
  return std::make_unique<page::HttpPageSource>(page::FetchConfig{});
}

}  // namespace

Runtime::Runtime(Config config)
    : config_(std::move(config)),
      templates_(prompt::TemplateStore::load(config_.template_dir)),
      gateway_(std::make_unique<gateway::Gateway>(make_backend(config_), config_.rates, config_.params)),
      pages_(make_pages(config_)) {
  auto ctx = config_.product_context.empty() ? prompt::ProductContext::defaults()
                                             : prompt::ProductContext::load(config_.product_context);
  auto dialect = config_.dialect_profile.empty() ? extract::DialectProfile{}
                                                 : extract::DialectProfile::load(config_.dialect_profile);
  pipeline_ = std::make_unique<pipeline::Pipeline>(templates_, std::move(ctx), *gateway_, *pages_, std::move(dialect));
}

stories::StoryBundle Runtime::resolve_issue(const std::string& key, bool require_gherkin) {
  if (!stories::is_issue_key(key))
    throw Error(Errc::invalid_input, "malformed issue key '" + key + "'").with_reason("issue_key").about(key);
  if (config_.tracker) {
    auto tracker = *config_.tracker;
    tracker.credentials_from_env(config_.tracker_user_env, config_.tracker_token_env);
    return stories::fetch_issue(key, tracker, require_gherkin);
  }
  auto dir = fs::path(config_.stories_dir) / key;
  if (!fs::is_directory(dir)) throw Error(Errc::not_found, "issue " + key + " not found").with_status(404).about(key);
  auto bundle = stories::load_local(dir.string());
  if (require_gherkin && !bundle.feature_text)
    throw Error(Errc::missing_gherkin, "issue " + key + " has no Gherkin scenarios").about(key);
  return bundle;
}

int exit_code_for(Errc code) {
  if (is_upstream_failure(code) || code == Errc::auth_failure) return 2;
  return 1;
}

}  // namespace atgen::config
