// Adds a recorded exchange to a cassette: rebuilds the exact prompt the
// pipeline would send and stores the given response under its digest.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "atgen/config.hpp"
#include "atgen/gateway.hpp"
#include "atgen/text.hpp"

using namespace atgen;

int main(int argc, char** argv) {
  CLI::App app{"Record a model response into a cassette file"};
  app.require_subcommand(1);

  std::string config_path, cassette_path, response_file, title, description, story_dir, context;
  std::vector<std::string> pages;
  std::int64_t usage_in = -1, usage_out = -1;

  auto add_shared = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--cassette", cassette_path, "cassette file to update")->required();
    cmd->add_option("--response-file", response_file, "file holding the model response text")->required();
    cmd->add_option("--input-tokens", usage_in, "recorded input tokens (default: estimate)");
    cmd->add_option("--output-tokens", usage_out, "recorded output tokens (default: estimate)");
  };
  auto* scen = app.add_subcommand("scenarios", "stage-one exchange");
  add_shared(scen);
  scen->add_option("--title", title);
  scen->add_option("--description-file", description, "file holding the story description");
  scen->add_option("--story-dir", story_dir, "take title and description from a story directory");

  auto* script = app.add_subcommand("script", "stage-two exchange");
  add_shared(script);
  script->add_option("--story-dir", story_dir)->required();
  script->add_option("--page", pages)->required();
  script->add_option("--context", context, "extra context, as combined by the pipeline");

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = config_path.empty() ? config::Config::defaults() : config::Config::load(config_path);
    auto templates = prompt::TemplateStore::load(cfg.template_dir);
    prompt::PromptBundle bundle;
    if (*scen) {
      prompt::UserStory story;
      if (!story_dir.empty()) {
        story = stories::load_local(story_dir).story;
      } else {
        story = {title, std::string(text::trim(text::read_file(description))), {}};
      }
      bundle = templates.build_scenario_prompt(story);
    } else {
      auto story = stories::load_local(story_dir);
      if (!story.feature_text) throw Error(Errc::missing_gherkin, story_dir + " has no tests.feature");
      page::FixturePageSource source(cfg.pages_fixture_dir);
      std::vector<page::PurgedPage> purged;
      for (const auto& url : pages) purged.push_back(page::purge(source.fetch(url)));
      auto ctx = prompt::ProductContext::load(cfg.product_context);
      std::optional<std::string> extra;
      if (!context.empty()) extra = context;
      bundle = templates.build_script_prompt(story.story, gherkin::parse_feature(*story.feature_text), purged, ctx, extra);
    }

    gateway::ModelResponse response;
    response.text = text::read_file(response_file);
    response.model_id = cfg.model_id;
    response.usage.input_tokens = usage_in >= 0 ? usage_in : static_cast<std::int64_t>(bundle.input_tokens);
    response.usage.output_tokens =
        usage_out >= 0 ? usage_out : static_cast<std::int64_t>(prompt::estimate_tokens(response.text));

    auto digest = gateway::request_digest(bundle, cfg.params, cfg.model_id);
    auto cassette = std::filesystem::exists(cassette_path) ? gateway::Cassette::load(cassette_path) : gateway::Cassette{};
    cassette.put({digest,
                  {{"stage", prompt::to_string(bundle.stage)},
                   {"model_id", cfg.model_id},
                   {"prompt_bytes", bundle.system.size() + bundle.user.size()},
                   {"estimated_input_tokens", bundle.input_tokens}},
                  response});
    cassette.save(cassette_path);
    std::cout << digest << '\n';
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return 1;
  }
  return 0;
}
