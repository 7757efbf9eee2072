#include "atgen/prompt.hpp"

#include <filesystem>
#include <json.hpp>

#include "atgen/error.hpp"
#include "atgen/text.hpp"

namespace atgen::prompt {

void validate(const UserStory& story) {
  if (text::trim(story.title).empty()) throw Error(Errc::invalid_input, "user story title is empty").with_reason("title");
  if (text::trim(story.description).empty())
    throw Error(Errc::invalid_input, "user story description is empty").with_reason("description");
}

std::string_view to_string(Stage s) { return s == Stage::scenarios ? "scenarios" : "script"; }

ProductContext ProductContext::defaults() {
  ProductContext ctx;
  ctx.context_text =
      "(Product context not configured. Describe the application under test, its users and its "
      "conventions in the product context file.)";
  ctx.good_practices = {
      "You generate the test to be as complete as possible for the scenario.",
      "You use the data-test-id to locate the element if you need to interact with it.",
      "Keep tests independent, so they can run in any order.",
      "Use Cypress built-in assertions.",
  };
  return ctx;
}

ProductContext ProductContext::load(const std::string& path) {
  auto ctx = defaults();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, "product context " + path + ": " + e.what()).about(path);
  }
  if (j.contains("context")) ctx.context_text = j.at("context").get<std::string>();
  if (j.contains("custom_commands")) ctx.custom_commands_text = j.at("custom_commands").get<std::string>();
  if (j.contains("good_practices")) ctx.good_practices = j.at("good_practices").get<std::vector<std::string>>();
  return ctx;
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

std::string interpolate(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    auto open = tmpl.find("{{", i);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    out.append(tmpl.substr(i, open - i));
    std::string key(text::trim(tmpl.substr(open + 2, close - open - 2)));
    auto it = values.find(key);
    if (it == values.end()) throw Error(Errc::invalid_input, "unknown template placeholder {{" + key + "}}");
    out.append(it->second);
    i = close + 2;
  }
  return out;
}

namespace {

// Template files end with a newline; the prompt text itself should not.
std::string load_template(const std::filesystem::path& path) {
  auto body = text::normalize_newlines(text::read_file(path.string()));
  while (!body.empty() && body.back() == '\n') body.pop_back();
  return body;
}

std::string bullet_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += '\n';
    out += "- " + items[i];
  }
  return out;
}

std::string render_pages(std::span<const page::PurgedPage> pages) {
  std::string out;
  for (std::size_t i = 0; i < pages.size(); ++i) {
    if (i) out += "\n\n";
    out += "Page: " + pages[i].url + "\n```html\n" + pages[i].html;
    if (!pages[i].html.empty() && pages[i].html.back() != '\n') out += '\n';
    out += "```";
  }
  return out;
}

}  // namespace

TemplateStore TemplateStore::load(const std::string& dir) {
  std::filesystem::path d(dir);
  return TemplateStore(load_template(d / "scenarios.system.txt"), load_template(d / "scenarios.user.txt"),
                       load_template(d / "script.system.txt"), load_template(d / "script.user.txt"));
}

TemplateStore::TemplateStore(std::string scenarios_system, std::string scenarios_user, std::string script_system,
                             std::string script_user)
    : scenarios_system_(std::move(scenarios_system)),
      scenarios_user_(std::move(scenarios_user)),
      script_system_(std::move(script_system)),
      script_user_(std::move(script_user)) {}

std::size_t TemplateStore::count_tokens(const PromptBundle& b) const {
  if (tokenizer_) return tokenizer_(b.system) + tokenizer_(b.user);
  return estimate_tokens(b.system) + estimate_tokens(b.user);
}

PromptBundle TemplateStore::build_scenario_prompt(const UserStory& story) const {
  validate(story);
  PromptBundle b;
  b.stage = Stage::scenarios;
  b.system = interpolate(scenarios_system_, {});
  b.user = interpolate(scenarios_user_, {{"item.inputs.title", std::string(text::trim(story.title))},
                                         {"item.inputs.description", std::string(text::trim(story.description))}});
  b.input_tokens = count_tokens(b);
  return b;
}

PromptBundle TemplateStore::build_script_prompt(const UserStory& story, const gherkin::Feature& feature,
                                                std::span<const page::PurgedPage> pages, const ProductContext& ctx,
                                                const std::optional<std::string>& extra_context) const {
  validate(story);
  if (feature.scenarios.empty()) throw Error(Errc::invalid_input, "feature has no scenarios").with_reason("feature");
  if (pages.empty()) throw Error(Errc::invalid_input, "at least one page is required").with_reason("pages");

  std::string additional;
  if (extra_context && !text::trim(*extra_context).empty())
    additional = "\n\nAdditional context:\n" + std::string(text::trim(*extra_context));

  std::string feature_text = gherkin::serialize_feature(feature);
  if (!feature_text.empty() && feature_text.back() == '\n') feature_text.pop_back();

  PromptBundle b;
  b.stage = Stage::script;
  b.system = interpolate(script_system_, {{"product_context", ctx.context_text},
                                          {"good_practices", bullet_list(ctx.good_practices)},
                                          {"custom_commands", ctx.custom_commands_text}});
  b.user = interpolate(script_user_, {{"story.title", std::string(text::trim(story.title))},
                                      {"story.description", std::string(text::trim(story.description))},
                                      {"feature", feature_text},
                                      {"pages", render_pages(pages)},
                                      {"additional_context", additional}});
  b.input_tokens = count_tokens(b);
  return b;
}

}  // namespace atgen::prompt
