#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "atgen/gherkin.hpp"
#include "atgen/page.hpp"

namespace atgen::prompt {

struct UserStory {
  std::string title;
  std::string description;
  std::optional<std::string> source_key;

  friend bool operator==(const UserStory&, const UserStory&) = default;
};

// Throws invalid_input when title or description is blank.
void validate(const UserStory& story);

enum class Stage { scenarios, script };

std::string_view to_string(Stage s);

struct PromptBundle {
  std::string system;
  std::string user;
  Stage stage = Stage::scenarios;
  std::size_t input_tokens = 0;

  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

struct ProductContext {
  std::string context_text;
  std::string custom_commands_text;
  std::vector<std::string> good_practices;

  static ProductContext defaults();
  // JSON file: {"context": "...", "custom_commands": "...", "good_practices": [...]}.
  // Missing keys keep their defaults.
  static ProductContext load(const std::string& path);
};

// ceil(bytes / 4).
std::size_t estimate_tokens(std::string_view text);

using Tokenizer = std::function<std::size_t(std::string_view)>;

// Replaces every `{{name}}` with values.at(name). An unknown placeholder is an
// invalid_input error so template typos surface immediately.
std::string interpolate(std::string_view tmpl, const std::map<std::string, std::string>& values);

// Read-only after construction.
class TemplateStore {
 public:
  // Loads scenarios.system.txt, scenarios.user.txt, script.system.txt and
  // script.user.txt from `dir`.
  static TemplateStore load(const std::string& dir);

  TemplateStore(std::string scenarios_system, std::string scenarios_user, std::string script_system,
                std::string script_user);

  PromptBundle build_scenario_prompt(const UserStory& story) const;

  PromptBundle build_script_prompt(const UserStory& story, const gherkin::Feature& feature,
                                   std::span<const page::PurgedPage> pages, const ProductContext& ctx,
                                   const std::optional<std::string>& extra_context = std::nullopt) const;

  void set_tokenizer(Tokenizer tokenizer) { tokenizer_ = std::move(tokenizer); }

 private:
  std::size_t count_tokens(const PromptBundle& b) const;

  std::string scenarios_system_;
  std::string scenarios_user_;
  std::string script_system_;
  std::string script_user_;
  Tokenizer tokenizer_;
};

}  // namespace atgen::prompt
