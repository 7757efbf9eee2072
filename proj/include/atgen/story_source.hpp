#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "atgen/prompt.hpp"

namespace atgen::stories {

using Clock = std::chrono::system_clock;

struct StoryBundle {
  prompt::UserStory story;
  std::optional<std::string> feature_text;
  std::string issue_key;
  Clock::time_point fetched_at{};
};

struct PrInputs {
  std::string issue_key;
  std::vector<std::string> page_urls;

  friend bool operator==(const PrInputs&, const PrInputs&) = default;
};

// `[A-Z][A-Z0-9]+-[0-9]+`
bool is_issue_key(std::string_view key);
bool is_absolute_http_url(std::string_view url);

// Where the story and its scenarios live in the tracker's issue JSON. Paths are
// dotted ("fields.summary").
struct TrackerConfig {
  std::string base_url;                                // e.g. https://jira.example.com
  std::string issue_path = "/rest/api/2/issue/{key}";  // {key} is substituted
  std::string title_field = "fields.summary";
  std::string description_field = "fields.description";
  // Custom field holding Gherkin. When empty or absent on the issue, a fenced
  // ```gherkin block inside the description is used instead.
  std::string gherkin_field;
  // Credentials: when user is set, HTTP Basic with (user, token); otherwise a
  // bearer token.
  std::string user;
  std::string token;
  std::chrono::milliseconds timeout{15000};

  // Fills user/token from the named environment variables when they are set.
  void credentials_from_env(const std::string& user_var, const std::string& token_var);
};

// Errors: invalid_input for a malformed key (before any request), not_found
// (404), auth_failure (401/403), transport, missing_gherkin when
// require_gherkin is set and no scenarios are attached, parse_error when the
// attached Gherkin does not parse.
StoryBundle fetch_issue(const std::string& key, const TrackerConfig& tracker, bool require_gherkin = false);

// `<dir>/story.md` (first heading = title, rest = description) and optional
// `<dir>/tests.feature`. The directory name is the issue key.
StoryBundle load_local(const std::string& dir);

// Builds a bundle from an issue JSON document, as fetch_issue does after the
// request succeeds.
StoryBundle bundle_from_issue_json(const std::string& key, const std::string& body, const TrackerConfig& tracker);

// Recognizes `Issue: KEY` and `Pages:` followed by URLs on the same line
// (comma-separated) and/or bare URL lines anywhere after it. The first Issue
// and Pages markers win. Throws invalid_input with reason "missing-issue" or
// "missing-pages".
PrInputs parse_pr_description(std::string_view text);

}  // namespace atgen::stories
