#include "atgen/story_source.hpp"

#include <httplib.h>

#include <cstdlib>
#include <filesystem>
#include <json.hpp>
#include <regex>
#include <set>

#include "atgen/error.hpp"
#include "atgen/gherkin.hpp"
#include "atgen/text.hpp"

namespace atgen::stories {

using nlohmann::json;

bool is_issue_key(std::string_view key) {
  static const std::regex kKey("[A-Z][A-Z0-9]+-[0-9]+");
  return std::regex_match(key.begin(), key.end(), kKey);
}

bool is_absolute_http_url(std::string_view url) {
  static const std::regex kUrl(R"(https?://[^\s/?#]+[^\s]*)", std::regex::icase);
  return std::regex_match(url.begin(), url.end(), kUrl);
}

void TrackerConfig::credentials_from_env(const std::string& user_var, const std::string& token_var) {
  if (const char* u = user_var.empty() ? nullptr : std::getenv(user_var.c_str())) user = u;
  if (const char* t = token_var.empty() ? nullptr : std::getenv(token_var.c_str())) token = t;
}

namespace {

const json* at_path(const json& doc, const std::string& dotted) {
  const json* node = &doc;
  std::size_t start = 0;
  while (start <= dotted.size()) {
    auto dot = dotted.find('.', start);
    auto part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) return nullptr;
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return node;
}

std::optional<std::string> string_at(const json& doc, const std::string& dotted) {
  if (dotted.empty()) return std::nullopt;
  const auto* node = at_path(doc, dotted);
  if (!node || node->is_null()) return std::nullopt;
  if (node->is_string()) return node->get<std::string>();
  return node->dump();
}

// Splits a ```gherkin (or ```feature) block out of a description.
std::pair<std::string, std::optional<std::string>> split_gherkin_block(const std::string& description) {
  auto lines = text::split_lines(description);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto t = text::trim(lines[i]);
    if (t.rfind("```", 0) != 0) continue;
    auto tag = text::to_lower(text::trim(t.substr(3)));
    if (tag != "gherkin" && tag != "feature" && tag != "cucumber") continue;
    std::size_t j = i + 1;
    std::vector<std::string> body;
    while (j < lines.size() && text::trim(lines[j]) != "```") body.push_back(lines[j++]);
    std::vector<std::string> rest(lines.begin(), lines.begin() + static_cast<long>(i));
    if (j < lines.size()) rest.insert(rest.end(), lines.begin() + static_cast<long>(j) + 1, lines.end());
    return {std::string(text::trim(text::join(rest, "\n"))), text::join(body, "\n")};
  }
  return {description, std::nullopt};
}

void check_feature(const std::string& key, const std::string& feature_text) {
  try {
    gherkin::parse_feature(feature_text);
  } catch (const Error& e) {
    throw Error(Errc::parse_error, "Gherkin attached to " + key + " does not parse: " + e.what())
        .about(key)
        .at_line(e.line())
        .with_reason(e.reason());
  }
}

}  // namespace

StoryBundle bundle_from_issue_json(const std::string& key, const std::string& body, const TrackerConfig& tracker) {
  auto doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw Error(Errc::parse_error, "tracker returned malformed JSON for " + key).about(key);

  StoryBundle bundle;
  bundle.issue_key = key;
  bundle.fetched_at = Clock::now();
  bundle.story.source_key = key;
  bundle.story.title = string_at(doc, tracker.title_field).value_or("");
  std::string description = string_at(doc, tracker.description_field).value_or("");

  auto custom = string_at(doc, tracker.gherkin_field);
  if (custom && !text::trim(*custom).empty()) {
    bundle.feature_text = *custom;
    bundle.story.description = std::string(text::trim(description));
  } else {
    auto [rest, gherkin] = split_gherkin_block(description);
    bundle.story.description = rest;
    bundle.feature_text = gherkin;
  }
  try {
    prompt::validate(bundle.story);
  } catch (const Error& e) {
    throw Error(Errc::invalid_input, "issue " + key + " has no usable story: " + e.what()).about(key);
  }
  if (bundle.feature_text) check_feature(key, *bundle.feature_text);
  return bundle;
}

StoryBundle fetch_issue(const std::string& key, const TrackerConfig& tracker, bool require_gherkin) {
  if (!is_issue_key(key))
    throw Error(Errc::invalid_input, "malformed issue key '" + key + "'").with_reason("issue_key").about(key);
  static const std::regex kBase(R"(^(https?://[^/?#]+)(.*)$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(tracker.base_url, m, kBase))
    throw Error(Errc::invalid_input, "tracker base URL is not absolute http(s): '" + tracker.base_url + "'");
  std::string path = m[2].str();
  while (!path.empty() && path.back() == '/') path.pop_back();
  std::string issue_path = tracker.issue_path;
  if (auto pos = issue_path.find("{key}"); pos != std::string::npos) issue_path.replace(pos, 5, key);
  path += issue_path;

  httplib::Client client(m[1].str());
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(tracker.timeout).count();
  client.set_connection_timeout(secs > 0 ? secs : 1, 0);
  client.set_read_timeout(secs > 0 ? secs : 1, 0);
  if (!tracker.user.empty()) {
    client.set_basic_auth(tracker.user, tracker.token);
  } else if (!tracker.token.empty()) {
    client.set_bearer_token_auth(tracker.token);
  }
  auto res = client.Get(path, {{"Accept", "application/json"}});
  if (!res)
    throw Error(Errc::transport, "tracker unreachable: " + httplib::to_string(res.error())).about(tracker.base_url);
  if (res->status == 404) throw Error(Errc::not_found, "issue " + key + " not found").with_status(404).about(key);
  if (res->status == 401 || res->status == 403)
    throw Error(Errc::auth_failure, "tracker rejected credentials for " + key).with_status(res->status).about(key);
  if (res->status < 200 || res->status >= 300)
    throw Error(Errc::http_status, "tracker returned HTTP " + std::to_string(res->status) + " for " + key)
        .with_status(res->status)
        .about(key);

  auto bundle = bundle_from_issue_json(key, res->body, tracker);
  if (require_gherkin && !bundle.feature_text)
    throw Error(Errc::missing_gherkin, "issue " + key + " has no Gherkin scenarios").about(key);
  return bundle;
}

StoryBundle load_local(const std::string& dir) {
  namespace fs = std::filesystem;
  fs::path root(dir);
  auto key = (root.has_filename() ? root.filename() : root.parent_path().filename()).string();
  if (!is_issue_key(key))
    throw Error(Errc::invalid_input, "story directory name '" + key + "' is not an issue key").about(dir);
  auto story_path = root / "story.md";
  if (!fs::exists(story_path)) throw Error(Errc::not_found, "missing " + story_path.string()).about(key);

  auto lines = text::split_lines(text::normalize_newlines(text::read_file(story_path.string())));
  StoryBundle bundle;
  bundle.issue_key = key;
  bundle.fetched_at = Clock::now();
  bundle.story.source_key = key;
  std::vector<std::string> rest;
  bool have_title = false;
  for (const auto& line : lines) {
    auto t = text::trim(line);
    if (!have_title && !t.empty() && t.front() == '#') {
      bundle.story.title = std::string(text::trim(t.substr(t.find_first_not_of('#'))));
      have_title = true;
      continue;
    }
    if (have_title) rest.push_back(line);
  }
  if (!have_title) throw Error(Errc::invalid_input, story_path.string() + " has no title heading").about(key);
  bundle.story.description = std::string(text::trim(text::join(rest, "\n")));
  prompt::validate(bundle.story);

  auto feature_path = root / "tests.feature";
  if (fs::exists(feature_path)) {
    bundle.feature_text = text::read_file(feature_path.string());
    check_feature(key, *bundle.feature_text);
  }
  return bundle;
}

namespace {

std::vector<std::string> split_urls(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(cur);
    cur.clear();
  };
  for (char c : s) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

// A line made only of URLs, optionally as a list item.
std::optional<std::vector<std::string>> url_line(std::string_view line) {
  auto t = text::trim(line);
  if (t.size() > 2 && (t[0] == '-' || t[0] == '*') && t[1] == ' ') t = text::trim(t.substr(2));
  auto tokens = split_urls(t);
  if (tokens.empty()) return std::nullopt;
  for (const auto& tok : tokens)
    if (!is_absolute_http_url(tok)) return std::nullopt;
  return tokens;
}

}  // namespace

PrInputs parse_pr_description(std::string_view text) {
  PrInputs out;
  bool have_issue = false;
  bool in_pages = false;
  std::set<std::string> seen;
  auto add_url = [&](const std::string& u) {
    if (seen.insert(u).second) out.page_urls.push_back(u);
  };

  for (const auto& raw : text::split_lines(text)) {
    auto line = text::trim(raw);
    if (text::starts_with_icase(line, "issue:")) {
      if (have_issue) continue;
      auto tokens = split_urls(line.substr(6));
      if (tokens.empty() || !is_issue_key(tokens[0]))
        throw Error(Errc::invalid_input, "Issue line does not name a valid issue key").with_reason("missing-issue");
      out.issue_key = tokens[0];
      have_issue = true;
      continue;
    }
    if (text::starts_with_icase(line, "pages:")) {
      if (in_pages) continue;
      in_pages = true;
      for (const auto& tok : split_urls(line.substr(6)))
        if (is_absolute_http_url(tok)) add_url(tok);
      continue;
    }
    if (!in_pages) continue;
    if (auto urls = url_line(line))
      for (const auto& u : *urls) add_url(u);
  }
  if (!have_issue) throw Error(Errc::invalid_input, "PR description has no 'Issue:' line").with_reason("missing-issue");
  if (out.page_urls.empty())
    throw Error(Errc::invalid_input, "PR description lists no page URLs under 'Pages:'").with_reason("missing-pages");
  return out;
}

}  // namespace atgen::stories
