#include "atgen/page.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <optional>
#include <regex>
#include <set>

#include "atgen/error.hpp"
#include "atgen/text.hpp"

namespace atgen::page {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

struct Attr {
  std::string name;
  std::string value;
  std::size_t begin = 0;  // first whitespace before the name
  std::size_t end = 0;    // one past the value
};

struct Tag {
  std::string name;  // lower-case, without the leading '/' of a closing tag
  bool closing = false;
  bool self_closing = false;
  std::vector<Attr> attrs;
  std::size_t end = 0;  // one past '>'
};

// Tokenizes one tag starting at html[pos] == '<'. Returns nullopt when the
// text is not a tag (e.g. "a < b") or the tag never closes.
std::optional<Tag> parse_tag(std::string_view html, std::size_t pos) {
  std::size_t i = pos + 1;
  Tag tag;
  if (i < html.size() && html[i] == '/') {
    tag.closing = true;
    ++i;
  }
  if (i >= html.size() || !is_alpha(html[i])) return std::nullopt;
  std::size_t name_begin = i;
  while (i < html.size() && !is_space(html[i]) && html[i] != '>' && html[i] != '/') ++i;
  tag.name = text::to_lower(html.substr(name_begin, i - name_begin));

  while (i < html.size()) {
    std::size_t ws_begin = i;
    while (i < html.size() && is_space(html[i])) ++i;
    if (i >= html.size()) return std::nullopt;
    if (html[i] == '>') {
      tag.end = i + 1;
      return tag;
    }
    if (html[i] == '/') {
      if (i + 1 < html.size() && html[i + 1] == '>') {
        tag.self_closing = true;
        tag.end = i + 2;
        return tag;
      }
      ++i;
      continue;
    }
    Attr attr;
    attr.begin = ws_begin;
    std::size_t an = i;
    while (i < html.size() && !is_space(html[i]) && html[i] != '>' && html[i] != '=' &&
           !(html[i] == '/' && i + 1 < html.size() && html[i + 1] == '>'))
      ++i;
    attr.name = text::to_lower(html.substr(an, i - an));
    std::size_t after_name = i;
    while (i < html.size() && is_space(html[i])) ++i;
    if (i < html.size() && html[i] == '=') {
      ++i;
      while (i < html.size() && is_space(html[i])) ++i;
      if (i >= html.size()) return std::nullopt;
      if (html[i] == '"' || html[i] == '\'') {
        char q = html[i];
        std::size_t close = html.find(q, i + 1);
        if (close == std::string_view::npos) return std::nullopt;
        attr.value = std::string(html.substr(i + 1, close - i - 1));
        i = close + 1;
      } else {
        std::size_t vb = i;
        while (i < html.size() && !is_space(html[i]) && html[i] != '>') ++i;
        attr.value = std::string(html.substr(vb, i - vb));
      }
    } else {
      i = after_name;
    }
    attr.end = i;
    tag.attrs.push_back(std::move(attr));
  }
  return std::nullopt;
}

bool is_testid_attr(const std::string& name) { return name == "data-testid" || name == "data-test-id"; }

bool is_raw_text_element(const Tag& tag) {
  return !tag.closing && (tag.name == "script" || tag.name == "style");
}

// Finds the end of a raw-text element body: one past the '>' of the matching
// closing tag, or the end of input when it never closes.
std::size_t raw_text_end(std::string_view html, std::size_t from, std::string_view name) {
  std::string closer = "</" + std::string(name);
  std::size_t i = from;
  while (i < html.size()) {
    std::size_t lt = html.find('<', i);
    if (lt == std::string_view::npos) break;
    if (text::starts_with_icase(html.substr(lt), closer)) {
      std::size_t after = lt + closer.size();
      if (after >= html.size()) return html.size();
      char c = html[after];
      if (c == '>' || c == '/' || is_space(c)) {
        std::size_t gt = html.find('>', after);
        return gt == std::string_view::npos ? html.size() : gt + 1;
      }
    }
    i = lt + 1;
  }
  return html.size();
}

std::size_t comment_end(std::string_view html, std::size_t pos) {
  std::size_t close = html.find("-->", pos + 4);
  return close == std::string_view::npos ? html.size() : close + 3;
}

void add_unique(std::vector<std::string>& list, std::set<std::string>& seen, const std::string& v) {
  if (seen.insert(v).second) list.push_back(v);
}

std::string rewrite_without_style(std::string_view html, const Tag& tag, std::size_t pos) {
  std::string out;
  std::size_t cursor = pos;
  for (const auto& a : tag.attrs) {
    if (a.name != "style") continue;
    out.append(html.substr(cursor, a.begin - cursor));
    cursor = a.end;
  }
  out.append(html.substr(cursor, tag.end - cursor));
  return out;
}

struct PassResult {
  std::string html;
  std::map<std::string, int> removed;
  std::vector<std::string> removed_ids;
};

PassResult purge_pass(std::string_view html, const PurgeOptions& options) {
  PassResult r;
  r.html.reserve(html.size());
  std::set<std::string> seen_removed;
  std::size_t i = 0;
  while (i < html.size()) {
    std::size_t lt = html.find('<', i);
    if (lt == std::string_view::npos) {
      r.html.append(html.substr(i));
      break;
    }
    r.html.append(html.substr(i, lt - i));
    i = lt;
    if (html.substr(i, 4) == "<!--") {
      std::size_t end = comment_end(html, i);
      if (options.strip_comments) {
        ++r.removed["comment"];
      } else {
        r.html.append(html.substr(i, end - i));
      }
      i = end;
      continue;
    }
    auto tag = parse_tag(html, i);
    if (!tag) {
      r.html.push_back('<');
      ++i;
      continue;
    }
    if (is_raw_text_element(*tag)) {
      std::size_t end = tag->self_closing ? tag->end : raw_text_end(html, tag->end, tag->name);
      ++r.removed[tag->name];
      for (const auto& a : tag->attrs)
        if (is_testid_attr(a.name)) add_unique(r.removed_ids, seen_removed, a.value);
      i = end;
      continue;
    }
    if (options.strip_inline_style_attrs) {
      r.html.append(rewrite_without_style(html, *tag, i));
    } else {
      r.html.append(html.substr(i, tag->end - i));
    }
    i = tag->end;
  }
  return r;
}

}  // namespace

std::vector<std::string> scan_testids(std::string_view html) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  std::size_t i = 0;
  while (i < html.size()) {
    std::size_t lt = html.find('<', i);
    if (lt == std::string_view::npos) break;
    i = lt;
    if (html.substr(i, 4) == "<!--") {
      i = comment_end(html, i);
      continue;
    }
    auto tag = parse_tag(html, i);
    if (!tag) {
      ++i;
      continue;
    }
    for (const auto& a : tag->attrs)
      if (is_testid_attr(a.name)) add_unique(ids, seen, a.value);
    i = (is_raw_text_element(*tag) && !tag->self_closing) ? raw_text_end(html, tag->end, tag->name)
                                                           : tag->end;
  }
  return ids;
}

PurgedPage purge(std::string_view html, const PurgeOptions& options) {
  PurgedPage page;
  std::vector<std::string> removed_ids;
  std::string current(html);
  // Removing a span can splice text into a new comment or tag, so repeat
  // until nothing changes. Every pass that changes the text shrinks it.
  for (;;) {
    auto pass = purge_pass(current, options);
    for (const auto& [tag, n] : pass.removed) page.removed_elements[tag] += n;
    removed_ids.insert(removed_ids.end(), pass.removed_ids.begin(), pass.removed_ids.end());
    bool changed = pass.html != current;
    current = std::move(pass.html);
    if (!changed) break;
  }
  page.html = std::move(current);
  page.byte_len = page.html.size();
  page.testids = scan_testids(page.html);
  std::set<std::string> kept(page.testids.begin(), page.testids.end());
  std::set<std::string> seen;
  for (const auto& id : removed_ids)
    if (!kept.count(id)) add_unique(page.removed_testids, seen, id);
  return page;
}

PurgedPage purge(const RawPage& raw, const PurgeOptions& options) {
  auto page = purge(std::string_view(raw.html), options);
  page.url = raw.url;
  return page;
}

const std::vector<std::string>& testid_inventory(const PurgedPage& page) { return page.testids; }

void CookieJar::set(const std::string& name, const std::string& value) {
  std::lock_guard lock(mutex_);
  cookies_[name] = value;
}

void CookieJar::absorb_set_cookie(std::string_view header) {
  auto first = header.substr(0, header.find(';'));
  auto eq = first.find('=');
  if (eq == std::string_view::npos) return;
  set(std::string(text::trim(first.substr(0, eq))), std::string(text::trim(first.substr(eq + 1))));
}

std::string CookieJar::header_value() const {
  std::lock_guard lock(mutex_);
  std::string out;
  for (const auto& [k, v] : cookies_) {
    if (!out.empty()) out += "; ";
    out += k + "=" + v;
  }
  return out;
}

std::map<std::string, std::string> CookieJar::snapshot() const {
  std::lock_guard lock(mutex_);
  return cookies_;
}

RawPage fetch_page(const std::string& url, const FetchConfig& config) {
  static const std::regex kUrl(R"(^(https?)://([^/?#]+)([^#]*))", std::regex::icase);
  std::smatch m;
  if (!std::regex_search(url, m, kUrl))
    throw Error(Errc::invalid_input, "not an absolute http(s) URL: " + url).about(url);
  std::string origin = text::to_lower(m[1].str()) + "://" + m[2].str();
  std::string path = m[3].str().empty() ? "/" : m[3].str();

  httplib::Client client(origin);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_follow_location(true);

  httplib::Headers headers(config.headers.begin(), config.headers.end());
  if (config.cookie_jar) {
    auto cookie = config.cookie_jar->header_value();
    if (!cookie.empty()) headers.emplace("Cookie", cookie);
  }

  auto res = client.Get(path, headers);
  if (!res) {
    auto err = res.error();
    bool timeout = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
    throw Error(Errc::transport, "fetch " + url + " failed: " + httplib::to_string(err))
        .with_reason(timeout ? "timeout" : "network")
        .about(url);
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(Errc::http_status, "fetch " + url + " returned HTTP " + std::to_string(res->status))
        .with_status(res->status)
        .about(url);
  }
  if (res->has_header("Content-Type")) {
    auto type = text::to_lower(res->get_header_value("Content-Type"));
    bool textual = type.rfind("text/", 0) == 0 || type.find("html") != std::string::npos ||
                   type.find("xml") != std::string::npos;
    if (!textual)
      throw Error(Errc::content_type, "fetch " + url + " returned non-text content " + type).about(url);
  }
  if (config.cookie_jar) {
    auto n = res->get_header_value_count("Set-Cookie");
    for (std::size_t k = 0; k < n; ++k) config.cookie_jar->absorb_set_cookie(res->get_header_value("Set-Cookie", k));
  }

  RawPage page;
  page.url = url;
  page.html = std::move(res->body);
  page.byte_len = page.html.size();
  page.fetched_at = Clock::now();
  return page;
}

RawPage HttpPageSource::fetch(const std::string& url) { return fetch_page(url, config_); }

std::string FixturePageSource::file_name_for(const std::string& url) { return text::sha256_hex(url) + ".html"; }

RawPage FixturePageSource::fetch(const std::string& url) {
  auto path = std::filesystem::path(dir_) / file_name_for(url);
  if (!std::filesystem::exists(path))
    throw Error(Errc::http_status, "no fixture page for " + url).with_status(404).about(url);
  RawPage page;
  page.url = url;
  page.html = text::read_file(path.string());
  page.byte_len = page.html.size();
  page.fetched_at = Clock::now();
  return page;
}

}  // namespace atgen::page
