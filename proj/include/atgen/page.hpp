#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace atgen::page {

using Clock = std::chrono::system_clock;

struct RawPage {
  std::string url;
  std::string html;
  Clock::time_point fetched_at{};
  std::size_t byte_len = 0;
};

struct PurgeOptions {
  bool strip_comments = false;
  bool strip_inline_style_attrs = false;
};

struct PurgedPage {
  std::string url;
  std::string html;
  std::map<std::string, int> removed_elements;  // tag name -> count ("comment" for <!-- -->)
  std::vector<std::string> testids;             // first-occurrence order, deduplicated
  // Identifiers that only appeared inside removed script/style elements.
  std::vector<std::string> removed_testids;
  std::size_t byte_len = 0;
};

PurgedPage purge(std::string_view html, const PurgeOptions& options = {});
PurgedPage purge(const RawPage& page, const PurgeOptions& options = {});

// Values of data-testid / data-test-id attributes on tags outside comments,
// deduplicated in order of first occurrence.
std::vector<std::string> scan_testids(std::string_view html);

const std::vector<std::string>& testid_inventory(const PurgedPage& page);

// Cookie store shared between fetches. Mutation is serialized.
class CookieJar {
 public:
  void set(const std::string& name, const std::string& value);
  void absorb_set_cookie(std::string_view header);
  std::string header_value() const;
  std::map<std::string, std::string> snapshot() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::string> cookies_;
};

struct FetchConfig {
  std::chrono::milliseconds timeout{10000};
  std::map<std::string, std::string> headers;
  std::shared_ptr<CookieJar> cookie_jar;
};

// GET an absolute http(s) URL. Errors: invalid_input for a bad URL, transport
// for network failures and timeouts, http_status (status() carries the code)
// for non-2xx, content_type for non-text bodies.
RawPage fetch_page(const std::string& url, const FetchConfig& config = {});

class PageSource {
 public:
  virtual ~PageSource() = default;
  virtual RawPage fetch(const std::string& url) = 0;
};

class HttpPageSource : public PageSource {
 public:
  explicit HttpPageSource(FetchConfig config) : config_(std::move(config)) {}
  RawPage fetch(const std::string& url) override;

 private:
  FetchConfig config_;
};

// Offline pages: `<dir>/<sha256(url)>.html`. A missing file behaves like a 404.
class FixturePageSource : public PageSource {
 public:
  explicit FixturePageSource(std::string dir) : dir_(std::move(dir)) {}
  RawPage fetch(const std::string& url) override;

  static std::string file_name_for(const std::string& url);

 private:
  std::string dir_;
};

}  // namespace atgen::page
