#include <gtest/gtest.h>

#include <regex>

#include "atgen/error.hpp"
#include "atgen/page.hpp"
#include "support.hpp"

using namespace atgen;
using namespace atgen::page;
using namespace testing_support;

namespace {

// Independent oracle: size of all <script>/<style> element spans found by plain substring search.
std::size_t raw_text_span_bytes(const std::string& html) {
  std::size_t total = 0;
  for (const std::string tag : {"script", "style"}) {
    std::size_t pos = 0;
    while ((pos = html.find("<" + tag, pos)) != std::string::npos) {
      auto end = html.find("</" + tag + ">", pos);
      auto stop = end + tag.size() + 3;
      total += stop - pos;
      pos = stop;
    }
  }
  return total;
}

std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

std::string product_html() { return read(fixture_path("pages/" + FixturePageSource::file_name_for(kProductUrl))); }

}  // namespace

TEST(Purge, RemovesStyleAndScript) {
  auto p = purge(R"(<html><head><style>a{}</style></head><body data-testid="root"><p>x</p><script>f()</script></body></html>)");
  EXPECT_EQ(p.html, R"(<html><head></head><body data-testid="root"><p>x</p></body></html>)");
  EXPECT_EQ(p.removed_elements, (std::map<std::string, int>{{"script", 1}, {"style", 1}}));
  EXPECT_EQ(p.testids, std::vector<std::string>{"root"});
  EXPECT_EQ(p.byte_len, p.html.size());
}

TEST(Purge, IdentityWithoutRawTextElements) {
  std::string html = "<div data-test-id=\"a\"><!-- keep --><noscript>js off</noscript><p>caf\xC3\xA9</p></div>";
  auto p = purge(html);
  EXPECT_EQ(p.html, html);
  EXPECT_TRUE(p.removed_elements.empty());
  EXPECT_EQ(p.testids, std::vector<std::string>{"a"});
}

TEST(Purge, FixtureProductPage) {
  auto html = product_html();
  ASSERT_GT(html.size(), 90'000u);
  auto p = purge(html);
  EXPECT_LT(p.byte_len, html.size());
  EXPECT_EQ(p.byte_len, html.size() - raw_text_span_bytes(html));
  EXPECT_EQ(p.removed_elements.at("script") + p.removed_elements.at("style"),
            static_cast<int>(count_occurrences(html, "<script") + count_occurrences(html, "<style")));
  EXPECT_EQ(count_occurrences(p.html, "<script"), 0u);
  EXPECT_EQ(count_occurrences(p.html, "<style"), 0u);
  const auto& ids = testid_inventory(p);
  EXPECT_NE(std::find(ids.begin(), ids.end(), "accordion-item-0"), ids.end());
  EXPECT_NE(std::find(ids.begin(), ids.end(), "accordion-item-1"), ids.end());
  // Every data-testid in the source is preserved, as counted by an independent regex scan.
  std::regex attr(R"re(data-testid="([^"]*)")re");
  std::set<std::string> expected;
  for (std::sregex_iterator it(html.begin(), html.end(), attr), end; it != end; ++it) expected.insert((*it)[1]);
  EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()), expected);
}

TEST(Purge, CaseInsensitiveTagsAndAttributes) {
  auto p = purge("<SCRIPT type=\"x\">if (a < b) {}</SCRIPT ><Style>p{}</STYLE><p>t</p>");
  EXPECT_EQ(p.html, "<p>t</p>");
}

TEST(Purge, ScriptLookingTextInsideCommentIsKept) {
  std::string html = "<!-- <script>x()</script> --><p>t</p>";
  EXPECT_EQ(purge(html).html, html);
  auto stripped = purge(html, {.strip_comments = true});
  EXPECT_EQ(stripped.html, "<p>t</p>");
  EXPECT_EQ(stripped.removed_elements.at("comment"), 1);
}

TEST(Purge, UnterminatedScriptRunsToEnd) {
  auto p = purge("<p>a</p><script>never closed");
  EXPECT_EQ(p.html, "<p>a</p>");
}

TEST(Purge, InlineStyleAttributeOption) {
  std::string html = "<p style=\"color:red\" data-testid=\"t\">x</p>";
  EXPECT_EQ(purge(html).html, html);
  EXPECT_EQ(purge(html, {.strip_inline_style_attrs = true}).html, "<p data-testid=\"t\">x</p>");
}

TEST(Purge, TestidOnRemovedScriptIsReported) {
  auto p = purge("<script data-testid=\"tracker\">x</script><div data-testid=\"kept\"></div>");
  EXPECT_EQ(p.testids, std::vector<std::string>{"kept"});
  EXPECT_EQ(p.removed_testids, std::vector<std::string>{"tracker"});
}

TEST(TestidInventory, EmptyAndDeduplicated) {
  EXPECT_TRUE(testid_inventory(purge("<p>nothing</p>")).empty());
  EXPECT_EQ(testid_inventory(purge("<a data-testid=\"x\"></a><b data-testid='x'></b><i data-test-id=x></i>")),
            std::vector<std::string>{"x"});
}

TEST(FixturePages, MissingPageIs404NamingUrl) {
  FixturePageSource src(fixture_path("pages"));
  EXPECT_GT(src.fetch(kProductUrl).byte_len, 0u);
  try {
    src.fetch("https://shop.example.com/nowhere");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::http_status);
    EXPECT_EQ(e.status(), 404);
    EXPECT_EQ(e.subject(), "https://shop.example.com/nowhere");
  }
}

class FetchTest : public ::testing::Test {
 protected:
  void SetUp() override {
    auto& s = server_.server();
    s.Get("/product", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(product_html(), "text/html; charset=utf-8");
    });
    s.Get("/missing", [](const httplib::Request&, httplib::Response& res) { res.status = 404; });
    s.Get("/image", [](const httplib::Request&, httplib::Response& res) { res.set_content("\x89PNG", "image/png"); });
    s.Get("/slow", [](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(std::chrono::milliseconds(1500));
      res.set_content("late", "text/html");
    });
    s.Get("/moved", [](const httplib::Request&, httplib::Response& res) { res.set_redirect("/product"); });
    s.Get("/login", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Set-Cookie", "session=abc; Path=/; HttpOnly");
      res.set_content("ok", "text/plain");
    });
    s.Get("/whoami", [](const httplib::Request& req, httplib::Response& res) {
      res.set_content(req.get_header_value("Cookie") + "|" + req.get_header_value("X-Market"), "text/plain");
    });
    server_.start();
  }
  FakeServer server_;
};

TEST_F(FetchTest, ServesFixturePage) {
  auto raw = fetch_page(server_.base_url() + "/product");
  EXPECT_EQ(raw.byte_len, raw.html.size());
  EXPECT_GT(raw.byte_len, 0u);
  EXPECT_EQ(raw.html, product_html());
  EXPECT_NE(raw.fetched_at, Clock::time_point{});
}

TEST_F(FetchTest, NotFoundCarriesStatus) {
  try {
    fetch_page(server_.base_url() + "/missing");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::http_status);
    EXPECT_EQ(e.status(), 404);
  }
}

TEST_F(FetchTest, NonTextContentRejected) {
  try {
    fetch_page(server_.base_url() + "/image");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::content_type);
  }
}

TEST_F(FetchTest, TimeoutIsTransportError) {
  FetchConfig cfg;
  cfg.timeout = std::chrono::milliseconds(300);
  try {
    fetch_page(server_.base_url() + "/slow", cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::transport);
    EXPECT_EQ(e.reason(), "timeout");
  }
}

TEST_F(FetchTest, FollowsRedirects) {
  EXPECT_EQ(fetch_page(server_.base_url() + "/moved").html, product_html());
}

TEST_F(FetchTest, CookieJarAndHeaders) {
  FetchConfig cfg;
  cfg.cookie_jar = std::make_shared<CookieJar>();
  cfg.headers["X-Market"] = "DE";
  fetch_page(server_.base_url() + "/login", cfg);
  EXPECT_EQ(cfg.cookie_jar->snapshot().at("session"), "abc");
  EXPECT_EQ(fetch_page(server_.base_url() + "/whoami", cfg).html, "session=abc|DE");
}

TEST(Fetch, UnknownHostIsNetworkError) {
  FetchConfig cfg;
  cfg.timeout = std::chrono::milliseconds(2000);
  try {
    fetch_page("http://host.invalid/", cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::transport);
    EXPECT_EQ(e.reason(), "network");
  }
}

TEST(Fetch, RelativeUrlRejectedBeforeRequest) {
  try {
    fetch_page("/just/a/path");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_input);
  }
}
