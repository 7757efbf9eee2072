#include <gtest/gtest.h>

#include <atomic>

#include "atgen/error.hpp"
#include "atgen/story_source.hpp"
#include "atgen/text.hpp"
#include "support.hpp"

using namespace atgen;
using namespace atgen::stories;
using namespace testing_support;

TEST(IssueKey, Grammar) {
  EXPECT_TRUE(is_issue_key("SHOP-101"));
  EXPECT_TRUE(is_issue_key("AB2-1"));
  EXPECT_FALSE(is_issue_key("abc"));
  EXPECT_FALSE(is_issue_key("S-1"));
  EXPECT_FALSE(is_issue_key("SHOP-"));
  EXPECT_FALSE(is_issue_key("shop-1"));
  EXPECT_FALSE(is_issue_key("SHOP-1 "));
}

class TrackerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.server().Get(R"(/rest/api/2/issue/([A-Z0-9-]+))", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      auth_ = req.get_header_value("Authorization");
      auto key = req.matches[1].str();
      auto path = fixture_path("tracker/" + key + ".json");
      if (key == "LOCKED-1") {
        res.status = 401;
        return;
      }
      if (!std::filesystem::exists(path)) {
        res.status = 404;
        return;
      }
      res.set_content(read(path), "application/json");
    });
    server_.start();
    cfg_.base_url = server_.base_url();
    cfg_.token = "secret";
  }
  FakeServer server_;
  TrackerConfig cfg_;
  std::atomic<int> requests_{0};
  std::string auth_;
};

TEST_F(TrackerTest, IssueWithEmbeddedGherkin) {
  auto b = fetch_issue("SHOP-101", cfg_, true);
  EXPECT_EQ(b.issue_key, "SHOP-101");
  EXPECT_EQ(b.story.title, "Detailed information of physical products on the detail page");
  EXPECT_NE(b.story.description.find("phyiscal products"), std::string::npos);
  EXPECT_EQ(b.story.description.find("```"), std::string::npos);
  ASSERT_TRUE(b.feature_text.has_value());
  EXPECT_EQ(gherkin::parse_feature(*b.feature_text).scenarios.size(), 2u);
  EXPECT_EQ(auth_, "Bearer secret");
}

TEST_F(TrackerTest, BasicAuthWhenUserSet) {
  cfg_.user = "bot";
  fetch_issue("SHOP-101", cfg_);
  EXPECT_EQ(auth_.rfind("Basic ", 0), 0u);
}

TEST_F(TrackerTest, UnknownIssueNotFound) {
  try {
    fetch_issue("NOPE-1", cfg_);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::not_found);
    EXPECT_EQ(e.subject(), "NOPE-1");
  }
}

TEST_F(TrackerTest, MalformedKeyRejectedBeforeRequest) {
  try {
    fetch_issue("abc", cfg_);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_input);
  }
  EXPECT_EQ(requests_, 0);
}

TEST_F(TrackerTest, RejectedCredentials) {
  try {
    fetch_issue("LOCKED-1", cfg_);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::auth_failure);
  }
}

TEST_F(TrackerTest, MissingGherkinOnlyWhenRequired) {
  auto b = fetch_issue("SHOP-100", cfg_, false);
  EXPECT_FALSE(b.feature_text.has_value());
  EXPECT_EQ(b.story.title, "Alphabet User Sign-Up");
  try {
    fetch_issue("SHOP-100", cfg_, true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::missing_gherkin);
  }
}

TEST(IssueJson, CustomGherkinFieldWins) {
  TrackerConfig cfg;
  cfg.gherkin_field = "fields.customfield_10042";
  auto b = bundle_from_issue_json(
      "X-1",
      R"({"fields":{"summary":"S","description":"D\n```gherkin\nFeature: Old\nScenario: a\nGiven b\n```","customfield_10042":"Feature: New\nScenario: c\nGiven d\n"}})",
      cfg);
  ASSERT_TRUE(b.feature_text.has_value());
  EXPECT_EQ(gherkin::parse_feature(*b.feature_text).name, "New");
}

TEST(IssueJson, UnparsableGherkinIsParseError) {
  try {
    bundle_from_issue_json("X-1", R"({"fields":{"summary":"S","description":"D\n```gherkin\nScenario: a\n```"}})", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse_error);
  }
}

TEST(LoadLocal, StoryWithFeature) {
  auto b = load_local(fixture_path("stories/SHOP-101"));
  EXPECT_EQ(b.issue_key, "SHOP-101");
  EXPECT_EQ(b.story.source_key, "SHOP-101");
  EXPECT_EQ(b.story.title, "Detailed information of physical products on the detail page");
  EXPECT_EQ(b.story.description.rfind("As a customer,", 0), 0u);
  ASSERT_TRUE(b.feature_text.has_value());
  EXPECT_EQ(*b.feature_text, shop101_feature_text());
}

TEST(LoadLocal, StoryWithoutFeature) {
  auto b = load_local(fixture_path("stories/SHOP-100"));
  EXPECT_EQ(b.story.title, "Alphabet User Sign-Up");
  EXPECT_FALSE(b.feature_text.has_value());
}

TEST(LoadLocal, Failures) {
  TempDir tmp;
  auto bad_name = tmp.path() / "not-a-key";
  std::filesystem::create_directories(bad_name);
  EXPECT_THROW(load_local(bad_name.string()), Error);

  auto empty = tmp.path() / "EMPTY-1";
  std::filesystem::create_directories(empty);
  try {
    load_local(empty.string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::not_found);
  }

  auto broken = tmp.path() / "BROKEN-1";
  std::filesystem::create_directories(broken);
  atgen::text::write_file((broken / "story.md").string(), "# T\n\nD\n");
  atgen::text::write_file((broken / "tests.feature").string(), "Scenario: no header\nGiven x\n");
  try {
    load_local(broken.string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse_error);
  }
}

TEST(PrDescription, InlineAndListedPages) {
  auto p = parse_pr_description(
      "Adds the accordion.\n\nIssue: SHOP-101\nPages: https://shop.example.com/a, https://shop.example.com/b\n"
      "- https://shop.example.com/c\nhttps://shop.example.com/a\n");
  EXPECT_EQ(p.issue_key, "SHOP-101");
  EXPECT_EQ(p.page_urls, (std::vector<std::string>{"https://shop.example.com/a", "https://shop.example.com/b",
                                                   "https://shop.example.com/c"}));
}

TEST(PrDescription, FirstMarkersWin) {
  auto p = parse_pr_description("issue: SHOP-1\nIssue: SHOP-2\nPages:\nhttps://x.example/1\nPages: https://x.example/2\n");
  EXPECT_EQ(p.issue_key, "SHOP-1");
  EXPECT_EQ(p.page_urls.front(), "https://x.example/1");
}

TEST(PrDescription, MissingParts) {
  auto reason_of = [](const std::string& text) {
    try {
      parse_pr_description(text);
    } catch (const Error& e) {
      return e.reason();
    }
    return std::string("none");
  };
  EXPECT_EQ(reason_of("Pages: https://a.example/\n"), "missing-issue");
  EXPECT_EQ(reason_of("Issue: SHOP-1\n"), "missing-pages");
  EXPECT_EQ(reason_of("Issue: SHOP-1\nPages: not-a-url /relative\n"), "missing-pages");
  EXPECT_EQ(reason_of("Issue: lower-1\nPages: https://a.example/\n"), "missing-issue");
}

TEST(PrDescription, UrlsBeforePagesMarkerIgnored) {
  auto p = parse_pr_description("See https://docs.example/x\nIssue: SHOP-9\nPages:\n* https://a.example/p\n");
  EXPECT_EQ(p.page_urls, std::vector<std::string>{"https://a.example/p"});
}
