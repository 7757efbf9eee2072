#include <gtest/gtest.h>

#include <cmath>

#include "atgen/error.hpp"
#include "atgen/prompt.hpp"
#include "atgen/story_source.hpp"
#include "support.hpp"

using namespace atgen;
using namespace atgen::prompt;
using namespace testing_support;

namespace {

TemplateStore bundled() { return TemplateStore::load(source_path("data/prompts")); }

gherkin::Feature one_scenario() {
  return gherkin::parse_feature("Feature: Sign-up\nScenario: Register\nGiven the form\nThen it works\n");
}

std::vector<page::PurgedPage> one_page(const std::string& url, const std::string& html) {
  auto p = page::purge(html);
  p.url = url;
  return {p};
}

std::size_t occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(ScenarioPrompt, ContainsTitleAndDescriptionOnce) {
  UserStory s{"Alphabet User Sign-Up", "As a new user I want to register with my Alphabet account.", std::nullopt};
  auto b = bundled().build_scenario_prompt(s);
  EXPECT_EQ(b.stage, Stage::scenarios);
  EXPECT_EQ(occurrences(b.user, "User Story Title: Alphabet User Sign-Up\n"), 1u);
  EXPECT_EQ(occurrences(b.user, "User Story Description: As a new user I want to register"), 1u);
  EXPECT_NE(b.system.find("Gherkin"), std::string::npos);
  EXPECT_EQ(b.user.find("{{"), std::string::npos);
  EXPECT_EQ(b.input_tokens, estimate_tokens(b.system) + estimate_tokens(b.user));
}

TEST(ScenarioPrompt, DeterministicForEqualInputs) {
  UserStory s{"T", "D", std::nullopt};
  auto store = bundled();
  EXPECT_EQ(store.build_scenario_prompt(s), store.build_scenario_prompt(s));
}

TEST(ScenarioPrompt, BlankTitleRejected) {
  try {
    bundled().build_scenario_prompt({" \t", "D", std::nullopt});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_input);
  }
  EXPECT_THROW(bundled().build_scenario_prompt({"T", "", std::nullopt}), Error);
}

TEST(ScriptPrompt, ContainsFeaturePagesAndContext) {
  auto ctx = ProductContext::load(fixture_path("product_context.json"));
  auto pages = one_page("https://shop.example.com/p", "<div data-testid=\"buy\">Kaufen</div><script>x()</script>");
  auto b = bundled().build_script_prompt({"Buy", "As a customer I buy.", std::nullopt}, one_scenario(), pages, ctx);
  EXPECT_EQ(b.stage, Stage::script);
  EXPECT_NE(b.user.find("Scenario: Register"), std::string::npos);
  EXPECT_NE(b.user.find("Page: https://shop.example.com/p\n```html\n<div data-testid=\"buy\">Kaufen</div>"),
            std::string::npos);
  EXPECT_EQ(b.user.find("x()"), std::string::npos);
  EXPECT_NE(b.system.find(ctx.context_text), std::string::npos);
  EXPECT_NE(b.system.find("cy.setTestCookies(): void;"), std::string::npos);
  for (const auto& practice : ctx.good_practices) EXPECT_NE(b.system.find("- " + practice), std::string::npos);
  EXPECT_EQ(b.user.find("Additional context:"), std::string::npos);
}

TEST(ScriptPrompt, MultiplePagesKeepOrderAndLabels) {
  std::vector<page::PurgedPage> pages = one_page("https://a.example/1", "<p>one</p>");
  pages.push_back(one_page("https://a.example/2", "<p>two</p>")[0]);
  auto b = bundled().build_script_prompt({"T", "D", std::nullopt}, one_scenario(), pages, ProductContext::defaults());
  auto first = b.user.find("Page: https://a.example/1");
  auto second = b.user.find("Page: https://a.example/2");
  ASSERT_NE(first, std::string::npos);
  ASSERT_NE(second, std::string::npos);
  EXPECT_LT(first, second);
}

TEST(ScriptPrompt, ExtraContextAppendedOnce) {
  auto pages = one_page("https://a.example/", "<p/>");
  auto b = bundled().build_script_prompt({"T", "D", std::nullopt}, one_scenario(), pages, ProductContext::defaults(),
                                         std::string("  The button is hidden, not disabled.  "));
  EXPECT_EQ(occurrences(b.user, "Additional context:\nThe button is hidden, not disabled."), 1u);
  EXPECT_TRUE(b.user.ends_with("\nThe button is hidden, not disabled."));
  auto blank = bundled().build_script_prompt({"T", "D", std::nullopt}, one_scenario(), pages,
                                             ProductContext::defaults(), std::string("   "));
  EXPECT_EQ(blank.user.find("Additional context:"), std::string::npos);
}

TEST(ScriptPrompt, ZeroPagesOrScenariosRejected) {
  std::vector<page::PurgedPage> none;
  try {
    bundled().build_script_prompt({"T", "D", std::nullopt}, one_scenario(), none, ProductContext::defaults());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_input);
    EXPECT_EQ(e.reason(), "pages");
  }
  auto pages = one_page("https://a.example/", "<p/>");
  EXPECT_THROW(bundled().build_script_prompt({"T", "D", std::nullopt}, gherkin::parse_feature("Feature: F\n"), pages,
                                             ProductContext::defaults()),
               Error);
}

TEST(ScriptPrompt, FixtureStoryLandsNearRecordedUsage) {
  auto bundle = stories::load_local(fixture_path("stories/SHOP-101"));
  page::FixturePageSource src(fixture_path("pages"));
  auto purged = page::purge(src.fetch(kProductUrl));
  purged.url = kProductUrl;
  std::vector<page::PurgedPage> pages{purged};
  auto b = bundled().build_script_prompt(bundle.story, gherkin::parse_feature(*bundle.feature_text), pages,
                                         ProductContext::load(fixture_path("product_context.json")));
  // The cassette records 9500 input tokens for this exchange.
  EXPECT_LE(std::abs(static_cast<double>(b.input_tokens) - 9500.0), 0.25 * 9500.0);
}

TEST(EstimateTokens, CeilingOfQuarterBytes) {
  EXPECT_EQ(estimate_tokens(""), 0u);
  EXPECT_EQ(estimate_tokens("abcd"), 1u);
  EXPECT_EQ(estimate_tokens("abcde"), 2u);
  EXPECT_EQ(estimate_tokens(std::string(4000, 'x')), 1000u);
}

TEST(Tokenizer, PluggableCounter) {
  auto store = bundled();
  store.set_tokenizer([](std::string_view s) { return s.size(); });
  auto b = store.build_scenario_prompt({"T", "D", std::nullopt});
  EXPECT_EQ(b.input_tokens, b.system.size() + b.user.size());
}

TEST(Interpolate, UnknownPlaceholderIsError) {
  EXPECT_EQ(interpolate("a {{x}} b", {{"x", "1"}}), "a 1 b");
  EXPECT_THROW(interpolate("{{nope}}", {}), Error);
}
