#include <gtest/gtest.h>

#include "atgen/config.hpp"
#include "atgen/error.hpp"
#include "atgen/pipeline.hpp"
#include "atgen/text.hpp"
#include "support.hpp"

using namespace atgen;
using namespace atgen::pipeline;
using namespace testing_support;

namespace {

// Pipeline over a scripted model and the fixture pages.
struct Harness {
  explicit Harness(ScriptedBackend::Fn fn)
      : templates(prompt::TemplateStore::load(source_path("data/prompts"))),
        pages(fixture_path("pages")),
        gateway(std::make_unique<ScriptedBackend>(std::move(fn)), {0.01, 0.03, "EUR"}),
        pipeline(templates, prompt::ProductContext::defaults(), gateway, pages) {}
  prompt::TemplateStore templates;
  page::FixturePageSource pages;
  gateway::Gateway gateway;
  Pipeline pipeline;
};

gateway::ModelResponse reply(const std::string& text, std::int64_t in = 100, std::int64_t out = 10) {
  return {text, {in, out}, "scripted-model", 1};
}

const char* kScript =
    "```typescript\ndescribe('s', () => {\n  it('Checkout is unavailable with an empty cart', () => {\n"
    "    // comment\n  });\n});\n```";

stories::StoryBundle shop102() { return stories::load_local(fixture_path("stories/SHOP-102")); }

}  // namespace

TEST(GoldenReplay, ScenariosReproduceRecordedFeature) {
  config::Runtime rt(offline_config());
  auto story = stories::load_local(fixture_path("stories/SHOP-100")).story;
  auto r = rt.pipeline().generate_scenarios(story);
  EXPECT_EQ(r.feature_text, golden_feature_text());
  EXPECT_EQ(r.feature.scenarios.size(), 4u);
  EXPECT_EQ(r.lint.count(gherkin::Severity::error), 0u);
  EXPECT_EQ(r.generation_id.size(), 16u);
  EXPECT_EQ(r.model_id, "gpt-4-1106-preview");
}

TEST(GoldenReplay, ScriptReproducesRecordedCode) {
  config::Runtime rt(offline_config());
  auto bundle = rt.resolve_issue("SHOP-101", true);
  auto r = rt.pipeline().generate_script(bundle, {kProductUrl});
  EXPECT_EQ(r.code.code + "\n", golden_script());
  EXPECT_EQ(r.code.fence_language_tag, "typescript");
  EXPECT_TRUE(r.structure.valid);
  EXPECT_EQ(r.mapping.matched.size(), 2u);
  EXPECT_EQ(r.usage, (gateway::Usage{9500, 750}));
  EXPECT_EQ(r.cost.str(), "0.1175");
  EXPECT_TRUE(r.warnings.empty());
  EXPECT_FALSE(r.parent_generation_id.has_value());
  ASSERT_EQ(r.inputs.pages.size(), 1u);
  EXPECT_EQ(r.inputs.pages[0].url, kProductUrl);
}

TEST(GoldenReplay, DriftedPromptIsCacheMissInScenarioStage) {
  config::Runtime rt(offline_config());
  try {
    rt.pipeline().generate_scenarios({"A story nobody recorded", "Nothing here.", std::nullopt});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::cache_miss);
    EXPECT_EQ(e.stage(), "scenarios");
  }
}

TEST(Scenarios, ProseAnswerIsUnparsable) {
  Harness h([](const prompt::PromptBundle&) { return reply("I am sorry, I cannot write tests for this."); });
  try {
    h.pipeline.generate_scenarios({"T", "D", std::nullopt});
    FAIL();
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.code(), Errc::unparsable_output);
    EXPECT_EQ(e.stage(), "scenarios");
    EXPECT_EQ(e.raw_response(), "I am sorry, I cannot write tests for this.");
  }
}

TEST(Scenarios, FencedGherkinIsUnwrapped) {
  Harness h([](const prompt::PromptBundle&) {
    return reply("Sure:\n```gherkin\nFeature: F\nScenario: S\nGiven a\n```\nDone.");
  });
  auto r = h.pipeline.generate_scenarios({"T", "D", std::nullopt});
  EXPECT_EQ(r.feature_text, "Feature: F\nScenario: S\nGiven a");
  EXPECT_EQ(r.cost, gateway::cost_of({100, 10}, h.gateway.rates()));
}

TEST(Script, UnknownPageNamesUrl) {
  Harness h([](const prompt::PromptBundle&) { return reply(kScript); });
  try {
    h.pipeline.generate_script(shop102(), {"https://shop.example.com/gone"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::http_status);
    EXPECT_EQ(e.status(), 404);
    EXPECT_EQ(e.subject(), "https://shop.example.com/gone");
    EXPECT_EQ(e.stage(), "script");
  }
}

TEST(Script, MissingFeatureTextAndNoPages) {
  int calls = 0;
  Harness h([&](const prompt::PromptBundle&) {
    ++calls;
    return reply(kScript);
  });
  auto bundle = shop102();
  bundle.feature_text.reset();
  try {
    h.pipeline.generate_script(bundle, {kCartUrl});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::missing_gherkin);
  }
  EXPECT_THROW(h.pipeline.generate_script(shop102(), {}), Error);
  EXPECT_EQ(calls, 0);
}

TEST(Script, ProseWithoutCodeBlock) {
  Harness h([](const prompt::PromptBundle&) { return reply("Here is what I would do in words."); });
  try {
    h.pipeline.generate_script(shop102(), {kCartUrl});
    FAIL();
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.code(), Errc::no_code_block);
    EXPECT_EQ(e.stage(), "script");
  }
}

TEST(Script, SeveralBlocksWarn) {
  Harness h([](const prompt::PromptBundle&) { return reply(std::string(kScript) + "\n```bash\nnpx cypress run\n```"); });
  auto r = h.pipeline.generate_script(shop102(), {kCartUrl});
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.code.fence_count_in_source, 2);
  EXPECT_EQ(r.mapping.missing_scenarios, std::vector<std::string>{"Empty cart shows a hint to continue shopping"});
}

TEST(Regeneration, LinksParentAndAccumulatesContext) {
  std::vector<std::string> prompts;
  Harness h([&](const prompt::PromptBundle& b) {
    prompts.push_back(b.user);
    return reply(kScript);
  });
  auto first = h.pipeline.generate_script(shop102(), {kCartUrl}, std::string("first note"));
  auto second = h.pipeline.regenerate_with_context(first, "second note");
  auto third = h.pipeline.regenerate_with_context(second, "third note");
  EXPECT_EQ(second.parent_generation_id, first.generation_id);
  EXPECT_EQ(third.parent_generation_id, second.generation_id);
  EXPECT_EQ(second.regeneration_depth, 1);
  EXPECT_EQ(third.regeneration_depth, 2);
  EXPECT_NE(first.generation_id, second.generation_id);
  EXPECT_EQ(third.inputs.extra_context, "first note\nsecond note\nthird note");
  EXPECT_NE(prompts[2].find("Additional context:\nfirst note\nsecond note\nthird note"), std::string::npos);
  // The purged pages are reused, not refetched.
  EXPECT_EQ(third.inputs.pages[0].html, first.inputs.pages[0].html);
}

TEST(Regeneration, BlankContextRejected) {
  Harness h([](const prompt::PromptBundle&) { return reply(kScript); });
  auto first = h.pipeline.generate_script(shop102(), {kCartUrl});
  try {
    h.pipeline.regenerate_with_context(first, "  \n ");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_input);
  }
}

TEST(Regeneration, GoldenCartFlow) {
  config::Runtime rt(offline_config());
  auto first = rt.pipeline().generate_script(rt.resolve_issue("SHOP-102", true), {kCartUrl});
  EXPECT_NE(first.code.code.find("be.disabled"), std::string::npos);
  auto context = std::string(text::trim(read(fixture_path("responses/shop102_context.txt"))));
  auto second = rt.pipeline().regenerate_with_context(first, context);
  EXPECT_NE(second.code.code.find("not.exist"), std::string::npos);
  EXPECT_TRUE(second.structure.valid);
  EXPECT_EQ(rt.gateway().total_cost(), first.cost + second.cost);
}

TEST(Cost, StagesAddUp) {
  Harness h([](const prompt::PromptBundle& b) {
    return b.stage == prompt::Stage::scenarios ? reply("Feature: F\nScenario: S\nGiven a\n", 1234, 567)
                                               : reply(kScript, 8000, 900);
  });
  auto s = h.pipeline.generate_scenarios({"T", "D", std::nullopt});
  auto c = h.pipeline.generate_script(shop102(), {kCartUrl});
  EXPECT_EQ(h.gateway.total_cost(), s.cost + c.cost);
  EXPECT_EQ(h.gateway.total_usage(), (gateway::Usage{9234, 1467}));
}

TEST(CaseMachine, VerdictOutcomes) {
  CaseState fresh{"g#0", CaseStatus::generated, {}};
  EXPECT_EQ(record_verdict(fresh, Verdict::pass, "").status, CaseStatus::valid_as_generated);
  EXPECT_EQ(record_verdict(fresh, Verdict::minor_error, "testid typo").status, CaseStatus::minor_fixed);
  EXPECT_EQ(record_verdict(fresh, Verdict::lack_of_context, "").status, CaseStatus::awaiting_regeneration);
  EXPECT_EQ(record_verdict(fresh, Verdict::complex_error, "").status, CaseStatus::discarded);
}

TEST(CaseMachine, RegeneratedThenPassed) {
  CaseState s{"g#0", CaseStatus::generated, {}};
  s = record_verdict(s, Verdict::lack_of_context, "unknown state");
  s = record_regeneration(s, "g2");
  s = record_verdict(s, Verdict::pass, "");
  EXPECT_EQ(s.status, CaseStatus::regenerated_valid);
  EXPECT_EQ(s.regenerations(), 1);
  EXPECT_EQ(s.history.size(), 3u);
  EXPECT_EQ(s.history[1].detail, "g2");
}

TEST(CaseMachine, TerminalStatesRejectEverything) {
  CaseState s{"g#0", CaseStatus::generated, {}};
  s = record_verdict(s, Verdict::pass, "");
  try {
    record_verdict(s, Verdict::pass, "");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::illegal_transition);
  }
  EXPECT_THROW(record_regeneration(s, "g2"), Error);
  CaseState fresh{"g#1", CaseStatus::generated, {}};
  EXPECT_THROW(record_regeneration(fresh, "g2"), Error);
}

TEST(CaseMachine, MinorFixNeedsNoteAndOneLinePatch) {
  CaseState s{"g#0", CaseStatus::generated, {}};
  EXPECT_THROW(record_verdict(s, Verdict::minor_error, " "), Error);
  MinorPatch one{"a\nb\nc\n", "a\nB\nc\n"};
  EXPECT_EQ(record_verdict(s, Verdict::minor_error, "fix", one).status, CaseStatus::minor_fixed);
  MinorPatch two{"a\nb\nc\n", "A\nb\nC\n"};
  try {
    record_verdict(s, Verdict::minor_error, "fix", two);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_input);
  }
}

TEST(CaseMachine, ChangedLineCount) {
  EXPECT_EQ(changed_line_count("a\nb\nc", "a\nb\nc"), 0);
  EXPECT_EQ(changed_line_count("a\nb\nc", "a\nx\nc"), 1);
  EXPECT_EQ(changed_line_count("a\nc", "a\nb\nc"), 1);
  EXPECT_EQ(changed_line_count("", "x"), 1);
}

TEST(CaseMachine, StringRoundTrip) {
  for (auto st : {CaseStatus::generated, CaseStatus::awaiting_regeneration, CaseStatus::valid_as_generated,
                  CaseStatus::minor_fixed, CaseStatus::regenerated_valid, CaseStatus::discarded})
    EXPECT_EQ(case_status_from_string(to_string(st)), st);
  EXPECT_EQ(verdict_from_string("lack_of_context"), Verdict::lack_of_context);
  EXPECT_THROW(verdict_from_string("meh"), Error);
}
