// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "atgen/config.hpp"
#include "atgen/eval.hpp"
#include "atgen/ledger.hpp"
#include "atgen/service.hpp"
#include "atgen/text.hpp"
#include "support.hpp"

using namespace atgen;
using namespace testing_support;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::pair<int, std::string> run(const std::string& cmd) {
  std::string out;
  FILE* p = popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!p) return {-1, ""};
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

void classification(Outcome& o) {
  auto start = Clock::now();
  auto [code, out] = run(std::string(ATGEN_CLI) + " report --ledger " + fixture_path("runs/reviewed") + " --format text");
  double elapsed = seconds_since(start);
  o.require(code == 0, "report exit 0");
  for (const char* line : {"test cases: 50\n", "  valid_as_generated: 30 (60%)\n", "  minor_fixed: 4 (8%)\n",
                           "  regenerated_valid: 12 (24%)\n", "  discarded: 4 (8%)\n",
                           "semantic relevance (after remediation): 92%\n", "syntactic correctness: 100%\n",
                           "accessibility: 100%\n"})
    o.require(contains(out, line), std::string("line '") + std::string(text::trim(line)) + "'");

  auto m = eval::compute_metrics(ledger::read_ledger(fixture_path("runs/reviewed")));
  o.require(m.count(pipeline::CaseStatus::valid_as_generated) == 30 && m.count(pipeline::CaseStatus::minor_fixed) == 4 &&
                m.count(pipeline::CaseStatus::regenerated_valid) == 12 && m.count(pipeline::CaseStatus::discarded) == 4,
            "counts 30/4/12/4");
  o.require(elapsed < 1.0, "runtime < 1 s");
  o.detail << "60/8/24/8%, after remediation " << eval::format_percent(m.semantic_relevance_after_remediation)
           << ", syntactic " << eval::format_percent(m.syntactic_correctness) << ", accessibility "
           << eval::format_percent(m.accessibility) << " in " << elapsed << " s";
}

void feedback(Outcome& o) {
  auto fb = eval::feedback_records(ledger::read_ledger(fixture_path("runs/feedback")));
  auto helpful = std::count_if(fb.begin(), fb.end(), [](const auto& f) { return f.helpful; });
  o.require(fb.size() == 65 && helpful == 62, "65 records, 62 helpful");
  auto rendered = eval::format_percent(eval::feedback_rate(fb));
  o.require(rendered == "95%", "renders 95%");
  o.detail << helpful << "/" << fb.size() << " -> " << rendered;
}

void cost(Outcome& o) {
  auto c = gateway::cost_of({9500, 750}, {0.01, 0.03, "EUR"});
  o.require(c.str() == "0.1175", "cost 0.1175");
  double deviation = std::abs(c.value() - 0.12) / 0.12;
  o.require(deviation <= 0.05, "within 5% of 0.12");
  o.detail << c.str() << " EUR, " << std::round(deviation * 1000) / 10 << "% from 0.12";
}

void golden_replay(Outcome& o) {
  auto cfg = offline_config();
  o.require(cfg.backend == config::BackendMode::replay && !cfg.pages_fixture_dir.empty(), "replay backend, fixture pages");
  auto start = Clock::now();
  config::Runtime rt(cfg);
  auto story = stories::load_local(fixture_path("stories/SHOP-100")).story;
  auto scenarios = rt.pipeline().generate_scenarios(story);
  o.require(scenarios.feature_text == golden_feature_text(), "feature byte-equal");
  o.require(gherkin::parse_feature(scenarios.feature_text).scenarios.size() == 4, "4 scenarios");

  auto script = rt.pipeline().generate_script(rt.resolve_issue("SHOP-101", true), {kProductUrl});
  double elapsed = seconds_since(start);
  o.require(script.structure.valid, "structure valid");
  o.require(script.mapping.matched.size() == 2 && script.mapping.missing_scenarios.empty(), "mapping 2/2");
  o.require(script.mapping.comment_coverage == 1.0, "comment coverage 1.0");
  o.require(elapsed < 2.0, "runtime < 2 s");
  o.detail << "feature " << scenarios.feature_text.size() << " bytes, 4 scenarios; script valid, mapped "
           << script.mapping.matched.size() << "/" << script.feature.scenarios.size() << ", coverage "
           << script.mapping.comment_coverage << " in " << elapsed << " s";
}

void properties(Outcome& o) {
  const std::string filter =
      "GherkinProperty.RoundTripIdentity:PurgeProperty.*:StructureProperty.SingleDelimiterDeletionInvalidates:"
      "MappingProperty.*:StateMachineProperty.*";
  auto [code, out] = run(std::string(ATGEN_PROPERTY_TESTS) + " --gtest_filter='" + filter + "'");
  o.require(code == 0, "property suites pass");
  o.require(contains(out, "[  PASSED  ] 5 tests."), "5 property suites ran");
  o.detail << "round-trip, purge, delimiter deletion, mapping conservation, state machine; 300 cases each";
}

void service_contract(Outcome& o) {
  auto start = Clock::now();
  TempDir dir;
  config::Runtime rt(offline_config());
  ledger::RunLedger ledger(dir.str());
  service::Service svc(rt, ledger);
  auto post = [&](const std::string& path, const json& body) { return svc.handle("POST", path, body.dump()); };
  auto events = [&] { return ledger.read_all().size(); };

  auto story = stories::load_local(fixture_path("stories/SHOP-100")).story;
  std::vector<std::pair<std::string, std::function<bool()>>> checks;
  std::string generation;
  checks.emplace_back("scenarios 200", [&] {
    auto r = post("/v1/scenarios", {{"title", story.title}, {"description", story.description}});
    if (r.status != 200) return false;
    auto j = json::parse(r.body);
    generation = j["generation_id"];
    return j["feature_text"] == golden_feature_text();
  });
  checks.emplace_back("scenarios 400", [&] { return post("/v1/scenarios", {{"title", "T"}}).status == 400; });
  checks.emplace_back("scenarios 502", [&] {
    return post("/v1/scenarios", {{"title", "Unrecorded"}, {"description", "No cassette entry."}}).status == 502;
  });
  checks.emplace_back("scripts 200", [&] {
    auto r = post("/v1/scripts", {{"issue_key", "SHOP-101"}, {"page_urls", json::array({kProductUrl})}});
    return r.status == 200 && json::parse(r.body)["mapping"]["matched"].size() == 2;
  });
  checks.emplace_back("scripts 404", [&] {
    return post("/v1/scripts", {{"issue_key", "NOPE-1"}, {"page_urls", json::array({kProductUrl})}}).status == 404;
  });
  checks.emplace_back("scripts 422", [&] {
    return post("/v1/scripts", {{"issue_key", "SHOP-100"}, {"page_urls", json::array({kProductUrl})}}).status == 422;
  });
  checks.emplace_back("scripts 400", [&] {
    return post("/v1/scripts", {{"issue_key", "SHOP-101"}, {"page_urls", json::array()}}).status == 400;
  });
  checks.emplace_back("feedback 204", [&] {
    return post("/v1/feedback", {{"generation_id", generation}, {"helpful", true}}).status == 204;
  });
  checks.emplace_back("feedback 404", [&] {
    return post("/v1/feedback", {{"generation_id", "ffffffffffffffff"}, {"helpful", true}}).status == 404;
  });
  checks.emplace_back("summary 200", [&] {
    auto r = svc.handle("GET", "/v1/reports/summary", "");
    return r.status == 200 && json::parse(r.body)["cases"] == 2;
  });

  int passed = 0;
  for (auto& [name, check] : checks) {
    auto before = events();
    bool ok = false;
    try {
      ok = check();
    } catch (const std::exception&) {
      ok = false;
    }
    // Every request but the summary read appends exactly one event.
    bool one_event = events() == before + (name == "summary 200" ? 0 : 1);
    o.require(ok && one_event, name);
    passed += ok && one_event;
  }
  double elapsed = seconds_since(start);
  o.require(elapsed < 60.0, "runtime < 60 s");
  o.detail << passed << "/" << checks.size() << " endpoint checks in " << elapsed << " s";
}

void token_size(Outcome& o) {
  auto templates = prompt::TemplateStore::load(source_path("data/prompts"));
  auto bundle = stories::load_local(fixture_path("stories/SHOP-101"));
  page::FixturePageSource src(fixture_path("pages"));
  auto purged = page::purge(src.fetch(kProductUrl));
  purged.url = kProductUrl;
  std::vector<page::PurgedPage> pages{purged};
  auto b = templates.build_script_prompt(bundle.story, gherkin::parse_feature(*bundle.feature_text), pages,
                                         prompt::ProductContext::load(fixture_path("product_context.json")));
  auto bytes = b.system.size() + b.user.size();
  auto tokens = b.input_tokens;
  double deviation = std::abs(static_cast<double>(tokens) - 9500.0) / 9500.0;
  o.require(deviation <= 0.25, "within 25% of 9500");
  o.detail << bytes << " bytes -> " << tokens << " tokens, " << std::round(deviation * 1000) / 10 << "% from 9500";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"classification reproduction", classification},
      {"feedback reproduction", feedback},
      {"cost reproduction", cost},
      {"golden pipeline replay", golden_replay},
      {"property suites", properties},
      {"service contract", service_contract},
      {"token-size sanity", token_size},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failures += o.ok ? 0 : 1;
    std::cout << (o.ok ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail.str()
              << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
