#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "atgen/error.hpp"
#include "atgen/extract.hpp"
#include "atgen/gateway.hpp"
#include "atgen/gherkin.hpp"
#include "atgen/page.hpp"
#include "atgen/prompt.hpp"
#include "atgen/story_source.hpp"

namespace atgen::pipeline {

using Clock = std::chrono::system_clock;

// Raised when a stage fails after the model answered; keeps the raw response
// for diagnosis.
class PipelineError : public Error {
 public:
  PipelineError(Errc code, const std::string& message, std::string raw_response)
      : Error(code, message), raw_response_(std::move(raw_response)) {}
  const std::string& raw_response() const { return raw_response_; }

 private:
  std::string raw_response_;
};

struct ScenarioResult {
  prompt::UserStory story;
  prompt::PromptBundle prompt;
  std::string raw_response;
  std::string feature_text;  // the Gherkin as extracted from the response
  gherkin::Feature feature;
  gherkin::LintReport lint;
  gateway::Usage usage;
  gateway::Money cost;
  std::string model_id;
  std::string generation_id;
  Clock::time_point created_at{};
};

struct ScriptInputs {
  stories::StoryBundle bundle;
  std::vector<page::PurgedPage> pages;
  std::optional<std::string> extra_context;
};

struct ScriptResult {
  ScriptInputs inputs;
  gherkin::Feature feature;
  prompt::PromptBundle prompt;
  std::string raw_response;
  extract::CodeBlock code;
  extract::StructureReport structure;
  extract::MappingReport mapping;
  std::vector<std::string> warnings;
  gateway::Usage usage;
  gateway::Money cost;
  std::string model_id;
  std::string generation_id;
  std::optional<std::string> parent_generation_id;
  int regeneration_depth = 0;
  Clock::time_point created_at{};
};

class Pipeline {
 public:
  Pipeline(const prompt::TemplateStore& templates, prompt::ProductContext context, gateway::Gateway& gateway,
           page::PageSource& pages, extract::DialectProfile dialect = {}, page::PurgeOptions purge = {});

  // Stage 1: story -> Gherkin. Errors carry stage "scenarios".
  ScenarioResult generate_scenarios(const prompt::UserStory& story);

  // Stage 2: story + Gherkin + pages -> test script. Errors carry stage "script".
  ScriptResult generate_script(const stories::StoryBundle& bundle, const std::vector<std::string>& page_urls,
                               const std::optional<std::string>& extra_context = std::nullopt);

  // Reruns stage 2 with `extra_context` appended to any context the previous
  // generation already had. Reuses the previous purged pages.
  ScriptResult regenerate_with_context(const ScriptResult& prev, const std::string& extra_context);

  void set_clock(std::function<Clock::time_point()> clock) { clock_ = std::move(clock); }

 private:
  ScriptResult run_script_stage(ScriptInputs inputs);
  std::string next_generation_id(const std::string& stage, const std::string& request_digest,
                                 Clock::time_point at);

  const prompt::TemplateStore& templates_;
  prompt::ProductContext context_;
  gateway::Gateway& gateway_;
  page::PageSource& pages_;
  extract::DialectProfile dialect_;
  page::PurgeOptions purge_;
  std::function<Clock::time_point()> clock_;
  std::atomic<std::uint64_t> sequence_{0};
};

// Gherkin inside a response: the first fenced block when there is one,
// otherwise the whole response.
std::string gherkin_from_response(std::string_view response);

// ---------------------------------------------------------------------------
// Per-test-case classification lifecycle.

enum class CaseStatus { generated, awaiting_regeneration, valid_as_generated, minor_fixed, regenerated_valid, discarded };
enum class Verdict { pass, minor_error, lack_of_context, complex_error };

std::string_view to_string(CaseStatus s);
std::string_view to_string(Verdict v);
CaseStatus case_status_from_string(std::string_view s);
Verdict verdict_from_string(std::string_view s);
bool is_terminal(CaseStatus s);

struct Transition {
  CaseStatus from = CaseStatus::generated;
  CaseStatus to = CaseStatus::generated;
  std::string event;  // verdict name or "regeneration"
  std::string detail;
};

struct CaseState {
  std::string case_id;
  CaseStatus status = CaseStatus::generated;
  std::vector<Transition> history;

  int regenerations() const;
};

// The manual one-line fix behind a minor_error verdict.
struct MinorPatch {
  std::string before;
  std::string after;
};

// Lines touched when turning `before` into `after` (common prefix and suffix
// lines excluded).
int changed_line_count(std::string_view before, std::string_view after);

// pass -> valid_as_generated, or regenerated_valid after a regeneration;
// minor_error -> minor_fixed (needs a note; a patch, if given, may touch at
// most one line); lack_of_context -> awaiting_regeneration;
// complex_error -> discarded. Only a `generated` case accepts a verdict;
// anything else is an illegal_transition error.
CaseState record_verdict(CaseState state, Verdict verdict, const std::string& detail,
                         const std::optional<MinorPatch>& patch = std::nullopt);

// awaiting_regeneration -> generated, recording the new generation id.
CaseState record_regeneration(CaseState state, const std::string& new_generation_id);

}  // namespace atgen::pipeline
