#include "atgen/pipeline.hpp"

#include <algorithm>

#include "atgen/text.hpp"

namespace atgen::pipeline {

Pipeline::Pipeline(const prompt::TemplateStore& templates, prompt::ProductContext context, gateway::Gateway& gateway,
                   page::PageSource& pages, extract::DialectProfile dialect, page::PurgeOptions purge)
    : templates_(templates),
      context_(std::move(context)),
      gateway_(gateway),
      pages_(pages),
      dialect_(std::move(dialect)),
      purge_(purge),
      clock_([] { return Clock::now(); }) {}

std::string Pipeline::next_generation_id(const std::string& stage, const std::string& request_digest,
                                         Clock::time_point at) {
  auto ticks = std::chrono::duration_cast<std::chrono::microseconds>(at.time_since_epoch()).count();
  auto seq = sequence_.fetch_add(1);
  return text::sha256_hex(stage + "|" + request_digest + "|" + std::to_string(ticks) + "|" + std::to_string(seq))
      .substr(0, 16);
}

std::string gherkin_from_response(std::string_view response) {
  if (auto block = extract::find_fenced_code(response)) return block->code;
  return std::string(response);
}

namespace {

template <typename Fn>
auto tagged(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (PipelineError& e) {
    e.in_stage(stage);
    throw;
  } catch (Error& e) {
    e.in_stage(stage);
    throw;
  }
}

}  // namespace

ScenarioResult Pipeline::generate_scenarios(const prompt::UserStory& story) {
  return tagged("scenarios", [&] {
    ScenarioResult r;
    r.story = story;
    r.prompt = templates_.build_scenario_prompt(story);
    auto completion = gateway_.complete(r.prompt);
    r.raw_response = completion.response.text;
    r.usage = completion.response.usage;
    r.cost = completion.cost;
    r.model_id = completion.response.model_id.empty() ? gateway_.model_id() : completion.response.model_id;
    r.feature_text = gherkin_from_response(r.raw_response);
    try {
      r.feature = gherkin::parse_feature(r.feature_text);
    } catch (const Error& e) {
      throw PipelineError(Errc::unparsable_output, std::string("model output is not valid Gherkin: ") + e.what(),
                          r.raw_response);
    }
    r.lint = gherkin::lint_feature(r.feature);
    r.created_at = clock_();
    r.generation_id = next_generation_id(
        "scenarios", gateway::request_digest(r.prompt, gateway_.params(), gateway_.model_id()), r.created_at);
    return r;
  });
}

ScriptResult Pipeline::generate_script(const stories::StoryBundle& bundle, const std::vector<std::string>& page_urls,
                                       const std::optional<std::string>& extra_context) {
  return tagged("script", [&] {
    if (!bundle.feature_text)
      throw Error(Errc::missing_gherkin, "story " + bundle.issue_key + " has no Gherkin scenarios")
          .about(bundle.issue_key);
    if (page_urls.empty()) throw Error(Errc::invalid_input, "at least one page URL is required").with_reason("page_urls");
    ScriptInputs inputs;
    inputs.bundle = bundle;
    inputs.extra_context = extra_context;
    for (const auto& url : page_urls) inputs.pages.push_back(page::purge(pages_.fetch(url), purge_));
    return run_script_stage(std::move(inputs));
  });
}

ScriptResult Pipeline::regenerate_with_context(const ScriptResult& prev, const std::string& extra_context) {
  return tagged("script", [&] {
    if (text::trim(extra_context).empty())
      throw Error(Errc::invalid_input, "regeneration needs non-empty extra context").with_reason("extra_context");
    ScriptInputs inputs = prev.inputs;
    std::string combined(text::trim(extra_context));
    if (inputs.extra_context && !text::trim(*inputs.extra_context).empty())
      combined = std::string(text::trim(*inputs.extra_context)) + "\n" + combined;
    inputs.extra_context = combined;
    auto r = run_script_stage(std::move(inputs));
    r.parent_generation_id = prev.generation_id;
    r.regeneration_depth = prev.regeneration_depth + 1;
    return r;
  });
}

ScriptResult Pipeline::run_script_stage(ScriptInputs inputs) {
  ScriptResult r;
  try {
    r.feature = gherkin::parse_feature(*inputs.bundle.feature_text);
  } catch (const Error& e) {
    throw Error(Errc::missing_gherkin, "Gherkin for " + inputs.bundle.issue_key + " does not parse: " + e.what())
        .about(inputs.bundle.issue_key);
  }
  r.inputs = std::move(inputs);
  r.prompt = templates_.build_script_prompt(r.inputs.bundle.story, r.feature, r.inputs.pages, context_,
                                            r.inputs.extra_context);
  auto completion = gateway_.complete(r.prompt);
  r.raw_response = completion.response.text;
  r.usage = completion.response.usage;
  r.cost = completion.cost;
  r.model_id = completion.response.model_id.empty() ? gateway_.model_id() : completion.response.model_id;

  auto block = extract::find_fenced_code(r.raw_response);
  if (!block)
    throw PipelineError(Errc::no_code_block, "model response contains no fenced code block", r.raw_response);
  r.code = std::move(*block);
  if (r.code.fence_count_in_source > 1)
    r.warnings.push_back("response has " + std::to_string(r.code.fence_count_in_source) +
                         " code blocks; using the first");
  r.structure = extract::validate_script_structure(r.code.code, dialect_);
  r.mapping = extract::check_scenario_mapping(r.feature, r.structure);
  r.created_at = clock_();
  r.generation_id =
      next_generation_id("script", gateway::request_digest(r.prompt, gateway_.params(), gateway_.model_id()), r.created_at);
  return r;
}

// ---------------------------------------------------------------------------

std::string_view to_string(CaseStatus s) {
  switch (s) {
    case CaseStatus::generated: return "generated";
    case CaseStatus::awaiting_regeneration: return "awaiting_regeneration";
    case CaseStatus::valid_as_generated: return "valid_as_generated";
    case CaseStatus::minor_fixed: return "minor_fixed";
    case CaseStatus::regenerated_valid: return "regenerated_valid";
    case CaseStatus::discarded: return "discarded";
  }
  return "generated";
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::minor_error: return "minor_error";
    case Verdict::lack_of_context: return "lack_of_context";
    case Verdict::complex_error: return "complex_error";
  }
  return "pass";
}

CaseStatus case_status_from_string(std::string_view s) {
  for (auto st : {CaseStatus::generated, CaseStatus::awaiting_regeneration, CaseStatus::valid_as_generated,
                  CaseStatus::minor_fixed, CaseStatus::regenerated_valid, CaseStatus::discarded})
    if (to_string(st) == s) return st;
  throw Error(Errc::invalid_input, "unknown case status '" + std::string(s) + "'");
}

Verdict verdict_from_string(std::string_view s) {
  for (auto v : {Verdict::pass, Verdict::minor_error, Verdict::lack_of_context, Verdict::complex_error})
    if (to_string(v) == s) return v;
  throw Error(Errc::invalid_input, "unknown verdict '" + std::string(s) + "'").with_reason("verdict");
}

bool is_terminal(CaseStatus s) {
  return s == CaseStatus::valid_as_generated || s == CaseStatus::minor_fixed || s == CaseStatus::regenerated_valid ||
         s == CaseStatus::discarded;
}

int CaseState::regenerations() const {
  return static_cast<int>(
      std::count_if(history.begin(), history.end(), [](const Transition& t) { return t.event == "regeneration"; }));
}

int changed_line_count(std::string_view before, std::string_view after) {
  auto a = text::split_lines(before);
  auto b = text::split_lines(after);
  std::size_t prefix = 0;
  while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) ++prefix;
  std::size_t suffix = 0;
  while (suffix < a.size() - prefix && suffix < b.size() - prefix &&
         a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix])
    ++suffix;
  return static_cast<int>(std::max(a.size(), b.size()) - prefix - suffix);
}

CaseState record_verdict(CaseState state, Verdict verdict, const std::string& detail,
                         const std::optional<MinorPatch>& patch) {
  if (state.status != CaseStatus::generated) {
    throw Error(Errc::illegal_transition, "case " + state.case_id + " is " + std::string(to_string(state.status)) +
                                              " and cannot take verdict " + std::string(to_string(verdict)))
        .about(state.case_id);
  }
  CaseStatus next = CaseStatus::generated;
  switch (verdict) {
    case Verdict::pass:
      next = state.regenerations() > 0 ? CaseStatus::regenerated_valid : CaseStatus::valid_as_generated;
      break;
    case Verdict::minor_error:
      if (text::trim(detail).empty())
        throw Error(Errc::invalid_input, "a minor fix needs a note describing the patch").with_reason("detail");
      if (patch && changed_line_count(patch->before, patch->after) > 1)
        throw Error(Errc::invalid_input, "a minor fix may change at most one line").with_reason("patch");
      next = CaseStatus::minor_fixed;
      break;
    case Verdict::lack_of_context:
      next = CaseStatus::awaiting_regeneration;
      break;
    case Verdict::complex_error:
      next = CaseStatus::discarded;
      break;
  }
  state.history.push_back({state.status, next, std::string(to_string(verdict)), detail});
  state.status = next;
  return state;
}

CaseState record_regeneration(CaseState state, const std::string& new_generation_id) {
  if (state.status != CaseStatus::awaiting_regeneration) {
    throw Error(Errc::illegal_transition, "case " + state.case_id + " is " + std::string(to_string(state.status)) +
                                              "; only a case awaiting regeneration can be regenerated")
        .about(state.case_id);
  }
  state.history.push_back({state.status, CaseStatus::generated, "regeneration", new_generation_id});
  state.status = CaseStatus::generated;
  return state;
}

}  // namespace atgen::pipeline
