#include "atgen/ledger.hpp"

#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "atgen/text.hpp"

namespace atgen::ledger {

namespace fs = std::filesystem;

namespace {

std::string resolve_path(const std::string& location) {
  fs::path p(location);
  if (p.extension() == ".jsonl") return p.string();
  return (p / "ledger.jsonl").string();
}

json usage_json(const gateway::Usage& u) {
  return {{"input_tokens", u.input_tokens}, {"output_tokens", u.output_tokens}};
}

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

}  // namespace

RunLedger::RunLedger(const std::string& location) : path_(resolve_path(location)) {
  auto dir = fs::path(path_).parent_path();
  if (!dir.empty()) fs::create_directories(dir);
}

void RunLedger::append(const json& record) {
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot append to " + path_).about(path_);
  out << record.dump() << '\n';
  out.flush();
}

std::vector<json> RunLedger::read_all() const {
  std::lock_guard lock(mutex_);
  return read_ledger(path_);
}

std::vector<json> read_ledger(const std::string& location) {
  auto path = resolve_path(location);
  std::vector<json> records;
  if (!fs::exists(path)) return records;
  std::ifstream in(path, std::ios::binary);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw Error(Errc::parse_error, path + ":" + std::to_string(line_no) + ": malformed ledger record")
          .at_line(line_no)
          .about(path);
    records.push_back(std::move(j));
  }
  return records;
}

std::string iso8601(pipeline::Clock::time_point t) {
  auto secs = pipeline::Clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json to_json(const gherkin::LintReport& r) {
  json arr = json::array();
  for (const auto& f : r.findings)
    arr.push_back({{"severity", gherkin::to_string(f.severity)}, {"code", f.code}, {"line", f.line}, {"message", f.message}});
  return arr;
}

json to_json(const extract::StructureReport& r) {
  json findings = json::array();
  for (const auto& f : r.findings)
    findings.push_back({{"severity", gherkin::to_string(f.severity)}, {"code", f.code}, {"line", f.line}, {"message", f.message}});
  json blocks = json::array();
  for (const auto& b : r.test_blocks)
    blocks.push_back({{"title", b.title}, {"first_line", b.first_line}, {"last_line", b.last_line}, {"comment_lines", b.comment_lines}});
  return {{"valid", r.valid},
          {"comment_lines", r.comment_lines},
          {"test_block_titles", r.test_block_titles},
          {"test_blocks", blocks},
          {"findings", findings}};
}

extract::StructureReport structure_from_json(const json& j) {
  extract::StructureReport r;
  r.valid = j.at("valid").get<bool>();
  r.comment_lines = j.value("comment_lines", 0);
  for (const auto& f : j.value("findings", json::array())) {
    extract::StructureFinding sf;
    sf.severity = f.value("severity", "error") == "error" ? gherkin::Severity::error : gherkin::Severity::warning;
    sf.code = f.value("code", "");
    sf.line = f.value("line", 1);
    sf.message = f.value("message", "");
    r.findings.push_back(std::move(sf));
  }
  for (const auto& b : j.value("test_blocks", json::array())) {
    extract::TestBlock tb;
    tb.title = b.at("title").get<std::string>();
    tb.first_line = b.value("first_line", 0);
    tb.last_line = b.value("last_line", 0);
    tb.comment_lines = b.value("comment_lines", 0);
    r.test_block_titles.push_back(tb.title);
    r.test_blocks.push_back(std::move(tb));
  }
  return r;
}

json to_json(const extract::MappingReport& r) {
  json matched = json::array();
  for (const auto& [s, t] : r.matched) matched.push_back({{"scenario", s}, {"test", t}});
  return {{"matched", matched},
          {"missing_scenarios", r.missing_scenarios},
          {"extra_tests", r.extra_tests},
          {"comment_coverage", r.comment_coverage}};
}

json scenario_event(const pipeline::ScenarioResult& r, const std::string& currency) {
  return {{"event", "scenario_generation"},
          {"generation_id", r.generation_id},
          {"timestamp", iso8601(r.created_at)},
          {"story", {{"title", r.story.title}, {"description", r.story.description}, {"key", optional_string(r.story.source_key)}}},
          {"model_id", r.model_id},
          {"raw_response", r.raw_response},
          {"feature_text", r.feature_text},
          {"scenario_count", r.feature.scenarios.size()},
          {"lint", to_json(r.lint)},
          {"usage", usage_json(r.usage)},
          {"cost", r.cost.value()},
          {"currency", currency}};
}

json script_event(const pipeline::ScriptResult& r, const std::string& currency) {
  json urls = json::array();
  for (const auto& p : r.inputs.pages) urls.push_back(p.url);
  const auto& story = r.inputs.bundle.story;
  return {{"event", "script_generation"},
          {"generation_id", r.generation_id},
          {"parent_generation_id", optional_string(r.parent_generation_id)},
          {"regeneration_depth", r.regeneration_depth},
          {"timestamp", iso8601(r.created_at)},
          {"issue_key", r.inputs.bundle.issue_key},
          {"story", {{"title", story.title}, {"description", story.description}}},
          {"feature_text", r.inputs.bundle.feature_text.value_or("")},
          {"page_urls", urls},
          {"extra_context", optional_string(r.inputs.extra_context)},
          {"model_id", r.model_id},
          {"raw_response", r.raw_response},
          {"code", r.code.code},
          {"fence_language_tag", optional_string(r.code.fence_language_tag)},
          {"fence_count", r.code.fence_count_in_source},
          {"warnings", r.warnings},
          {"structure", to_json(r.structure)},
          {"mapping", to_json(r.mapping)},
          {"usage", usage_json(r.usage)},
          {"cost", r.cost.value()},
          {"currency", currency}};
}

json verdict_event(const std::string& case_id, pipeline::Verdict verdict, const std::string& detail,
                   const std::optional<pipeline::MinorPatch>& patch, pipeline::CaseStatus after) {
  json j = {{"event", "verdict"},
            {"case_id", case_id},
            {"verdict", pipeline::to_string(verdict)},
            {"detail", detail},
            {"state_after", pipeline::to_string(after)}};
  if (patch) j["patch"] = {{"before", patch->before}, {"after", patch->after}};
  return j;
}

json regeneration_event(const std::string& case_id, const std::string& new_generation_id) {
  return {{"event", "regeneration"}, {"case_id", case_id}, {"generation_id", new_generation_id}};
}

json feedback_event(const std::string& generation_id, bool helpful, const std::optional<std::string>& comment,
                    pipeline::Clock::time_point at) {
  return {{"event", "feedback"},
          {"generation_id", generation_id},
          {"helpful", helpful},
          {"comment", optional_string(comment)},
          {"timestamp", iso8601(at)}};
}

json error_event(const std::string& endpoint, int status, const std::string& message) {
  return {{"event", "error"}, {"endpoint", endpoint}, {"status", status}, {"message", message}};
}

std::string case_id(const std::string& generation_id, std::size_t test_index) {
  return generation_id + "#" + std::to_string(test_index);
}

std::map<std::string, CaseRecord> replay_cases(const std::vector<json>& records) {
  std::map<std::string, CaseRecord> cases;
  auto lookup = [&](const json& rec) -> CaseRecord& {
    auto id = rec.at("case_id").get<std::string>();
    auto it = cases.find(id);
    if (it == cases.end()) throw Error(Errc::not_found, "ledger references unknown case " + id).about(id);
    return it->second;
  };
  std::map<std::string, extract::StructureReport> scripts;
  for (const auto& rec : records) {
    auto event = rec.value("event", "");
    if (event == "script_generation") {
      auto gen = rec.at("generation_id").get<std::string>();
      auto structure = structure_from_json(rec.at("structure"));
      scripts[gen] = structure;
      if (!rec.value("parent_generation_id", json()).is_null()) continue;
      for (std::size_t i = 0; i < structure.test_blocks.size(); ++i) {
        CaseRecord c;
        c.state.case_id = case_id(gen, i);
        c.root_generation_id = gen;
        c.current_generation_id = gen;
        c.test_title = structure.test_blocks[i].title;
        c.syntactically_valid = structure.valid;
        c.comment_lines = structure.test_blocks[i].comment_lines;
        cases.emplace(c.state.case_id, std::move(c));
      }
    } else if (event == "verdict") {
      auto& c = lookup(rec);
      std::optional<pipeline::MinorPatch> patch;
      if (rec.contains("patch"))
        patch = pipeline::MinorPatch{rec["patch"].value("before", ""), rec["patch"].value("after", "")};
      c.state = pipeline::record_verdict(std::move(c.state),
                                         pipeline::verdict_from_string(rec.at("verdict").get<std::string>()),
                                         rec.value("detail", ""), patch);
    } else if (event == "regeneration") {
      auto& c = lookup(rec);
      auto gen = rec.at("generation_id").get<std::string>();
      c.state = pipeline::record_regeneration(std::move(c.state), gen);
      c.current_generation_id = gen;
      // A regenerated case is judged on the regenerated script when it is recorded.
      if (auto it = scripts.find(gen); it != scripts.end()) {
        c.syntactically_valid = it->second.valid;
        auto title = text::normalize_title(c.test_title);
        for (const auto& block : it->second.test_blocks)
          if (text::normalize_title(block.title) == title) c.comment_lines = block.comment_lines;
      }
    }
  }
  return cases;
}

std::optional<json> find_generation(const std::vector<json>& records, const std::string& generation_id) {
  for (const auto& rec : records)
    if (rec.value("generation_id", "") == generation_id &&
        (rec.value("event", "") == "script_generation" || rec.value("event", "") == "scenario_generation"))
      return rec;
  return std::nullopt;
}

RecordedScriptInputs script_inputs_from_record(const json& record) {
  RecordedScriptInputs in;
  in.bundle.issue_key = record.value("issue_key", "");
  in.bundle.story.title = record.at("story").value("title", "");
  in.bundle.story.description = record.at("story").value("description", "");
  if (!in.bundle.issue_key.empty()) in.bundle.story.source_key = in.bundle.issue_key;
  auto feature = record.value("feature_text", "");
  if (!feature.empty()) in.bundle.feature_text = feature;
  in.page_urls = record.value("page_urls", std::vector<std::string>{});
  if (record.contains("extra_context") && record["extra_context"].is_string())
    in.extra_context = record["extra_context"].get<std::string>();
  in.regeneration_depth = record.value("regeneration_depth", 0);
  return in;
}

}  // namespace atgen::ledger
