#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "atgen/pipeline.hpp"

namespace atgen::ledger {

using nlohmann::json;

// Append-only line-delimited JSON log, one record per event. The file lives
// at `<run_dir>/ledger.jsonl`. Appends are serialized and flushed per line.
class RunLedger {
 public:
  // Accepts either a run directory (created if needed) or a .jsonl path.
  explicit RunLedger(const std::string& location);

  void append(const json& record);
  std::vector<json> read_all() const;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  mutable std::mutex mutex_;
};

// Reads every record of a ledger file or run directory.
std::vector<json> read_ledger(const std::string& location);

std::string iso8601(pipeline::Clock::time_point t);

json scenario_event(const pipeline::ScenarioResult& r, const std::string& currency);
json script_event(const pipeline::ScriptResult& r, const std::string& currency);
json verdict_event(const std::string& case_id, pipeline::Verdict verdict, const std::string& detail,
                   const std::optional<pipeline::MinorPatch>& patch, pipeline::CaseStatus after);
json regeneration_event(const std::string& case_id, const std::string& new_generation_id);
json feedback_event(const std::string& generation_id, bool helpful, const std::optional<std::string>& comment,
                    pipeline::Clock::time_point at);
json error_event(const std::string& endpoint, int status, const std::string& message);

json to_json(const extract::StructureReport& r);
extract::StructureReport structure_from_json(const json& j);
json to_json(const extract::MappingReport& r);
json to_json(const gherkin::LintReport& r);

// "<generation id>#<test index>"
std::string case_id(const std::string& generation_id, std::size_t test_index);

struct CaseRecord {
  pipeline::CaseState state;
  std::string root_generation_id;
  std::string current_generation_id;  // latest regeneration, or the root
  std::string test_title;
  bool syntactically_valid = false;
  int comment_lines = 0;
};

// Replays the ledger: every test block of a root script generation opens a
// case; verdict and regeneration events drive it through the state machine.
// Throws illegal_transition when the ledger records an impossible sequence.
std::map<std::string, CaseRecord> replay_cases(const std::vector<json>& records);

// Finds the script_generation record with the given id.
std::optional<json> find_generation(const std::vector<json>& records, const std::string& generation_id);

// Rebuilds the inputs of a recorded script generation (pages must be refetched).
struct RecordedScriptInputs {
  stories::StoryBundle bundle;
  std::vector<std::string> page_urls;
  std::optional<std::string> extra_context;
  int regeneration_depth = 0;
};
RecordedScriptInputs script_inputs_from_record(const json& record);

}  // namespace atgen::ledger
