#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "atgen/gateway.hpp"
#include "atgen/pipeline.hpp"

namespace atgen::eval {

using nlohmann::json;

struct FeedbackRecord {
  std::string generation_id;
  bool helpful = false;
  std::optional<std::string> comment;
  std::string timestamp;
};

// Every case state, in report order.
inline constexpr std::array<pipeline::CaseStatus, 6> kReportedStates{
    pipeline::CaseStatus::valid_as_generated, pipeline::CaseStatus::minor_fixed,
    pipeline::CaseStatus::regenerated_valid,  pipeline::CaseStatus::discarded,
    pipeline::CaseStatus::awaiting_regeneration, pipeline::CaseStatus::generated};

struct MetricsReport {
  std::int64_t cases = 0;
  double syntactic_correctness = 0;
  double semantic_relevance_initial = 0;
  double semantic_relevance_after_remediation = 0;
  double accessibility = 0;
  double avg_input_tokens = 0;
  double avg_output_tokens = 0;
  gateway::Money total_cost;          // every completion, both stages
  gateway::Money avg_cost_per_script;  // script-stage completions only
  gateway::Money avg_cost_per_story;  // script-stage spend over distinct stories
  std::string currency = "EUR";
  // Counts indexed like kReportedStates. Percents are derived, never stored.
  std::array<std::int64_t, 6> distribution{};

  std::int64_t count(pipeline::CaseStatus s) const;
  double percent(pipeline::CaseStatus s) const;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

struct MetricsOptions {
  // A case is accessible when its test block carries at least this many comment lines.
  int min_comment_lines = 1;
};

// Throws invalid_input when the ledger holds no test cases.
MetricsReport compute_metrics(const std::vector<json>& ledger_records, const MetricsOptions& options = {});

std::vector<FeedbackRecord> feedback_records(const std::vector<json>& ledger_records);

// helpful / total. Throws invalid_input on an empty list.
double feedback_rate(const std::vector<FeedbackRecord>& records);

// Integer percent of `ratio`, ties rounded to even: 62/65 -> "95%".
std::string format_percent(double ratio);

enum class ReportFormat { text, json, csv };
ReportFormat report_format_from_string(std::string_view s);

inline constexpr std::string_view kCsvHeader =
    "cases,syntactic_correctness,semantic_relevance_initial,semantic_relevance_after_remediation,accessibility,"
    "avg_input_tokens,avg_output_tokens,total_cost,avg_cost_per_script,avg_cost_per_story,currency,valid_as_generated,minor_fixed,"
    "regenerated_valid,discarded,awaiting_regeneration,generated";

std::string render_report(const MetricsReport& m, ReportFormat format);

json to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const json& j);

}  // namespace atgen::eval
