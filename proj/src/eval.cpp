#include "atgen/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "atgen/error.hpp"
#include "atgen/ledger.hpp"

namespace atgen::eval {

namespace {

std::size_t state_index(pipeline::CaseStatus s) {
  auto it = std::find(kReportedStates.begin(), kReportedStates.end(), s);
  return static_cast<std::size_t>(it - kReportedStates.begin());
}

std::string fixed(double v, int decimals) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(decimals);
  os << v;
  return os.str();
}

}  // namespace

std::int64_t MetricsReport::count(pipeline::CaseStatus s) const { return distribution[state_index(s)]; }

double MetricsReport::percent(pipeline::CaseStatus s) const {
  return cases == 0 ? 0.0 : 100.0 * static_cast<double>(count(s)) / static_cast<double>(cases);
}

MetricsReport compute_metrics(const std::vector<json>& records, const MetricsOptions& options) {
  auto cases = ledger::replay_cases(records);
  if (cases.empty()) throw Error(Errc::invalid_input, "ledger holds no test cases").with_reason("empty-ledger");

  MetricsReport m;
  m.cases = static_cast<std::int64_t>(cases.size());
  std::int64_t syntactic = 0, accessible = 0;
  for (const auto& [id, c] : cases) {
    ++m.distribution[state_index(c.state.status)];
    if (c.syntactically_valid) ++syntactic;
    if (c.comment_lines >= options.min_comment_lines) ++accessible;
  }
  auto share = [&](std::int64_t n) { return static_cast<double>(n) / static_cast<double>(m.cases); };
  m.syntactic_correctness = share(syntactic);
  m.accessibility = share(accessible);
  auto initial = m.count(pipeline::CaseStatus::valid_as_generated);
  m.semantic_relevance_initial = share(initial);
  m.semantic_relevance_after_remediation = share(initial + m.count(pipeline::CaseStatus::minor_fixed) +
                                                 m.count(pipeline::CaseStatus::regenerated_valid));

  std::int64_t scripts = 0, in_tokens = 0, out_tokens = 0;
  gateway::Money script_cost;
  std::set<std::string> stories;
  bool have_currency = false;
  for (const auto& rec : records) {
    auto event = rec.value("event", "");
    if (event != "script_generation" && event != "scenario_generation") continue;
    m.total_cost += gateway::Money::from_double(rec.value("cost", 0.0));
    if (!have_currency && rec.contains("currency")) {
      m.currency = rec["currency"].get<std::string>();
      have_currency = true;
    }
    if (event != "script_generation") continue;
    ++scripts;
    script_cost += gateway::Money::from_double(rec.value("cost", 0.0));
    in_tokens += rec["usage"].value("input_tokens", std::int64_t{0});
    out_tokens += rec["usage"].value("output_tokens", std::int64_t{0});
    auto key = rec.value("issue_key", "");
    stories.insert(key.empty() ? rec["story"].value("title", "") : key);
  }
  // Half-up division in fixed-point units.
  auto divide = [](gateway::Money total, std::int64_t n) {
    return gateway::Money::from_units((2 * total.units() + n) / (2 * n));
  };
  if (scripts > 0) {
    m.avg_cost_per_script = divide(script_cost, scripts);
    m.avg_input_tokens = static_cast<double>(in_tokens) / static_cast<double>(scripts);
    m.avg_output_tokens = static_cast<double>(out_tokens) / static_cast<double>(scripts);
  }
  if (!stories.empty()) m.avg_cost_per_story = divide(script_cost, static_cast<std::int64_t>(stories.size()));
  return m;
}

std::vector<FeedbackRecord> feedback_records(const std::vector<json>& records) {
  std::vector<FeedbackRecord> out;
  for (const auto& rec : records) {
    if (rec.value("event", "") != "feedback") continue;
    FeedbackRecord f;
    f.generation_id = rec.value("generation_id", "");
    f.helpful = rec.value("helpful", false);
    if (rec.contains("comment") && rec["comment"].is_string()) f.comment = rec["comment"].get<std::string>();
    f.timestamp = rec.value("timestamp", "");
    out.push_back(std::move(f));
  }
  return out;
}

double feedback_rate(const std::vector<FeedbackRecord>& records) {
  if (records.empty()) throw Error(Errc::invalid_input, "no feedback records").with_reason("empty-feedback");
  auto helpful = std::count_if(records.begin(), records.end(), [](const FeedbackRecord& f) { return f.helpful; });
  return static_cast<double>(helpful) / static_cast<double>(records.size());
}

std::string format_percent(double ratio) {
  // nearbyint honours the default FE_TONEAREST mode: ties go to even.
  auto pct = std::nearbyint(ratio * 100.0);
  return std::to_string(static_cast<long long>(pct)) + "%";
}

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "text") return ReportFormat::text;
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  throw Error(Errc::invalid_input, "unknown report format '" + std::string(s) + "'").with_reason("format");
}

json to_json(const MetricsReport& m) {
  json dist = json::object();
  for (auto s : kReportedStates) {
    dist[std::string(pipeline::to_string(s))] = {{"count", m.count(s)}, {"percent", m.percent(s)}};
  }
  return {{"cases", m.cases},
          {"syntactic_correctness", m.syntactic_correctness},
          {"semantic_relevance_initial", m.semantic_relevance_initial},
          {"semantic_relevance_after_remediation", m.semantic_relevance_after_remediation},
          {"accessibility", m.accessibility},
          {"avg_input_tokens", m.avg_input_tokens},
          {"avg_output_tokens", m.avg_output_tokens},
          {"total_cost", m.total_cost.str()},
          {"avg_cost_per_script", m.avg_cost_per_script.str()},
          {"avg_cost_per_story", m.avg_cost_per_story.str()},
          {"currency", m.currency},
          {"distribution", dist}};
}

namespace {

gateway::Money money_from_string(const std::string& s) {
  auto dot = s.find('.');
  std::int64_t whole = std::stoll(s.substr(0, dot));
  std::int64_t frac = 0;
  if (dot != std::string::npos) {
    auto digits = s.substr(dot + 1, 4);
    digits.append(4 - digits.size(), '0');
    frac = std::stoll(digits);
  }
  bool negative = !s.empty() && s.front() == '-';
  return gateway::Money::from_units(whole * 10000 + (negative ? -frac : frac));
}

}  // namespace

MetricsReport metrics_from_json(const json& j) {
  MetricsReport m;
  m.cases = j.at("cases").get<std::int64_t>();
  m.syntactic_correctness = j.at("syntactic_correctness").get<double>();
  m.semantic_relevance_initial = j.at("semantic_relevance_initial").get<double>();
  m.semantic_relevance_after_remediation = j.at("semantic_relevance_after_remediation").get<double>();
  m.accessibility = j.at("accessibility").get<double>();
  m.avg_input_tokens = j.at("avg_input_tokens").get<double>();
  m.avg_output_tokens = j.at("avg_output_tokens").get<double>();
  m.total_cost = money_from_string(j.at("total_cost").get<std::string>());
  m.avg_cost_per_script = money_from_string(j.at("avg_cost_per_script").get<std::string>());
  m.avg_cost_per_story = money_from_string(j.at("avg_cost_per_story").get<std::string>());
  m.currency = j.at("currency").get<std::string>();
  const auto& dist = j.at("distribution");
  for (std::size_t i = 0; i < kReportedStates.size(); ++i)
    m.distribution[i] = dist.at(std::string(pipeline::to_string(kReportedStates[i]))).at("count").get<std::int64_t>();
  return m;
}

std::string render_report(const MetricsReport& m, ReportFormat format) {
  std::ostringstream os;
  switch (format) {
    case ReportFormat::json:
      return to_json(m).dump(2) + "\n";
    case ReportFormat::csv:
      os << kCsvHeader << '\n'
         << m.cases << ',' << fixed(m.syntactic_correctness, 4) << ',' << fixed(m.semantic_relevance_initial, 4) << ','
         << fixed(m.semantic_relevance_after_remediation, 4) << ',' << fixed(m.accessibility, 4) << ','
         << fixed(m.avg_input_tokens, 1) << ',' << fixed(m.avg_output_tokens, 1) << ',' << m.total_cost.str() << ','
         << m.avg_cost_per_script.str() << ',' << m.avg_cost_per_story.str() << ',' << m.currency;
      for (auto c : m.distribution) os << ',' << c;
      os << '\n';
      return os.str();
    case ReportFormat::text:
      break;
  }
  os << "test cases: " << m.cases << '\n'
     << "syntactic correctness: " << format_percent(m.syntactic_correctness) << '\n'
     << "semantic relevance (initial): " << format_percent(m.semantic_relevance_initial) << '\n'
     << "semantic relevance (after remediation): " << format_percent(m.semantic_relevance_after_remediation) << '\n'
     << "accessibility: " << format_percent(m.accessibility) << '\n'
     << "avg input tokens: " << fixed(m.avg_input_tokens, 1) << '\n'
     << "avg output tokens: " << fixed(m.avg_output_tokens, 1) << '\n'
     << "total cost: " << m.total_cost.str() << ' ' << m.currency << '\n'
     << "avg cost per script: " << m.avg_cost_per_script.str() << ' ' << m.currency << '\n'
     << "avg cost per story: " << m.avg_cost_per_story.str() << ' ' << m.currency << '\n'
     << "distribution:\n";
  for (auto s : kReportedStates) {
    os << "  " << pipeline::to_string(s) << ": " << m.count(s) << " ("
       << format_percent(static_cast<double>(m.count(s)) / static_cast<double>(m.cases ? m.cases : 1)) << ")\n";
  }
  return os.str();
}

}  // namespace atgen::eval
