#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace atgen::gherkin {

enum class StepKeyword { given, when, then, and_, but };

std::string_view keyword_text(StepKeyword k);

using Table = std::vector<std::vector<std::string>>;

struct LineSpan {
  int first = 0;
  int last = 0;
};

struct Step {
  StepKeyword keyword = StepKeyword::given;
  std::string text;
  std::optional<Table> table;  // step data table, if any
  int line = 0;

  // Source positions do not take part in structural equality.
  friend bool operator==(const Step& a, const Step& b) {
    return a.keyword == b.keyword && a.text == b.text && a.table == b.table;
  }
};

enum class ScenarioKind { scenario, scenario_outline, background };

struct Examples {
  std::string title;
  Table rows;  // rows[0] is the header row
  int line = 0;

  friend bool operator==(const Examples& a, const Examples& b) {
    return a.title == b.title && a.rows == b.rows;
  }
};

struct Scenario {
  std::string title;
  ScenarioKind kind = ScenarioKind::scenario;
  std::optional<std::string> description;
  std::vector<Step> steps;
  std::vector<Examples> examples;  // outline only
  int line = 0;

  friend bool operator==(const Scenario& a, const Scenario& b) {
    return a.title == b.title && a.kind == b.kind && a.description == b.description &&
           a.steps == b.steps && a.examples == b.examples;
  }
};

struct Feature {
  std::string name;
  std::optional<std::string> description;
  std::optional<Scenario> background;
  std::vector<Scenario> scenarios;
  LineSpan source_span;
  // Lines of additional `Feature:` headers. Their scenarios are folded into
  // this feature; lint reports the extra headers.
  std::vector<int> extra_feature_lines;

  friend bool operator==(const Feature& a, const Feature& b) {
    return a.name == b.name && a.description == b.description && a.background == b.background &&
           a.scenarios == b.scenarios;
  }
};

// Throws atgen::Error{parse_error} with a line and a reason such as
// "missing-feature-header", "step-outside-scenario", "unterminated-examples".
Feature parse_feature(std::string_view source);

// Canonical layout: feature at column 0, scenarios indented two spaces, steps
// four, tables six. Always LF line endings.
std::string serialize_feature(const Feature& feature);

enum class Severity { error, warning };

std::string_view to_string(Severity s);

struct Finding {
  Severity severity = Severity::warning;
  std::string code;
  int line = 0;
  std::string message;
};

struct LintReport {
  std::vector<Finding> findings;

  bool has_errors() const;
  std::size_t count(Severity s) const;
};

LintReport lint_feature(const Feature& feature);

std::vector<std::string> scenario_titles(const Feature& feature);

}  // namespace atgen::gherkin
