#include "atgen/gherkin.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "atgen/error.hpp"
#include "atgen/text.hpp"

namespace atgen::gherkin {

std::string_view keyword_text(StepKeyword k) {
  switch (k) {
    case StepKeyword::given: return "Given";
    case StepKeyword::when: return "When";
    case StepKeyword::then: return "Then";
    case StepKeyword::and_: return "And";
    case StepKeyword::but: return "But";
  }
  return "Given";
}

std::string_view to_string(Severity s) { return s == Severity::error ? "error" : "warning"; }

namespace {

constexpr std::array<std::pair<std::string_view, StepKeyword>, 5> kStepKeywords{{
    {"Given", StepKeyword::given},
    {"When", StepKeyword::when},
    {"Then", StepKeyword::then},
    {"And", StepKeyword::and_},
    {"But", StepKeyword::but},
}};

Error parse_error(int line, std::string reason, const std::string& message) {
  Error e(Errc::parse_error, "line " + std::to_string(line) + ": " + message);
  e.at_line(line).with_reason(std::move(reason));
  return e;
}

// Returns the text after `keyword:` when the line starts with it.
std::optional<std::string_view> header_rest(std::string_view line, std::string_view keyword) {
  if (line.size() <= keyword.size() || line.substr(0, keyword.size()) != keyword) return std::nullopt;
  if (line[keyword.size()] != ':') return std::nullopt;
  return text::trim(line.substr(keyword.size() + 1));
}

std::optional<std::pair<StepKeyword, std::string_view>> match_step(std::string_view line) {
  for (const auto& [word, kw] : kStepKeywords) {
    if (line.substr(0, word.size()) != word) continue;
    if (line.size() == word.size()) return std::pair{kw, std::string_view{}};
    char next = line[word.size()];
    if (next == ' ' || next == '\t') return std::pair{kw, text::trim(line.substr(word.size()))};
  }
  return std::nullopt;
}

std::vector<std::string> split_row(std::string_view row, int line) {
  if (row.size() < 2 || row.back() != '|')
    throw parse_error(line, "unterminated-table-row", "table row must end with '|'");
  std::vector<std::string> cells;
  std::string cell;
  for (std::size_t i = 1; i < row.size(); ++i) {
    char c = row[i];
    if (c == '\\' && i + 1 < row.size()) {
      char n = row[i + 1];
      if (n == '|' || n == '\\') {
        cell.push_back(n);
        ++i;
        continue;
      }
      if (n == 'n') {
        cell.push_back('\n');
        ++i;
        continue;
      }
    }
    if (c == '|') {
      cells.emplace_back(text::trim(cell));
      cell.clear();
      continue;
    }
    cell.push_back(c);
  }
  if (!text::trim(cell).empty())
    throw parse_error(line, "unterminated-table-row", "table row must end with '|'");
  return cells;
}

// Accumulates free-text lines, keeping interior blank lines only.
struct TextBlock {
  std::vector<std::string> lines;

  void add(std::string_view line) { lines.emplace_back(line); }
  void blank() {
    if (!lines.empty()) lines.emplace_back();
  }
  std::optional<std::string> finish() {
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) return std::nullopt;
    return text::join(lines, "\n");
  }
};

enum class TableTarget { none, examples, step };

class Parser {
 public:
  Feature run(std::string_view source) {
    auto lines = text::split_lines(source);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      line_no_ = static_cast<int>(i) + 1;
      handle(text::trim(lines[i]));
    }
    close_table();
    close_scenario();
    if (!feature_) throw parse_error(1, "missing-feature-header", "no 'Feature:' header found");
    feature_->description = feature_desc_.finish();
    feature_->source_span.last = last_content_line_;
    return std::move(*feature_);
  }

 private:
  void handle(std::string_view line) {
    if (line.empty()) {
      on_blank();
      return;
    }
    if (line.front() == '#' || line.front() == '@') return;
    last_content_line_ = line_no_;
    if (header_rest(line, "Rule")) return;

    if (auto rest = header_rest(line, "Feature")) return on_feature(*rest);
    require_feature();

    if (line.front() == '|') return on_row(line);
    close_table();

    if (auto rest = header_rest(line, "Background")) return on_scenario(*rest, ScenarioKind::background);
    for (auto kw : {"Scenario Outline", "Scenario Template"}) {
      if (auto rest = header_rest(line, kw)) return on_scenario(*rest, ScenarioKind::scenario_outline);
    }
    for (auto kw : {"Scenario", "Example"}) {
      if (auto rest = header_rest(line, kw)) return on_scenario(*rest, ScenarioKind::scenario);
    }
    for (auto kw : {"Examples", "Scenarios"}) {
      if (auto rest = header_rest(line, kw)) return on_examples(*rest);
    }
    if (auto step = match_step(line)) return on_step(step->first, step->second);
    on_text(line);
  }

  void require_feature() {
    if (!feature_) throw parse_error(line_no_, "missing-feature-header", "expected a 'Feature:' header first");
  }

  void on_blank() {
    if (!feature_) return;
    if (current_) {
      if (current_->steps.empty() && current_->examples.empty()) scenario_desc_.blank();
    } else {
      feature_desc_.blank();
    }
  }

  void on_feature(std::string_view name) {
    if (feature_) {
      close_scenario();
      feature_->extra_feature_lines.push_back(line_no_);
      return;
    }
    if (name.empty()) throw parse_error(line_no_, "empty-feature-name", "feature name is empty");
    feature_.emplace();
    feature_->name = std::string(name);
    feature_->source_span.first = line_no_;
  }

  void on_scenario(std::string_view title, ScenarioKind kind) {
    close_scenario();
    if (kind == ScenarioKind::background) {
      if (feature_->background || !feature_->scenarios.empty())
        throw parse_error(line_no_, "misplaced-background", "Background must appear once, before any scenario");
    } else if (title.empty()) {
      throw parse_error(line_no_, "empty-scenario-title", "scenario title is empty");
    }
    current_.emplace();
    current_->title = std::string(title);
    current_->kind = kind;
    current_->line = line_no_;
  }

  void on_examples(std::string_view title) {
    if (!current_ || current_->kind == ScenarioKind::background)
      throw parse_error(line_no_, "examples-outside-outline", "Examples must follow a Scenario Outline");
    if (current_->kind != ScenarioKind::scenario_outline)
      throw parse_error(line_no_, "examples-outside-outline", "Examples are only allowed in a Scenario Outline");
    Examples ex;
    ex.title = std::string(title);
    ex.line = line_no_;
    current_->examples.push_back(std::move(ex));
    table_ = TableTarget::examples;
  }

  void on_step(StepKeyword kw, std::string_view body) {
    if (!current_) throw parse_error(line_no_, "step-outside-scenario", "step appears before any scenario");
    if (!current_->examples.empty())
      throw parse_error(line_no_, "step-after-examples", "steps must precede the Examples table");
    if (body.empty()) throw parse_error(line_no_, "empty-step", "step has no text");
    Step s;
    s.keyword = kw;
    s.text = std::string(body);
    s.line = line_no_;
    current_->steps.push_back(std::move(s));
    table_ = TableTarget::step;
  }

  void on_row(std::string_view line) {
    auto cells = split_row(line, line_no_);
    Table* target = nullptr;
    if (table_ == TableTarget::examples) {
      target = &current_->examples.back().rows;
    } else if (table_ == TableTarget::step) {
      auto& step = current_->steps.back();
      if (!step.table) step.table.emplace();
      target = &*step.table;
    } else {
      throw parse_error(line_no_, "unexpected-table-row", "table row outside a step or Examples block");
    }
    if (!target->empty() && target->front().size() != cells.size())
      throw parse_error(line_no_, "table-width-mismatch", "table row has a different number of cells");
    target->push_back(std::move(cells));
  }

  void on_text(std::string_view line) {
    if (current_) {
      scenario_desc_.add(line);
    } else {
      feature_desc_.add(line);
    }
  }

  void close_table() {
    if (table_ == TableTarget::examples && current_->examples.back().rows.empty()) {
      int at = current_->examples.back().line;
      throw parse_error(at, "unterminated-examples", "Examples block has no table rows");
    }
    table_ = TableTarget::none;
  }

  void close_scenario() {
    if (!current_) return;
    close_table();
    current_->description = scenario_desc_.finish();
    scenario_desc_ = {};
    if (current_->kind == ScenarioKind::background) {
      feature_->background = std::move(*current_);
    } else {
      feature_->scenarios.push_back(std::move(*current_));
    }
    current_.reset();
  }

  int line_no_ = 0;
  int last_content_line_ = 0;
  std::optional<Feature> feature_;
  std::optional<Scenario> current_;
  TextBlock feature_desc_;
  TextBlock scenario_desc_;
  TableTarget table_ = TableTarget::none;
};

std::string escape_cell(std::string_view cell) {
  std::string out;
  for (char c : cell) {
    if (c == '|' || c == '\\') {
      out.push_back('\\');
      out.push_back(c);
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out.push_back(c);
    }
  }
  return out;
}

void write_table(std::string& out, const Table& table, std::string_view indent) {
  for (const auto& row : table) {
    out += indent;
    out += '|';
    for (const auto& cell : row) {
      out += ' ';
      out += escape_cell(cell);
      out += " |";
    }
    out += '\n';
  }
}

void write_block(std::string& out, const std::string& block, std::string_view indent) {
  for (const auto& line : text::split_lines(block)) {
    if (!line.empty()) out += indent;
    out += line;
    out += '\n';
  }
}

std::string_view scenario_keyword(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::background: return "Background";
    case ScenarioKind::scenario_outline: return "Scenario Outline";
    case ScenarioKind::scenario: break;
  }
  return "Scenario";
}

void write_scenario(std::string& out, const Scenario& sc) {
  out += "  ";
  out += scenario_keyword(sc.kind);
  out += ':';
  if (!sc.title.empty()) {
    out += ' ';
    out += sc.title;
  }
  out += '\n';
  if (sc.description) write_block(out, *sc.description, "    ");
  for (const auto& step : sc.steps) {
    out += "    ";
    out += keyword_text(step.keyword);
    out += ' ';
    out += step.text;
    out += '\n';
    if (step.table) write_table(out, *step.table, "      ");
  }
  for (const auto& ex : sc.examples) {
    out += "\n    Examples:";
    if (!ex.title.empty()) {
      out += ' ';
      out += ex.title;
    }
    out += '\n';
    write_table(out, ex.rows, "      ");
  }
}

}  // namespace

Feature parse_feature(std::string_view source) { return Parser{}.run(source); }

std::string serialize_feature(const Feature& feature) {
  std::string out = "Feature: " + feature.name + "\n";
  if (feature.description) write_block(out, *feature.description, "  ");
  if (feature.background) {
    out += '\n';
    write_scenario(out, *feature.background);
  }
  for (const auto& sc : feature.scenarios) {
    out += '\n';
    write_scenario(out, sc);
  }
  return out;
}

bool LintReport::has_errors() const { return count(Severity::error) > 0; }

std::size_t LintReport::count(Severity s) const {
  return static_cast<std::size_t>(
      std::count_if(findings.begin(), findings.end(), [s](const Finding& f) { return f.severity == s; }));
}

LintReport lint_feature(const Feature& feature) {
  LintReport report;
  auto add = [&](Severity sev, std::string code, int line, std::string message) {
    report.findings.push_back({sev, std::move(code), line, std::move(message)});
  };

  for (int line : feature.extra_feature_lines)
    add(Severity::warning, "multiple-features", line, "more than one Feature block; scenarios were merged");

  if (feature.scenarios.empty())
    add(Severity::error, "no-scenarios", feature.source_span.first, "feature has no scenarios");

  std::map<std::string, int> seen;
  for (const auto& sc : feature.scenarios) {
    auto key = text::normalize_space(sc.title);
    if (auto it = seen.find(key); it != seen.end()) {
      add(Severity::warning, "duplicate-title", sc.line,
          "scenario title duplicates line " + std::to_string(it->second));
    } else {
      seen.emplace(key, sc.line);
    }
    if (sc.steps.empty()) {
      add(Severity::error, "empty-scenario", sc.line, "scenario '" + sc.title + "' has no steps");
    } else if (!feature.background && (sc.steps.front().keyword == StepKeyword::and_ ||
                                       sc.steps.front().keyword == StepKeyword::but)) {
      add(Severity::warning, "leading-conjunction", sc.steps.front().line,
          "first step starts with And/But and there is no Background");
    }
    if (sc.kind == ScenarioKind::scenario_outline && sc.examples.empty())
      add(Severity::error, "missing-examples", sc.line, "scenario outline has no Examples");
  }

  std::stable_sort(report.findings.begin(), report.findings.end(),
                   [](const Finding& a, const Finding& b) { return a.line < b.line; });
  return report;
}

std::vector<std::string> scenario_titles(const Feature& feature) {
  std::vector<std::string> titles;
  titles.reserve(feature.scenarios.size());
  for (const auto& sc : feature.scenarios) titles.push_back(text::normalize_space(sc.title));
  return titles;
}

}  // namespace atgen::gherkin
