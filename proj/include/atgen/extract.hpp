#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "atgen/gherkin.hpp"

namespace atgen::extract {

struct CodeBlock {
  std::string code;
  std::optional<std::string> fence_language_tag;
  int fence_count_in_source = 0;
};

// First fenced (``` or ~~~) block of a model response. A fence left open at the
// end of the text runs to the end. Throws no_code_block when there is none.
CodeBlock extract_fenced_code(std::string_view response_text);

// Same, but returns nullopt instead of throwing.
std::optional<CodeBlock> find_fenced_code(std::string_view response_text);

// Names the test-script skeleton the structural validator expects.
struct DialectProfile {
  std::string name = "cypress-typescript";
  std::vector<std::string> suite_keywords{"describe", "context"};
  std::vector<std::string> test_keywords{"it", "specify"};
  std::string line_comment = "//";
  std::string block_comment_open = "/*";
  std::string block_comment_close = "*/";
  std::vector<std::string> string_delimiters{"'", "\""};
  // Multi-line delimiters supporting ${...} interpolation.
  std::vector<std::string> template_delimiters{"`"};

  static DialectProfile load(const std::string& path);
};

struct StructureFinding {
  gherkin::Severity severity = gherkin::Severity::error;
  std::string code;
  int line = 1;
  std::string message;
};

struct TestBlock {
  std::string title;
  int first_line = 0;
  int last_line = 0;
  int comment_lines = 0;
};

struct StructureReport {
  bool valid = false;
  std::vector<StructureFinding> findings;
  std::vector<std::string> test_block_titles;
  std::vector<TestBlock> test_blocks;
  int comment_lines = 0;
};

// Lexical/structural check: balanced (), {}, []; terminated strings, template
// literals and block comments; a suite call containing at least one test call
// with a string title. Never throws; every finding has line >= 1.
StructureReport validate_script_structure(std::string_view code, const DialectProfile& dialect = {});

struct MappingReport {
  std::vector<std::pair<std::string, std::string>> matched;  // (scenario title, test title)
  std::vector<std::string> missing_scenarios;
  std::vector<std::string> extra_tests;
  double comment_coverage = 1.0;
};

// Greedy title matching: exact normalized equality first, then containment
// either way. Normalization trims, collapses whitespace and ignores case.
MappingReport check_scenario_mapping(const gherkin::Feature& feature, const StructureReport& report);

}  // namespace atgen::extract
