#include "atgen/extract.hpp"

#include <algorithm>
#include <cctype>
#include <json.hpp>
#include <set>

#include "atgen/error.hpp"
#include "atgen/text.hpp"

namespace atgen::extract {

namespace {

struct Fence {
  char ch = '`';
  std::size_t len = 0;
  std::string info;
};

std::optional<Fence> opening_fence(std::string_view line) {
  std::size_t indent = 0;
  while (indent < line.size() && indent < 4 && line[indent] == ' ') ++indent;
  if (indent > 3) return std::nullopt;
  auto rest = line.substr(indent);
  if (rest.empty() || (rest[0] != '`' && rest[0] != '~')) return std::nullopt;
  std::size_t n = 0;
  while (n < rest.size() && rest[n] == rest[0]) ++n;
  if (n < 3) return std::nullopt;
  Fence f{rest[0], n, std::string(text::trim(rest.substr(n)))};
  if (f.ch == '`' && f.info.find('`') != std::string::npos) return std::nullopt;
  return f;
}

bool closes(std::string_view line, const Fence& open) {
  auto t = text::trim(line);
  if (t.size() < open.len) return false;
  return std::all_of(t.begin(), t.end(), [&](char c) { return c == open.ch; });
}

}  // namespace

std::optional<CodeBlock> find_fenced_code(std::string_view response_text) {
  auto lines = text::split_lines(response_text);
  std::optional<CodeBlock> first;
  int count = 0;
  std::size_t i = 0;
  while (i < lines.size()) {
    auto open = opening_fence(lines[i]);
    if (!open) {
      ++i;
      continue;
    }
    ++count;
    std::vector<std::string> body;
    std::size_t j = i + 1;
    while (j < lines.size() && !closes(lines[j], *open)) body.push_back(lines[j++]);
    if (!first) {
      CodeBlock b;
      b.code = text::join(body, "\n");
      if (!open->info.empty()) {
        auto sp = open->info.find_first_of(" \t");
        b.fence_language_tag = open->info.substr(0, sp);
      }
      first = std::move(b);
    }
    i = j + 1;
  }
  if (first) first->fence_count_in_source = count;
  return first;
}

CodeBlock extract_fenced_code(std::string_view response_text) {
  auto b = find_fenced_code(response_text);
  if (!b) throw Error(Errc::no_code_block, "response contains no fenced code block").with_reason("no-code-block");
  return *b;
}

DialectProfile DialectProfile::load(const std::string& path) {
  DialectProfile d;
  try {
    auto j = nlohmann::json::parse(text::read_file(path));
    d.name = j.value("name", d.name);
    d.suite_keywords = j.value("suite_keywords", d.suite_keywords);
    d.test_keywords = j.value("test_keywords", d.test_keywords);
    d.line_comment = j.value("line_comment", d.line_comment);
    if (j.contains("block_comment")) {
      auto bc = j.at("block_comment").get<std::vector<std::string>>();
      if (bc.size() != 2) throw Error(Errc::parse_error, "block_comment must be [open, close]");
      d.block_comment_open = bc[0];
      d.block_comment_close = bc[1];
    }
    d.string_delimiters = j.value("string_delimiters", d.string_delimiters);
    d.template_delimiters = j.value("template_delimiters", d.template_delimiters);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, "dialect profile " + path + ": " + e.what()).about(path);
  }
  return d;
}

namespace {

enum class Tok { ident, string, punct };

struct Token {
  Tok kind = Tok::punct;
  std::string text;  // identifier name, string value or punctuation char
  int line = 1;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }

bool has_prefix(std::string_view s, std::size_t i, std::string_view p) {
  return !p.empty() && s.substr(i, p.size()) == p;
}

class Lexer {
 public:
  Lexer(std::string_view src, const DialectProfile& d) : src_(src), d_(d) {}

  void run() {
    while (i_ < src_.size()) {
      if (!template_stack_.empty() && template_stack_.back().resume_now) {
        template_stack_.back().resume_now = false;
        auto frame = template_stack_.back();
        template_stack_.pop_back();
        lex_template(frame.delim, frame.start_line, frame.value);
        continue;
      }
      step();
    }
    for (const auto& f : template_stack_)
      add("unterminated-template", f.start_line, "template literal opened here is never closed");
  }

  std::vector<Token> tokens;
  std::vector<StructureFinding> findings;
  std::set<int> comment_lines;

 private:
  struct TemplateFrame {
    std::string delim;
    int start_line = 1;
    std::string value;
    int brace_depth = 0;
    bool resume_now = false;
  };

  void add(std::string code, int line, std::string message) {
    findings.push_back({gherkin::Severity::error, std::move(code), std::max(1, line), std::move(message)});
  }

  void advance(std::size_t n = 1) {
    for (std::size_t k = 0; k < n && i_ < src_.size(); ++k, ++i_)
      if (src_[i_] == '\n') ++line_;
  }

  const std::string* match_any(const std::vector<std::string>& delims) const {
    for (const auto& d : delims)
      if (has_prefix(src_, i_, d)) return &d;
    return nullptr;
  }

  void step() {
    char c = src_[i_];
    if (c == '\n' || std::isspace(static_cast<unsigned char>(c))) {
      advance();
      return;
    }
    if (has_prefix(src_, i_, d_.line_comment)) {
      comment_lines.insert(line_);
      while (i_ < src_.size() && src_[i_] != '\n') advance();
      return;
    }
    if (has_prefix(src_, i_, d_.block_comment_open)) {
      int start = line_;
      comment_lines.insert(line_);
      advance(d_.block_comment_open.size());
      while (i_ < src_.size() && !has_prefix(src_, i_, d_.block_comment_close)) {
        advance();
        comment_lines.insert(line_);
      }
      if (i_ >= src_.size()) {
        add("unterminated-comment", start, "block comment opened here is never closed");
        return;
      }
      advance(d_.block_comment_close.size());
      return;
    }
    if (const auto* t = match_any(d_.template_delimiters)) {
      std::string delim = *t;
      int start = line_;
      advance(delim.size());
      lex_template(delim, start, {});
      return;
    }
    if (const auto* q = match_any(d_.string_delimiters)) {
      lex_string(*q);
      return;
    }
    if (ident_start(c)) {
      std::size_t b = i_;
      while (i_ < src_.size() && ident_char(src_[i_])) ++i_;
      tokens.push_back({Tok::ident, std::string(src_.substr(b, i_ - b)), line_});
      return;
    }
    if (c == '/' && regex_allowed()) {
      if (lex_regex()) return;
    }
    if (c == '{' && !template_stack_.empty()) ++template_stack_.back().brace_depth;
    if (c == '}' && !template_stack_.empty()) {
      if (template_stack_.back().brace_depth == 0) {
        template_stack_.back().resume_now = true;
        advance();
        return;
      }
      --template_stack_.back().brace_depth;
    }
    tokens.push_back({Tok::punct, std::string(1, c), line_});
    advance();
  }

  void lex_string(const std::string& delim) {
    int start = line_;
    advance(delim.size());
    std::string value;
    while (i_ < src_.size()) {
      char c = src_[i_];
      if (c == '\\' && i_ + 1 < src_.size()) {
        value.push_back(src_[i_ + 1]);
        advance(2);
        continue;
      }
      if (c == '\n') break;
      if (has_prefix(src_, i_, delim)) {
        advance(delim.size());
        tokens.push_back({Tok::string, std::move(value), start});
        return;
      }
      value.push_back(c);
      advance();
    }
    add("unterminated-string", start, "string literal is not closed on its line");
    tokens.push_back({Tok::string, std::move(value), start});
  }

  // Lexes template text until the closing delimiter or a ${ substitution,
  // which hands control back to the code lexer until its matching '}'.
  void lex_template(const std::string& delim, int start, std::string value) {
    while (i_ < src_.size()) {
      char c = src_[i_];
      if (c == '\\' && i_ + 1 < src_.size()) {
        value.push_back(src_[i_ + 1]);
        advance(2);
        continue;
      }
      if (has_prefix(src_, i_, delim)) {
        advance(delim.size());
        tokens.push_back({Tok::string, std::move(value), start});
        return;
      }
      if (c == '$' && i_ + 1 < src_.size() && src_[i_ + 1] == '{') {
        advance(2);
        value += "${}";
        template_stack_.push_back({delim, start, std::move(value), 0, false});
        return;
      }
      value.push_back(c);
      advance();
    }
    add("unterminated-template", start, "template literal opened here is never closed");
  }

  bool regex_allowed() const {
    if (i_ + 1 < src_.size() && (src_[i_ + 1] == '/' || src_[i_ + 1] == '*')) return false;
    if (tokens.empty()) return true;
    const auto& prev = tokens.back();
    if (prev.kind == Tok::string) return false;
    if (prev.kind == Tok::ident) {
      static const std::set<std::string> kw{"return", "typeof", "case", "do",    "else",  "in",
                                            "of",     "new",    "delete", "void", "throw", "yield", "await"};
      return kw.count(prev.text) > 0;
    }
    static const std::string ops = "(,=:[!&|?{};+-*%<>~^";
    return ops.find(prev.text[0]) != std::string::npos;
  }

  bool lex_regex() {
    std::size_t j = i_ + 1;
    bool in_class = false;
    while (j < src_.size() && src_[j] != '\n') {
      char c = src_[j];
      if (c == '\\') {
        j += 2;
        continue;
      }
      if (c == '[') in_class = true;
      if (c == ']') in_class = false;
      if (c == '/' && !in_class) {
        ++j;
        while (j < src_.size() && ident_char(src_[j])) ++j;
        tokens.push_back({Tok::string, std::string(src_.substr(i_, j - i_)), line_});
        i_ = j;
        return true;
      }
      ++j;
    }
    return false;
  }

  std::string_view src_;
  const DialectProfile& d_;
  std::size_t i_ = 0;
  int line_ = 1;
  std::vector<TemplateFrame> template_stack_;
};

char closer_for(char open) {
  switch (open) {
    case '(': return ')';
    case '[': return ']';
    default: return '}';
  }
}

const char* delimiter_code(char c) {
  switch (c) {
    case '(':
    case ')': return "unbalanced-paren";
    case '[':
    case ']': return "unbalanced-bracket";
    default: return "unbalanced-brace";
  }
}

bool is_open(const std::string& t) { return t == "(" || t == "[" || t == "{"; }
bool is_close(const std::string& t) { return t == ")" || t == "]" || t == "}"; }

// Pairs delimiters; match[i] is the index of the partner token or -1.
std::vector<long> match_delimiters(const std::vector<Token>& toks, std::vector<StructureFinding>& findings) {
  std::vector<long> match(toks.size(), -1);
  std::vector<std::size_t> stack;
  auto unclosed = [&](std::size_t idx) {
    char c = toks[idx].text[0];
    findings.push_back({gherkin::Severity::error, delimiter_code(c), toks[idx].line,
                        std::string("'") + c + "' opened here is never closed"});
  };
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].kind != Tok::punct) continue;
    const auto& t = toks[i].text;
    if (is_open(t)) {
      stack.push_back(i);
    } else if (is_close(t)) {
      char c = t[0];
      auto it = std::find_if(stack.rbegin(), stack.rend(),
                             [&](std::size_t idx) { return closer_for(toks[idx].text[0]) == c; });
      if (it == stack.rend()) {
        findings.push_back({gherkin::Severity::error, delimiter_code(c), toks[i].line,
                            std::string("'") + c + "' has no matching opener"});
        continue;
      }
      while (stack.back() != *it) {
        unclosed(stack.back());
        stack.pop_back();
      }
      match[i] = static_cast<long>(stack.back());
      match[stack.back()] = static_cast<long>(i);
      stack.pop_back();
    }
  }
  for (auto idx : stack) unclosed(idx);
  return match;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

struct Call {
  std::size_t keyword = 0;
  std::size_t open_paren = 0;
  std::optional<std::string> title;
};

// Recognizes `kw(`, `kw.only(` and `kw.skip(` not preceded by a member access.
std::optional<Call> call_at(const std::vector<Token>& toks, std::size_t i, const std::vector<std::string>& keywords) {
  if (toks[i].kind != Tok::ident || !contains(keywords, toks[i].text)) return std::nullopt;
  if (i > 0 && toks[i - 1].kind == Tok::punct && toks[i - 1].text == ".") return std::nullopt;
  std::size_t j = i + 1;
  if (j + 1 < toks.size() && toks[j].text == "." && toks[j + 1].kind == Tok::ident &&
      (toks[j + 1].text == "only" || toks[j + 1].text == "skip"))
    j += 2;
  if (j >= toks.size() || toks[j].kind != Tok::punct || toks[j].text != "(") return std::nullopt;
  Call call{i, j, std::nullopt};
  if (j + 1 < toks.size() && toks[j + 1].kind == Tok::string) call.title = toks[j + 1].text;
  return call;
}

}  // namespace

StructureReport validate_script_structure(std::string_view code, const DialectProfile& dialect) {
  StructureReport report;
  Lexer lexer(code, dialect);
  lexer.run();
  report.findings = std::move(lexer.findings);
  const auto& toks = lexer.tokens;
  auto match = match_delimiters(toks, report.findings);
  report.comment_lines = static_cast<int>(lexer.comment_lines.size());

  int last_line = 1 + static_cast<int>(std::count(code.begin(), code.end(), '\n'));
  auto end_line_of = [&](const Call& c) { return match[c.open_paren] >= 0 ? toks[match[c.open_paren]].line : last_line; };
  auto end_index_of = [&](const Call& c) {
    return match[c.open_paren] >= 0 ? static_cast<std::size_t>(match[c.open_paren]) : toks.size();
  };

  std::vector<std::pair<std::size_t, std::size_t>> suites;  // token index ranges
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (auto call = call_at(toks, i, dialect.suite_keywords); call && call->title)
      suites.emplace_back(call->open_paren, end_index_of(*call));
  }

  std::size_t tests_in_suite = 0;
  std::size_t covered_until = 0;  // tests nested inside an earlier test are not test cases
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i < covered_until) continue;
    auto call = call_at(toks, i, dialect.test_keywords);
    if (!call) continue;
    if (!call->title) {
      report.findings.push_back({gherkin::Severity::warning, "non-literal-title", toks[i].line,
                                 "test declaration has no string-literal title"});
      continue;
    }
    covered_until = end_index_of(*call);
    bool inside = std::any_of(suites.begin(), suites.end(), [&](const auto& s) { return i > s.first && i < s.second; });
    if (inside) {
      ++tests_in_suite;
    } else {
      report.findings.push_back({gherkin::Severity::warning, "test-outside-suite", toks[i].line,
                                 "test '" + *call->title + "' is not inside a suite"});
    }
    TestBlock block;
    block.title = *call->title;
    block.first_line = toks[i].line;
    block.last_line = end_line_of(*call);
    block.comment_lines = static_cast<int>(std::count_if(lexer.comment_lines.begin(), lexer.comment_lines.end(),
                                                         [&](int l) { return l >= block.first_line && l <= block.last_line; }));
    report.test_block_titles.push_back(block.title);
    report.test_blocks.push_back(std::move(block));
  }

  if (suites.empty()) {
    report.findings.push_back({gherkin::Severity::error, "missing-suite", 1,
                               "no '" + (dialect.suite_keywords.empty() ? std::string("describe") : dialect.suite_keywords[0]) +
                                   "' suite with a string title"});
  } else if (tests_in_suite == 0) {
    report.findings.push_back({gherkin::Severity::error, "missing-test", toks[suites[0].first].line,
                               "suite contains no test declaration with a string title"});
  }

  std::stable_sort(report.findings.begin(), report.findings.end(),
                   [](const auto& a, const auto& b) { return a.line < b.line; });
  report.valid = std::none_of(report.findings.begin(), report.findings.end(),
                              [](const auto& f) { return f.severity == gherkin::Severity::error; });
  return report;
}

MappingReport check_scenario_mapping(const gherkin::Feature& feature, const StructureReport& report) {
  MappingReport out;
  const auto& tests = report.test_blocks;
  std::vector<std::string> test_norm;
  for (const auto& t : tests) test_norm.push_back(text::normalize_title(t.title));
  std::vector<bool> test_used(tests.size(), false);
  std::vector<long> scenario_match(feature.scenarios.size(), -1);

  auto pass = [&](auto&& accepts) {
    for (std::size_t s = 0; s < feature.scenarios.size(); ++s) {
      if (scenario_match[s] >= 0) continue;
      auto sn = text::normalize_title(feature.scenarios[s].title);
      for (std::size_t t = 0; t < tests.size(); ++t) {
        if (test_used[t] || !accepts(sn, test_norm[t])) continue;
        test_used[t] = true;
        scenario_match[s] = static_cast<long>(t);
        break;
      }
    }
  };
  pass([](const std::string& a, const std::string& b) { return a == b; });
  pass([](const std::string& a, const std::string& b) {
    if (a.empty() || b.empty()) return false;
    return a.find(b) != std::string::npos || b.find(a) != std::string::npos;
  });

  int commented = 0;
  for (std::size_t s = 0; s < feature.scenarios.size(); ++s) {
    if (scenario_match[s] < 0) {
      out.missing_scenarios.push_back(feature.scenarios[s].title);
      continue;
    }
    const auto& test = tests[static_cast<std::size_t>(scenario_match[s])];
    out.matched.emplace_back(feature.scenarios[s].title, test.title);
    if (test.comment_lines > 0) ++commented;
  }
  for (std::size_t t = 0; t < tests.size(); ++t)
    if (!test_used[t]) out.extra_tests.push_back(tests[t].title);
  out.comment_coverage = out.matched.empty() ? 1.0 : static_cast<double>(commented) / static_cast<double>(out.matched.size());
  return out;
}

}  // namespace atgen::extract
