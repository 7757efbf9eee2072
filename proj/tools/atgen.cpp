#include <CLI11.hpp>
#include <httplib.h>

#include <cstdlib>
#include <iostream>
#include <iterator>

#include "atgen/config.hpp"
#include "atgen/eval.hpp"
#include "atgen/ledger.hpp"
#include "atgen/service.hpp"
#include "atgen/text.hpp"

using namespace atgen;
using nlohmann::json;

namespace {

struct Common {
  std::string config_path;
  std::string backend;
  std::string run_dir;
};

config::Config load_config(const Common& c) {
  auto cfg = c.config_path.empty() ? config::Config::defaults() : config::Config::load(c.config_path);
  if (!c.backend.empty()) cfg.backend = config::backend_mode_from_string(c.backend);
  return cfg;
}

void add_common(CLI::App* cmd, Common& c, bool needs_run_dir) {
  cmd->add_option("--config", c.config_path, "JSON config file");
  cmd->add_option("--backend", c.backend, "replay, live or record")->check(CLI::IsMember({"replay", "live", "record"}));
  auto* run = cmd->add_option("--run-dir", c.run_dir, "run directory holding ledger.jsonl");
  if (needs_run_dir) run->required();
}

std::optional<std::string> read_optional_file(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return text::read_file(path);
}

int cmd_scenarios(const Common& c, const std::string& title, const std::string& description) {
  config::Runtime rt(load_config(c));
  auto result = rt.pipeline().generate_scenarios({title, description, std::nullopt});
  if (!c.run_dir.empty()) ledger::RunLedger(c.run_dir).append(ledger::scenario_event(result, rt.gateway().rates().currency));
  std::cout << result.feature_text;
  if (result.feature_text.empty() || result.feature_text.back() != '\n') std::cout << '\n';
  for (const auto& f : result.lint.findings)
    std::cerr << "lint " << gherkin::to_string(f.severity) << " line " << f.line << ": " << f.code << " " << f.message << '\n';
  std::cerr << "generation " << result.generation_id << " cost " << result.cost.str() << ' '
            << rt.gateway().rates().currency << '\n';
  return 0;
}

void print_script(const pipeline::ScriptResult& r, const std::string& currency, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << r.code.code;
    if (r.code.code.empty() || r.code.code.back() != '\n') std::cout << '\n';
  } else {
    text::write_file(out_path, r.code.code);
  }
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& f : r.structure.findings)
    std::cerr << "structure " << gherkin::to_string(f.severity) << " line " << f.line << ": " << f.code << '\n';
  std::cerr << "generation " << r.generation_id << " valid=" << (r.structure.valid ? "true" : "false") << " mapped "
            << r.mapping.matched.size() << "/" << r.feature.scenarios.size() << " cost " << r.cost.str() << ' '
            << currency << '\n';
}

int cmd_script(const Common& c, const std::string& issue, const std::string& story_dir,
               const std::vector<std::string>& pages, const std::string& context, const std::string& out_path) {
  config::Runtime rt(load_config(c));
  auto bundle = story_dir.empty() ? rt.resolve_issue(issue, true) : stories::load_local(story_dir);
  std::optional<std::string> extra;
  if (!context.empty()) extra = context;
  auto result = rt.pipeline().generate_script(bundle, pages, extra);
  if (!c.run_dir.empty()) ledger::RunLedger(c.run_dir).append(ledger::script_event(result, rt.gateway().rates().currency));
  print_script(result, rt.gateway().rates().currency, out_path);
  return 0;
}

int cmd_regen(const Common& c, const std::string& case_id, const std::string& context, const std::string& out_path) {
  ledger::RunLedger ledger(c.run_dir);
  auto records = ledger.read_all();
  auto cases = ledger::replay_cases(records);
  auto it = cases.find(case_id);
  if (it == cases.end()) throw Error(Errc::not_found, "no case " + case_id).about(case_id);
  if (it->second.state.status != pipeline::CaseStatus::awaiting_regeneration)
    throw Error(Errc::illegal_transition, "case " + case_id + " is " +
                                              std::string(pipeline::to_string(it->second.state.status)) +
                                              "; record a lack_of_context verdict first");
  auto record = ledger::find_generation(records, it->second.current_generation_id);
  if (!record) throw Error(Errc::not_found, "ledger lacks generation " + it->second.current_generation_id);

  config::Runtime rt(load_config(c));
  auto recorded = ledger::script_inputs_from_record(*record);
  auto& pipe = rt.pipeline();
  pipeline::ScriptResult prev;
  prev.inputs.bundle = recorded.bundle;
  prev.inputs.extra_context = recorded.extra_context;
  prev.generation_id = it->second.current_generation_id;
  prev.regeneration_depth = recorded.regeneration_depth;
  // Pages are not stored in the ledger; fetch them again.
  for (const auto& url : recorded.page_urls) prev.inputs.pages.push_back(page::purge(rt.pages().fetch(url)));
  auto result = pipe.regenerate_with_context(prev, context);
  auto currency = rt.gateway().rates().currency;
  ledger.append(ledger::script_event(result, currency));
  ledger.append(ledger::regeneration_event(case_id, result.generation_id));
  print_script(result, currency, out_path);
  return 0;
}

int cmd_verdict(const Common& c, const std::string& case_id, const std::string& verdict, const std::string& note,
                const std::string& patch_before, const std::string& patch_after) {
  ledger::RunLedger ledger(c.run_dir);
  auto cases = ledger::replay_cases(ledger.read_all());
  auto it = cases.find(case_id);
  if (it == cases.end()) throw Error(Errc::not_found, "no case " + case_id).about(case_id);
  std::optional<pipeline::MinorPatch> patch;
  if (!patch_before.empty() || !patch_after.empty())
    patch = pipeline::MinorPatch{read_optional_file(patch_before).value_or(""), read_optional_file(patch_after).value_or("")};
  auto v = pipeline::verdict_from_string(verdict);
  auto next = pipeline::record_verdict(it->second.state, v, note, patch);
  ledger.append(ledger::verdict_event(case_id, v, note, patch, next.status));
  std::cout << case_id << ": " << pipeline::to_string(next.status) << '\n';
  return 0;
}

int cmd_cases(const Common& c) {
  auto cases = ledger::replay_cases(ledger::read_ledger(c.run_dir));
  for (const auto& [id, rec] : cases)
    std::cout << id << '\t' << pipeline::to_string(rec.state.status) << '\t' << rec.test_title << '\n';
  return 0;
}

int cmd_report(const std::string& ledger_path, const std::string& format, bool with_feedback) {
  auto records = ledger::read_ledger(ledger_path);
  auto fmt = eval::report_format_from_string(format);
  std::cout << eval::render_report(eval::compute_metrics(records), fmt);
  if (with_feedback) {
    auto fb = eval::feedback_records(records);
    auto rate = eval::feedback_rate(fb);
    std::cout << "feedback helpful: " << eval::format_percent(rate) << " of " << fb.size() << " responses\n";
  }
  return 0;
}

int cmd_feedback_rate(const std::string& ledger_path) {
  auto fb = eval::feedback_records(ledger::read_ledger(ledger_path));
  auto rate = eval::feedback_rate(fb);
  std::cout << "feedback helpful: " << eval::format_percent(rate) << " of " << fb.size() << " responses\n";
  return 0;
}

int cmd_serve(const Common& c, const std::string& host, int port) {
  auto cfg = load_config(c);
  config::Runtime rt(cfg);
  ledger::RunLedger ledger(c.run_dir);
  std::optional<std::string> token;
  if (const char* t = std::getenv(cfg.service_token_env.c_str())) token = t;
  service::Service svc(rt, ledger, token);
  httplib::Server server;
  svc.bind(server);
  std::cerr << "listening on " << host << ":" << port << ", ledger " << ledger.path() << '\n';
  if (!server.listen(host, port)) throw Error(Errc::io_error, "cannot listen on " + host + ":" + std::to_string(port));
  return 0;
}

int cmd_pr_inputs() {
  std::string input((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
  auto pr = stories::parse_pr_description(input);
  std::cout << json{{"issue_key", pr.issue_key}, {"page_urls", pr.page_urls}}.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance test generation from user stories"};
  app.require_subcommand(1);

  Common common;
  std::string title, description, issue, story_dir, context, out_path, case_id, verdict, note, patch_before,
      patch_after, ledger_path, format = "text", host = "127.0.0.1";
  std::vector<std::string> pages;
  bool with_feedback = false;
  int port = 8080;

  auto* scenarios = app.add_subcommand("scenarios", "generate Gherkin scenarios for a user story");
  add_common(scenarios, common, false);
  scenarios->add_option("--title", title, "story title")->required();
  scenarios->add_option("--description", description, "story description")->required();

  auto* script = app.add_subcommand("script", "generate a test script for a story with Gherkin");
  add_common(script, common, false);
  auto* issue_opt = script->add_option("--issue", issue, "issue key resolved via tracker or stories dir");
  auto* dir_opt = script->add_option("--story-dir", story_dir, "local story directory");
  issue_opt->excludes(dir_opt);
  script->add_option("--page", pages, "page URL (repeatable)")->required();
  script->add_option("--context", context, "additional context");
  script->add_option("--out", out_path, "write the script here instead of stdout");

  auto* regen = app.add_subcommand("regen", "regenerate a case's script with additional context");
  add_common(regen, common, true);
  regen->add_option("--case", case_id, "case id <generation>#<index>")->required();
  regen->add_option("--context", context, "additional context")->required();
  regen->add_option("--out", out_path, "write the script here instead of stdout");

  auto* verd = app.add_subcommand("verdict", "record a reviewer verdict for a case");
  add_common(verd, common, true);
  verd->add_option("--case", case_id, "case id")->required();
  verd->add_option("--verdict", verdict, "pass, minor_error, lack_of_context or complex_error")->required();
  verd->add_option("--note", note, "reviewer note; required for minor_error");
  verd->add_option("--patch-before", patch_before, "file with the test before a minor fix");
  verd->add_option("--patch-after", patch_after, "file with the test after a minor fix");

  auto* cases = app.add_subcommand("cases", "list cases and their states");
  add_common(cases, common, true);

  auto* report = app.add_subcommand("report", "compute metrics over a ledger");
  report->add_option("--ledger", ledger_path, "run directory or .jsonl file")->required();
  report->add_option("--format", format, "text, json or csv")->check(CLI::IsMember({"text", "json", "csv"}));
  report->add_flag("--feedback", with_feedback, "append the feedback rate");

  auto* fb = app.add_subcommand("feedback-rate", "share of helpful feedback in a ledger");
  fb->add_option("--ledger", ledger_path, "run directory or .jsonl file")->required();

  auto* serve = app.add_subcommand("serve", "run the HTTP service");
  add_common(serve, common, true);
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port");

  auto* pr = app.add_subcommand("pr-inputs", "extract issue key and page URLs from a PR description on stdin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*scenarios) return cmd_scenarios(common, title, description);
    if (*script) {
      if (issue.empty() && story_dir.empty()) throw Error(Errc::invalid_input, "give --issue or --story-dir");
      return cmd_script(common, issue, story_dir, pages, context, out_path);
    }
    if (*regen) return cmd_regen(common, case_id, context, out_path);
    if (*verd) return cmd_verdict(common, case_id, verdict, note, patch_before, patch_after);
    if (*cases) return cmd_cases(common);
    if (*report) return cmd_report(ledger_path, format, with_feedback);
    if (*fb) return cmd_feedback_rate(ledger_path);
    if (*serve) return cmd_serve(common, host, port);
    if (*pr) return cmd_pr_inputs();
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return config::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
