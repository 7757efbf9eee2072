#include "atgen/service.hpp"

#include <httplib.h>

#include "atgen/eval.hpp"
#include "atgen/text.hpp"

namespace atgen::service {

using nlohmann::json;

int status_for(const Error& e) {
  switch (e.code()) {
    case Errc::invalid_input: return 400;
    case Errc::not_found: return 404;
    case Errc::missing_gherkin:
    case Errc::parse_error: return 422;
    case Errc::illegal_transition: return 409;
    case Errc::io_error: return 500;
    default: break;
  }
  if (is_upstream_failure(e.code()) || e.code() == Errc::auth_failure) return 502;
  return 500;
}

namespace {

json usage_json(const gateway::Usage& u) {
  return {{"input_tokens", u.input_tokens}, {"output_tokens", u.output_tokens}};
}

json cost_json(gateway::Money m, const std::string& currency) { return {{"amount", m.str()}, {"currency", currency}}; }

// Non-blank string member, or nullopt.
std::optional<std::string> text_field(const json& j, const char* name) {
  if (!j.contains(name) || !j[name].is_string()) return std::nullopt;
  auto s = j[name].get<std::string>();
  if (text::trim(s).empty()) return std::nullopt;
  return s;
}

}  // namespace

Service::Service(config::Runtime& runtime, ledger::RunLedger& ledger, std::optional<std::string> bearer_token)
    : runtime_(runtime), ledger_(ledger) {
  if (bearer_token && !bearer_token->empty()) token_ = std::move(bearer_token);
}

Reply Service::fail(const std::string& endpoint, int status, const std::string& code, const std::string& message,
                    const json& fields) {
  json body = {{"error", code}, {"message", message}};
  if (!fields.is_null()) body["fields"] = fields;
  ledger_.append(ledger::error_event(endpoint, status, message));
  return {status, body.dump()};
}

Reply Service::handle(const std::string& method, const std::string& path, const std::string& body,
                      const std::string& authorization) {
  const std::string endpoint = method + " " + path;
  if (path == "/healthz") {
    if (method != "GET") return fail(endpoint, 405, "method-not-allowed", "use GET");
    return {200, json{{"status", "ok"}}.dump()};
  }
  bool known = path == "/v1/scenarios" || path == "/v1/scripts" || path == "/v1/feedback" || path == "/v1/reports/summary";
  if (!known) return fail(endpoint, 404, "not-found", "no such endpoint");
  if (token_ && authorization != "Bearer " + *token_) return fail(endpoint, 401, "unauthorized", "missing or wrong bearer token");

  bool is_get = path == "/v1/reports/summary";
  if (method != (is_get ? "GET" : "POST")) return fail(endpoint, 405, "method-not-allowed", is_get ? "use GET" : "use POST");

  try {
    if (path == "/v1/scenarios") return scenarios(body);
    if (path == "/v1/scripts") return scripts(body);
    if (path == "/v1/feedback") return feedback(body);
    return summary();
  } catch (const Error& e) {
    json fields = nullptr;
    if (e.code() == Errc::invalid_input && !e.reason().empty()) fields = {{e.reason(), e.what()}};
    auto status = status_for(e);
    auto reply = fail(endpoint, status, std::string(to_string(e.code())), e.what(), fields);
    if (!e.stage().empty()) {
      auto j = json::parse(reply.body);
      j["stage"] = e.stage();
      reply.body = j.dump();
    }
    return reply;
  } catch (const std::exception& e) {
    return fail(endpoint, 500, "internal", e.what());
  }
}

Reply Service::scenarios(const std::string& body) {
  const std::string endpoint = "POST /v1/scenarios";
  auto req = json::parse(body, nullptr, false);
  if (req.is_discarded() || !req.is_object()) return fail(endpoint, 400, "invalid-input", "body is not a JSON object");
  json fields = json::object();
  auto title = text_field(req, "title");
  auto description = text_field(req, "description");
  if (!title) fields["title"] = "required non-empty string";
  if (!description) fields["description"] = "required non-empty string";
  if (!fields.empty()) return fail(endpoint, 400, "invalid-input", "invalid request", fields);

  auto result = runtime_.pipeline().generate_scenarios({*title, *description, std::nullopt});
  const auto& currency = runtime_.gateway().rates().currency;
  ledger_.append(ledger::scenario_event(result, currency));
  json resp = {{"generation_id", result.generation_id},
               {"feature_text", result.feature_text},
               {"scenario_count", result.feature.scenarios.size()},
               {"lint", ledger::to_json(result.lint)},
               {"usage", usage_json(result.usage)},
               {"cost", cost_json(result.cost, currency)},
               {"model_id", result.model_id}};
  return {200, resp.dump()};
}

Reply Service::scripts(const std::string& body) {
  const std::string endpoint = "POST /v1/scripts";
  auto req = json::parse(body, nullptr, false);
  if (req.is_discarded() || !req.is_object()) return fail(endpoint, 400, "invalid-input", "body is not a JSON object");

  json fields = json::object();
  bool has_issue = req.contains("issue_key");
  bool has_inline = req.contains("story") || req.contains("feature_text");
  if (has_issue == has_inline) fields["issue_key"] = "give exactly one of issue_key or inline story and feature_text";
  if (has_issue && !req["issue_key"].is_string()) fields["issue_key"] = "must be a string";

  std::vector<std::string> urls;
  if (!req.contains("page_urls") || !req["page_urls"].is_array() || req["page_urls"].empty()) {
    fields["page_urls"] = "required non-empty array of absolute http(s) URLs";
  } else {
    for (const auto& u : req["page_urls"]) {
      if (!u.is_string() || !stories::is_absolute_http_url(u.get<std::string>())) {
        fields["page_urls"] = "every entry must be an absolute http(s) URL";
        break;
      }
      urls.push_back(u.get<std::string>());
    }
  }
  std::optional<std::string> extra;
  if (req.contains("extra_context") && !req["extra_context"].is_null()) {
    if (!req["extra_context"].is_string()) {
      fields["extra_context"] = "must be a string";
    } else if (!text::trim(req["extra_context"].get<std::string>()).empty()) {
      extra = req["extra_context"].get<std::string>();
    }
  }

  stories::StoryBundle bundle;
  if (has_inline && !has_issue) {
    const auto& story = req.value("story", json::object());
    bundle.story.title = story.is_object() ? story.value("title", "") : "";
    bundle.story.description = story.is_object() ? story.value("description", "") : "";
    if (text::trim(bundle.story.title).empty()) fields["story.title"] = "required non-empty string";
    if (text::trim(bundle.story.description).empty()) fields["story.description"] = "required non-empty string";
    if (!req.contains("feature_text") || !req["feature_text"].is_string() ||
        text::trim(req["feature_text"].get<std::string>()).empty()) {
      if (fields.empty()) return fail(endpoint, 422, "missing-gherkin", "inline request has no feature_text");
    } else {
      bundle.feature_text = req["feature_text"].get<std::string>();
    }
  }
  if (!fields.empty()) return fail(endpoint, 400, "invalid-input", "invalid request", fields);
  if (has_issue) bundle = runtime_.resolve_issue(req["issue_key"].get<std::string>(), true);

  auto result = runtime_.pipeline().generate_script(bundle, urls, extra);
  const auto& currency = runtime_.gateway().rates().currency;
  ledger_.append(ledger::script_event(result, currency));
  json resp = {{"generation_id", result.generation_id},
               {"script_text", result.code.code},
               {"fence_language_tag", result.code.fence_language_tag ? json(*result.code.fence_language_tag) : json()},
               {"structure", ledger::to_json(result.structure)},
               {"mapping", ledger::to_json(result.mapping)},
               {"warnings", result.warnings},
               {"usage", usage_json(result.usage)},
               {"cost", cost_json(result.cost, currency)},
               {"model_id", result.model_id}};
  return {200, resp.dump()};
}

Reply Service::feedback(const std::string& body) {
  const std::string endpoint = "POST /v1/feedback";
  auto req = json::parse(body, nullptr, false);
  if (req.is_discarded() || !req.is_object()) return fail(endpoint, 400, "invalid-input", "body is not a JSON object");
  json fields = json::object();
  auto id = text_field(req, "generation_id");
  if (!id) fields["generation_id"] = "required non-empty string";
  if (!req.contains("helpful") || !req["helpful"].is_boolean()) fields["helpful"] = "required boolean";
  std::optional<std::string> comment;
  if (req.contains("comment") && !req["comment"].is_null()) {
    if (req["comment"].is_string()) {
      comment = req["comment"].get<std::string>();
    } else {
      fields["comment"] = "must be a string";
    }
  }
  if (!fields.empty()) return fail(endpoint, 400, "invalid-input", "invalid request", fields);

  auto records = ledger_.read_all();
  auto gen = ledger::find_generation(records, *id);
  if (!gen || gen->value("event", "") != "scenario_generation")
    return fail(endpoint, 404, "not-found", "no scenario generation " + *id);
  ledger_.append(ledger::feedback_event(*id, req["helpful"].get<bool>(), comment, pipeline::Clock::now()));
  return {204, ""};
}

Reply Service::summary() {
  auto records = ledger_.read_all();
  json out;
  try {
    out = eval::to_json(eval::compute_metrics(records));
  } catch (const Error& e) {
    if (e.code() != Errc::invalid_input) throw;
    out = {{"cases", 0}};
  }
  auto fb = eval::feedback_records(records);
  json feedback = {{"responses", fb.size()}};
  if (!fb.empty()) {
    auto rate = eval::feedback_rate(fb);
    feedback["helpful_rate"] = rate;
    feedback["helpful_percent"] = eval::format_percent(rate);
  }
  out["feedback"] = feedback;
  return {200, out.dump()};
}

void Service::bind(httplib::Server& server) {
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    auto reply = handle(req.method, req.path, req.body, req.get_header_value("Authorization"));
    res.status = reply.status;
    if (!reply.body.empty()) res.set_content(reply.body, reply.content_type);
  };
  server.Get(".*", route);
  server.Post(".*", route);
  server.Put(".*", route);
  server.Delete(".*", route);
  server.Patch(".*", route);
}

}  // namespace atgen::service
