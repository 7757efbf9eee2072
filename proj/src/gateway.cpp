#include "atgen/gateway.hpp"

#include <httplib.h>

#include <cmath>
#include <regex>
#include <thread>

#include "atgen/error.hpp"
#include "atgen/text.hpp"

namespace atgen::gateway {

using nlohmann::json;

Money Money::from_double(double value) {
  long double scaled = static_cast<long double>(value) * 10000.0L;
  // The epsilon absorbs binary representation error on exact halves.
  auto units = static_cast<std::int64_t>(std::floor(scaled + 0.5L + 1e-9L));
  return Money(units);
}

std::string Money::str() const {
  std::int64_t u = units_ < 0 ? -units_ : units_;
  std::string frac = std::to_string(u % 10000);
  frac.insert(0, 4 - frac.size(), '0');
  return std::string(units_ < 0 ? "-" : "") + std::to_string(u / 10000) + "." + frac;
}

Money cost_of(const Usage& usage, const CostRates& rates) {
  long double total = static_cast<long double>(usage.input_tokens) * rates.per_1k_input / 1000.0L +
                      static_cast<long double>(usage.output_tokens) * rates.per_1k_output / 1000.0L;
  return Money::from_double(static_cast<double>(total));
}

std::string request_digest(const prompt::PromptBundle& bundle, const CompletionParams& params,
                           const std::string& model_id) {
  json canonical = {
      {"system", text::normalize_newlines(bundle.system)},
      {"user", text::normalize_newlines(bundle.user)},
      {"temperature", params.temperature},
      {"max_output_tokens", params.max_output_tokens},
      {"model_id", model_id},
  };
  return text::sha256_hex(canonical.dump());
}

json to_json(const ModelResponse& r) {
  return {{"text", r.text},
          {"usage", {{"input_tokens", r.usage.input_tokens}, {"output_tokens", r.usage.output_tokens}}},
          {"model_id", r.model_id},
          {"latency_ms", r.latency_ms}};
}

ModelResponse response_from_json(const json& j) {
  ModelResponse r;
  r.text = j.at("text").get<std::string>();
  r.usage.input_tokens = j.at("usage").at("input_tokens").get<std::int64_t>();
  r.usage.output_tokens = j.at("usage").at("output_tokens").get<std::int64_t>();
  r.model_id = j.value("model_id", "");
  r.latency_ms = j.value("latency_ms", std::int64_t{0});
  return r;
}

Cassette Cassette::load(const std::string& path) {
  Cassette c;
  try {
    auto j = json::parse(text::read_file(path));
    for (const auto& e : j) {
      CassetteEntry entry;
      entry.request_digest = e.at("request_digest").get<std::string>();
      entry.request = e.value("request", json::object());
      entry.response = response_from_json(e.at("response"));
      c.put(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, "cassette " + path + ": " + e.what()).about(path);
  }
  return c;
}

void Cassette::save(const std::string& path) const {
  json arr = json::array();
  {
    std::lock_guard lock(mutex_);
    for (const auto& e : entries_)
      arr.push_back({{"request_digest", e.request_digest}, {"request", e.request}, {"response", to_json(e.response)}});
  }
  text::write_file(path, arr.dump(2) + "\n");
}

std::optional<ModelResponse> Cassette::find(const std::string& digest) const {
  std::lock_guard lock(mutex_);
  for (const auto& e : entries_)
    if (e.request_digest == digest) return e.response;
  return std::nullopt;
}

void Cassette::put(CassetteEntry entry) {
  std::lock_guard lock(mutex_);
  for (auto& e : entries_) {
    if (e.request_digest == entry.request_digest) {
      e = std::move(entry);
      return;
    }
  }
  entries_.push_back(std::move(entry));
}

std::size_t Cassette::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::vector<CassetteEntry> Cassette::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

LiveBackend::LiveBackend(LiveConfig config)
    : config_(std::move(config)), sleep_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {}

namespace {

struct Endpoint {
  std::string origin;
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  static const std::regex kUrl(R"(^(https?://[^/?#]+)(.*)$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(url, m, kUrl))
    throw Error(Errc::invalid_input, "model endpoint is not an absolute http(s) URL: '" + url + "'").about(url);
  return {m[1].str(), m[2].str().empty() ? "/" : m[2].str()};
}

std::string provider_message(const std::string& body) {
  auto j = json::parse(body, nullptr, false);
  if (j.is_object() && j.contains("error")) {
    const auto& err = j["error"];
    if (err.is_object() && err.contains("message") && err["message"].is_string())
      return err["message"].get<std::string>();
    return err.dump();
  }
  return body.substr(0, 200);
}

}  // namespace

ModelResponse LiveBackend::complete(const prompt::PromptBundle& bundle, const CompletionParams& params) {
  auto ep = split_endpoint(config_.endpoint);
  json body = {
      {"model", config_.model_id},
      {"messages", json::array({{{"role", "system"}, {"content", bundle.system}},
                                {{"role", "user"}, {"content", bundle.user}}})},
      {"temperature", params.temperature},
      {"max_tokens", params.max_output_tokens},
  };
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    if (config_.auth_header == "Authorization") {
      headers.emplace("Authorization", "Bearer " + config_.api_key);
    } else {
      headers.emplace(config_.auth_header, config_.api_key);
    }
  }

  auto backoff = config_.retry.initial_backoff;
  std::optional<Error> last;
  attempts_made_ = 0;
  for (int attempt = 0; attempt < std::max(1, config_.retry.attempts); ++attempt) {
    if (attempt > 0) {
      sleep_(backoff);
      backoff = std::chrono::milliseconds(static_cast<std::int64_t>(backoff.count() * config_.retry.multiplier));
    }
    ++attempts_made_;
    httplib::Client client(ep.origin);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    client.set_connection_timeout(secs.count() > 0 ? secs.count() : 1, 0);
    client.set_read_timeout(secs.count() > 0 ? secs.count() : 1, 0);
    auto started = std::chrono::steady_clock::now();
    auto res = client.Post(ep.path, headers, body.dump(), "application/json");
    auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);

    if (!res) {
      last = Error(Errc::transport, "model endpoint unreachable: " + httplib::to_string(res.error()))
                 .with_reason("network")
                 .about(config_.endpoint);
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last = Error(Errc::provider_error, "model endpoint returned HTTP " + std::to_string(res->status) + ": " +
                                             provider_message(res->body))
                 .with_status(res->status)
                 .about(config_.endpoint);
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      throw Error(Errc::auth_failure, "model endpoint rejected credentials: " + provider_message(res->body))
          .with_status(res->status)
          .about(config_.endpoint);
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(Errc::provider_error, "model endpoint returned HTTP " + std::to_string(res->status) + ": " +
                                            provider_message(res->body))
          .with_status(res->status)
          .about(config_.endpoint);
    }

    auto reply = json::parse(res->body, nullptr, false);
    if (!reply.is_object()) throw Error(Errc::provider_error, "model endpoint returned non-JSON body");
    if (reply.contains("error")) throw Error(Errc::provider_error, provider_message(res->body));
    try {
      ModelResponse out;
      const auto& message = reply.at("choices").at(0).at("message");
      out.text = message.at("content").is_null() ? "" : message.at("content").get<std::string>();
      if (reply.contains("usage")) {
        out.usage.input_tokens = reply["usage"].value("prompt_tokens", std::int64_t{0});
        out.usage.output_tokens = reply["usage"].value("completion_tokens", std::int64_t{0});
      }
      out.model_id = reply.value("model", config_.model_id);
      out.latency_ms = latency.count();
      if (out.text.empty())
        throw Error(Errc::provider_error, "model returned an empty completion").with_reason("empty-completion");
      return out;
    } catch (const json::exception& e) {
      throw Error(Errc::provider_error, std::string("malformed chat completion: ") + e.what());
    }
  }
  throw *last;
}

ReplayBackend::ReplayBackend(std::shared_ptr<const Cassette> cassette, std::string model_id)
    : cassette_(std::move(cassette)), model_id_(std::move(model_id)) {}

ModelResponse ReplayBackend::complete(const prompt::PromptBundle& bundle, const CompletionParams& params) {
  auto digest = request_digest(bundle, params, model_id_);
  auto hit = cassette_->find(digest);
  if (!hit)
    throw Error(Errc::cache_miss, "no recorded response for request " + digest.substr(0, 12) +
                                      " (prompt or parameters drifted from the cassette)")
        .about(digest);
  return *hit;
}

RecordingBackend::RecordingBackend(std::unique_ptr<Backend> inner, std::shared_ptr<Cassette> cassette,
                                   std::string path)
    : inner_(std::move(inner)), cassette_(std::move(cassette)), path_(std::move(path)) {}

ModelResponse RecordingBackend::complete(const prompt::PromptBundle& bundle, const CompletionParams& params) {
  auto response = inner_->complete(bundle, params);
  CassetteEntry entry;
  entry.request_digest = request_digest(bundle, params, inner_->model_id());
  entry.request = {{"stage", prompt::to_string(bundle.stage)},
                   {"system", bundle.system},
                   {"user", bundle.user},
                   {"temperature", params.temperature},
                   {"max_output_tokens", params.max_output_tokens},
                   {"model_id", inner_->model_id()}};
  entry.response = response;
  std::lock_guard lock(save_mutex_);
  cassette_->put(std::move(entry));
  cassette_->save(path_);
  return response;
}

Gateway::Gateway(std::unique_ptr<Backend> backend, CostRates rates, CompletionParams params)
    : backend_(std::move(backend)), rates_(std::move(rates)), params_(params) {}

Completion Gateway::complete(const prompt::PromptBundle& bundle) {
  Completion c;
  c.response = backend_->complete(bundle, params_);
  c.cost = cost_of(c.response.usage, rates_);
  std::lock_guard lock(mutex_);
  total_cost_ += c.cost;
  total_usage_ += c.response.usage;
  return c;
}

Money Gateway::total_cost() const {
  std::lock_guard lock(mutex_);
  return total_cost_;
}

Usage Gateway::total_usage() const {
  std::lock_guard lock(mutex_);
  return total_usage_;
}

}  // namespace atgen::gateway
