#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "atgen/prompt.hpp"

namespace atgen::gateway {

struct Usage {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;

  Usage& operator+=(const Usage& o) {
    input_tokens += o.input_tokens;
    output_tokens += o.output_tokens;
    return *this;
  }
  friend bool operator==(const Usage&, const Usage&) = default;
};

struct ModelResponse {
  std::string text;
  Usage usage;
  std::string model_id;
  std::int64_t latency_ms = 0;

  friend bool operator==(const ModelResponse&, const ModelResponse&) = default;
};

// Fixed-point currency amount in units of 1/10000.
class Money {
 public:
  constexpr Money() = default;
  static constexpr Money from_units(std::int64_t units) { return Money(units); }
  // Half-up rounding to four decimals.
  static Money from_double(double value);

  constexpr std::int64_t units() const { return units_; }
  double value() const { return static_cast<double>(units_) / 10000.0; }
  // Always four decimals, e.g. "0.1175".
  std::string str() const;

  Money& operator+=(Money o) {
    units_ += o.units_;
    return *this;
  }
  friend Money operator+(Money a, Money b) { return a += b; }
  friend constexpr auto operator<=>(Money, Money) = default;

 private:
  constexpr explicit Money(std::int64_t units) : units_(units) {}
  std::int64_t units_ = 0;
};

struct CostRates {
  double per_1k_input = 0.0;
  double per_1k_output = 0.0;
  std::string currency = "EUR";
};

// input/1000 * per_1k_input + output/1000 * per_1k_output, half-up to 4 decimals.
Money cost_of(const Usage& usage, const CostRates& rates);

struct CompletionParams {
  double temperature = 0.0;
  int max_output_tokens = 4096;
};

// SHA-256 over the canonical JSON of (system, user, temperature,
// max_output_tokens, model_id) with newlines normalized to LF.
std::string request_digest(const prompt::PromptBundle& bundle, const CompletionParams& params,
                           const std::string& model_id);

nlohmann::json to_json(const ModelResponse& r);
ModelResponse response_from_json(const nlohmann::json& j);

struct CassetteEntry {
  std::string request_digest;
  nlohmann::json request;  // informational copy of the prompt, ignored on lookup
  ModelResponse response;
};

// Recorded exchanges keyed by request digest. Lookups are read-only; append
// and save are serialized.
class Cassette {
 public:
  Cassette() = default;
  Cassette(Cassette&& other) noexcept : entries_(std::move(other.entries_)) {}
  static Cassette load(const std::string& path);
  void save(const std::string& path) const;

  std::optional<ModelResponse> find(const std::string& digest) const;
  // Replaces an existing entry with the same digest.
  void put(CassetteEntry entry);
  std::size_t size() const;
  std::vector<CassetteEntry> entries() const;

 private:
  mutable std::mutex mutex_;
  std::vector<CassetteEntry> entries_;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual ModelResponse complete(const prompt::PromptBundle& bundle, const CompletionParams& params) = 0;
  virtual std::string model_id() const = 0;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
};

struct LiveConfig {
  // Full chat-completions URL, e.g. http://localhost:8000/v1/chat/completions.
  std::string endpoint;
  std::string model_id = "gpt-4-1106-preview";
  std::string api_key;
  // "Authorization" sends "Bearer <key>"; any other header name sends the raw key.
  std::string auth_header = "Authorization";
  std::chrono::milliseconds timeout{120000};
  RetryPolicy retry;
};

// OpenAI-compatible chat completions over HTTP+JSON. Transport failures and
// 429/5xx responses are retried with exponential backoff; other errors fail fast.
class LiveBackend : public Backend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit LiveBackend(LiveConfig config);
  ModelResponse complete(const prompt::PromptBundle& bundle, const CompletionParams& params) override;
  std::string model_id() const override { return config_.model_id; }

  void set_sleeper(Sleeper sleeper) { sleep_ = std::move(sleeper); }
  int attempts_made() const { return attempts_made_; }

 private:
  LiveConfig config_;
  Sleeper sleep_;
  std::atomic<int> attempts_made_{0};
};

class ReplayBackend : public Backend {
 public:
  ReplayBackend(std::shared_ptr<const Cassette> cassette, std::string model_id);
  ModelResponse complete(const prompt::PromptBundle& bundle, const CompletionParams& params) override;
  std::string model_id() const override { return model_id_; }

 private:
  std::shared_ptr<const Cassette> cassette_;
  std::string model_id_;
};

// Calls `inner` and appends every exchange to a cassette file.
class RecordingBackend : public Backend {
 public:
  RecordingBackend(std::unique_ptr<Backend> inner, std::shared_ptr<Cassette> cassette, std::string path);
  ModelResponse complete(const prompt::PromptBundle& bundle, const CompletionParams& params) override;
  std::string model_id() const override { return inner_->model_id(); }

 private:
  std::unique_ptr<Backend> inner_;
  std::shared_ptr<Cassette> cassette_;
  std::string path_;
  std::mutex save_mutex_;
};

struct Completion {
  ModelResponse response;
  Money cost;
};

// Backend plus pricing. Accumulates spend across calls.
class Gateway {
 public:
  Gateway(std::unique_ptr<Backend> backend, CostRates rates, CompletionParams params = {});

  Completion complete(const prompt::PromptBundle& bundle);

  const CostRates& rates() const { return rates_; }
  const CompletionParams& params() const { return params_; }
  std::string model_id() const { return backend_->model_id(); }
  Money total_cost() const;
  Usage total_usage() const;

 private:
  std::unique_ptr<Backend> backend_;
  CostRates rates_;
  CompletionParams params_;
  mutable std::mutex mutex_;
  Money total_cost_;
  Usage total_usage_;
};

}  // namespace atgen::gateway
