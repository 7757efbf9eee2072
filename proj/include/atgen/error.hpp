#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace atgen {

// Error categories shared by every module. The service layer maps these onto
// HTTP statuses and the CLI onto exit codes, so keep the list short.
enum class Errc {
  invalid_input,       // caller supplied something that violates a precondition
  parse_error,         // Gherkin or configuration text could not be parsed
  not_found,           // unknown issue key, generation id, fixture file
  auth_failure,        // tracker or provider rejected credentials
  missing_gherkin,     // a story has no acceptance scenarios attached
  transport,           // connection refused, DNS failure, timeout
  http_status,         // non-2xx response from a page or tracker
  content_type,        // fetched page is not text
  provider_error,      // model endpoint returned an error payload
  cache_miss,          // replay cassette has no entry for a request digest
  no_code_block,       // model response carried no fenced code
  unparsable_output,   // model response could not be parsed as Gherkin
  illegal_transition,  // case state machine rejected a verdict
  io_error,            // local file could not be read or written
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message) : std::runtime_error(message), code_(code) {}

  Errc code() const { return code_; }

  // Positioned errors (Gherkin parse, script findings) carry a 1-based line.
  int line() const { return line_; }
  Error& at_line(int line) {
    line_ = line;
    return *this;
  }

  // Short machine-readable reason, e.g. "missing-feature-header".
  const std::string& reason() const { return reason_; }
  Error& with_reason(std::string reason) {
    reason_ = std::move(reason);
    return *this;
  }

  // The URL, issue key or path the error is about.
  const std::string& subject() const { return subject_; }
  Error& about(std::string subject) {
    subject_ = std::move(subject);
    return *this;
  }

  int status() const { return status_; }
  Error& with_status(int status) {
    status_ = status;
    return *this;
  }

  // Pipeline stage tag ("scenarios" or "script") when raised inside a run.
  const std::string& stage() const { return stage_; }
  Error& in_stage(std::string stage) {
    stage_ = std::move(stage);
    return *this;
  }

 private:
  Errc code_;
  int line_ = 0;
  int status_ = 0;
  std::string reason_;
  std::string subject_;
  std::string stage_;
};

// Gateway-side failures: the CLI exits with 2 and the service answers 502.
bool is_upstream_failure(Errc code);

}  // namespace atgen
