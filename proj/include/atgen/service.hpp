#pragma once

#include <optional>
#include <string>

#include "atgen/config.hpp"
#include "atgen/ledger.hpp"

namespace httplib {
class Server;
}

namespace atgen::service {

struct Reply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// HTTP+JSON front end over a Runtime. Every 2xx POST appends exactly one
// ledger event; every failed request appends one error event.
class Service {
 public:
  // An empty or absent token disables authentication.
  Service(config::Runtime& runtime, ledger::RunLedger& ledger, std::optional<std::string> bearer_token = std::nullopt);

  // Transport-independent entry point. `authorization` is the raw header value.
  Reply handle(const std::string& method, const std::string& path, const std::string& body,
               const std::string& authorization = "");

  // Routes every request of `server` through handle().
  void bind(httplib::Server& server);

 private:
  Reply scenarios(const std::string& body);
  Reply scripts(const std::string& body);
  Reply feedback(const std::string& body);
  Reply summary();
  Reply fail(const std::string& endpoint, int status, const std::string& code, const std::string& message,
             const nlohmann::json& fields = nullptr);

  config::Runtime& runtime_;
  ledger::RunLedger& ledger_;
  std::optional<std::string> token_;
};

// HTTP status for a library error raised while serving a request.
int status_for(const Error& e);

}  // namespace atgen::service
