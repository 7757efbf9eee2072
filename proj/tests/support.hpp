#pragma once

#include <httplib.h>

#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <thread>

#include "atgen/config.hpp"
#include "atgen/gateway.hpp"

namespace testing_support {

inline constexpr const char* kProductUrl = "https://shop.example.com/de-DE/shop/ls/dp/physical-goods/900653";
inline constexpr const char* kCartUrl = "https://shop.example.com/de-DE/shop/cart";

std::string source_path(const std::string& relative);
std::string fixture_path(const std::string& relative);
std::string read(const std::string& path);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

// Local HTTP server on an ephemeral port; routes are registered before start().
class FakeServer {
 public:
  FakeServer() = default;
  ~FakeServer();
  httplib::Server& server() { return server_; }
  void start();
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int port() const { return port_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

// Backend answering from a callback; counts calls.
class ScriptedBackend : public atgen::gateway::Backend {
 public:
  using Fn = std::function<atgen::gateway::ModelResponse(const atgen::prompt::PromptBundle&)>;
  explicit ScriptedBackend(Fn fn, std::string model = "scripted-model") : fn_(std::move(fn)), model_(std::move(model)) {}
  atgen::gateway::ModelResponse complete(const atgen::prompt::PromptBundle& b,
                                         const atgen::gateway::CompletionParams&) override {
    ++calls;
    return fn_(b);
  }
  std::string model_id() const override { return model_; }
  int calls = 0;

 private:
  Fn fn_;
  std::string model_;
};

// Bundled offline configuration: replay cassette, fixture pages, local stories.
atgen::config::Config offline_config();

// The prompt-independent Gherkin of the bundled fixtures.
std::string golden_feature_text();
std::string shop101_feature_text();
std::string golden_script();

using Rng = std::mt19937_64;

}  // namespace testing_support
