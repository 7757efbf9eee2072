#include "support.hpp"

#include <chrono>
#include <stdexcept>

#include "atgen/text.hpp"

#ifndef ATGEN_SOURCE_DIR
#define ATGEN_SOURCE_DIR "."
#endif

namespace testing_support {

namespace fs = std::filesystem;

std::string source_path(const std::string& relative) { return (fs::path(ATGEN_SOURCE_DIR) / relative).string(); }

std::string fixture_path(const std::string& relative) { return source_path("fixtures/" + relative); }

std::string read(const std::string& path) { return atgen::text::read_file(path); }

TempDir::TempDir() {
  static std::mt19937_64 rng(std::random_device{}());
  path_ = fs::temp_directory_path() / ("atgen-test-" + std::to_string(rng()));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

FakeServer::~FakeServer() {
  server_.stop();
  if (thread_.joinable()) thread_.join();
}

void FakeServer::start() {
  port_ = server_.bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw std::runtime_error("cannot bind fake server");
  thread_ = std::thread([this] { server_.listen_after_bind(); });
  server_.wait_until_ready();
}

atgen::config::Config offline_config() { return atgen::config::Config::defaults(); }

std::string golden_feature_text() { return read(fixture_path("golden/shop100.feature")); }
std::string shop101_feature_text() { return read(fixture_path("stories/SHOP-101/tests.feature")); }
std::string golden_script() { return read(fixture_path("golden/shop101.cy.ts")); }

}  // namespace testing_support
