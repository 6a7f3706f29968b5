#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>

#include "drpipe/transport/carrier.hpp"

namespace drpipe::endpoints {

// Metrics are pushed to a session's sinks after every this many processed frames.
inline constexpr std::uint64_t kMetricsEvery = 30;

struct ServerConfig {
  transport::Endpoint tcp{"127.0.0.1", 7401};
  std::optional<transport::Endpoint> ws = transport::Endpoint{"127.0.0.1", 7402};
  std::size_t max_sessions = 8;
  std::optional<std::filesystem::path> asset_dir;

  void validate() const;  // throws InvalidConfig
};

// Edge server: one pipeline session per TCP connection, plus websocket viewers
// that either observe a running session ({"viewer":{"observe":ID}}) or own a
// demo session fed from a generated scene ({"viewer":{"demo":{...}}}).
class EdgeServer {
 public:
  // Binds both listeners and loads assets. Throws BindFailure, InvalidConfig,
  // AssetFormat.
  explicit EdgeServer(ServerConfig cfg);
  ~EdgeServer();
  EdgeServer(const EdgeServer&) = delete;
  EdgeServer& operator=(const EdgeServer&) = delete;

  void start();
  // Closes listeners and every connection, then joins all threads. Idempotent.
  void stop();

  std::uint16_t tcp_port() const;
  std::optional<std::uint16_t> ws_port() const;
  std::size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace drpipe::endpoints
