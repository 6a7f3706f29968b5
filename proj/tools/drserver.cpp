#include <csignal>
#include <cstdio>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "drpipe/core/error.hpp"
#include "drpipe/endpoints/server.hpp"
#include "log_level.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Edge server: hosts pipeline sessions over TCP and websocket"};
  std::string tcp = "127.0.0.1:7401";
  std::string ws = "127.0.0.1:7402";
  std::string assets;
  std::size_t max_sessions = 8;
  std::string log = "info";
  app.add_option("--tcp", tcp, "TCP listen address")->capture_default_str();
  app.add_option("--ws", ws, "websocket listen address")->capture_default_str();
  app.add_option("--assets", assets, "directory of *.mesh assets")->check(CLI::ExistingDirectory);
  app.add_option("--max-sessions", max_sessions, "concurrent session limit")->capture_default_str();
  app.add_option("--log", log, "trace|debug|info|warn|error|off")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  apply_log_level(log);

  // Block the shutdown signals before any thread starts so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  try {
    drpipe::endpoints::ServerConfig cfg;
    cfg.tcp = drpipe::transport::parse_endpoint(tcp);
    cfg.ws = drpipe::transport::parse_endpoint(ws);
    cfg.max_sessions = max_sessions;
    if (!assets.empty()) cfg.asset_dir = assets;
    drpipe::endpoints::EdgeServer server(cfg);
    server.start();
    int sig = 0;
    sigwait(&signals, &sig);
    spdlog::info("signal {}, shutting down", sig);
    server.stop();
  } catch (const drpipe::Error& e) {
    spdlog::error("{}", e.what());
    return e.code() == drpipe::ErrorCode::kBindFailure ? 2 : 1;
  }
  return 0;
}
