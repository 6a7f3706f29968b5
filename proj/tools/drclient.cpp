#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "drpipe/core/error.hpp"
#include "drpipe/core/image_io.hpp"
#include "drpipe/endpoints/client.hpp"
#include "drpipe/scenegen/bundle_io.hpp"
#include "log_level.hpp"

namespace {

nlohmann::json read_json(const std::string& path) {
  const auto bytes = drpipe::core::read_file(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    drpipe::fail(drpipe::ErrorCode::kInvalidConfig, path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Client simulator: streams a bundle to the edge server or runs it locally"};
  std::string server = "127.0.0.1:7401";
  std::string bundle;
  std::string generate;
  std::string session;
  std::string out = "out";
  std::string mode = "offload";
  double fps = 30.0;
  bool afap = false;
  std::string log = "info";
  app.add_option("--server", server, "edge server address")->capture_default_str();
  auto* bundle_opt = app.add_option("--bundle", bundle, "bundle directory")->check(CLI::ExistingDirectory);
  auto* generate_opt = app.add_option("--generate", generate, "scene config JSON to generate a bundle from")
                           ->check(CLI::ExistingFile);
  bundle_opt->excludes(generate_opt);
  app.add_option("--fps", fps, "playback rate")->capture_default_str();
  app.add_option("--session", session, "session config JSON")->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory")->capture_default_str();
  app.add_option("--mode", mode, "offload|local")->check(CLI::IsMember({"offload", "local"}))->capture_default_str();
  app.add_flag("--afap", afap, "send as fast as possible (closed loop)");
  app.add_option("--log", log, "trace|debug|info|warn|error|off")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  apply_log_level(log);

  drpipe::endpoints::ClientRunSpec spec;
  try {
    spec.server = drpipe::transport::parse_endpoint(server);
    if (bundle.empty() == generate.empty()) {
      std::cerr << "exactly one of --bundle and --generate is required\n";
      return drpipe::endpoints::kExitUsage;
    }
    if (!bundle.empty()) spec.bundle_dir = bundle;
    if (!generate.empty()) spec.generate = drpipe::scenegen::scene_config_from_json(read_json(generate));
    if (!session.empty()) spec.session_cfg = drpipe::pipeline::session_config_from_json(read_json(session));
  } catch (const drpipe::Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == drpipe::ErrorCode::kIo ? drpipe::endpoints::kExitSource : drpipe::endpoints::kExitUsage;
  }
  spec.fps = fps;
  spec.out_dir = out;
  spec.mode = mode == "local" ? drpipe::endpoints::ClientMode::kLocal : drpipe::endpoints::ClientMode::kOffload;
  spec.afap = afap;

  const auto outcome = drpipe::endpoints::run_client(spec);
  if (outcome.exit_code != drpipe::endpoints::kExitOk) {
    std::cerr << "drclient: " << outcome.message << "\n";
    return outcome.exit_code;
  }
  const auto& r = outcome.report;
  std::printf("%s: %zu results, %zu dropped, %.1f results/s, round trip p50 %llu us, bypass %.2f, reuse %.2f\n",
              r["mode"].get<std::string>().c_str(), outcome.results.size(), outcome.dropped_ids.size(),
              r["results_per_s"].get<double>(), r["round_trip_us"]["p50"].get<unsigned long long>(),
              r["rates"]["bypass"].get<double>(), r["rates"]["reuse"].get<double>());
  return 0;
}
