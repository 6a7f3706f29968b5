#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "drpipe/pipeline/session.hpp"
#include "drpipe/scenegen/scene.hpp"
#include "drpipe/transport/carrier.hpp"

namespace drpipe::endpoints {

enum class ClientMode { kOffload, kLocal };

struct ClientRunSpec {
  transport::Endpoint server{"127.0.0.1", 7401};
  // Exactly one source.
  std::optional<std::filesystem::path> bundle_dir;
  std::optional<scenegen::SceneConfig> generate;
  double fps = 30.0;
  pipeline::SessionConfig session_cfg;
  std::filesystem::path out_dir = "out";
  ClientMode mode = ClientMode::kOffload;
  // Send as fast as possible, keeping at most queue_capacity frames in
  // flight so the server never drops.
  bool afap = false;

  void validate() const;  // throws InvalidConfig, NonPositiveFps
};

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConnect = 2,
  kExitProtocol = 3,
  kExitSource = 4,
};

struct ClientOutcome {
  int exit_code = kExitOk;
  std::string message;
  std::vector<pipeline::PipelineResult> results;  // ordered by frame_id
  std::vector<std::uint64_t> dropped_ids;
  nlohmann::json report;
};

// Streams the source, collects one result per surviving frame and, on
// success, writes out_dir/composed_%05d.ppm, out_dir/results/ and
// out_dir/report.json. Nothing is written when the run fails.
//
// Report: {mode, frames_sent, frames_received, dropped, elapsed_s,
// results_per_s, round_trip_us, transport_us, server: run report,
// rates: {bypass, reuse, drop}, bundle_hash}. round_trip_us is measured on
// the client clock; transport_us = round trip - server total.
ClientOutcome run_client(const ClientRunSpec& spec);

}  // namespace drpipe::endpoints
