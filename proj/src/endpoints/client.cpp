#include "drpipe/endpoints/client.hpp"

#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "drpipe/core/image_io.hpp"
#include "drpipe/endpoints/protocol.hpp"
#include "drpipe/pipeline/report.hpp"
#include "drpipe/pipeline/results_io.hpp"
#include "drpipe/scenegen/bundle_io.hpp"

namespace drpipe::endpoints {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Collected {
  std::vector<pipeline::PipelineResult> results;
  std::vector<std::uint64_t> dropped_ids;
  std::vector<std::uint64_t> round_trip_us;
};

// Thrown inside a run to leave with a specific exit code.
struct RunFailure {
  int exit_code;
  std::string message;
};

std::uint64_t elapsed_us(Clock::time_point since) {
  return std::uint64_t(std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - since).count());
}

Collected run_local(const scenegen::SequenceBundle& bundle, const ClientRunSpec& spec,
                    const std::shared_ptr<const compose::AssetStore>& assets) {
  Collected out;
  pipeline::Session session(spec.session_cfg, assets);
  for (const auto& frame : bundle.frames) {
    const auto t0 = Clock::now();
    out.results.push_back(session.process_frame(frame));
    out.round_trip_us.push_back(elapsed_us(t0));
  }
  return out;
}

class OffloadRun {
 public:
  OffloadRun(const scenegen::SequenceBundle& bundle, const ClientRunSpec& spec) : bundle_(bundle), spec_(spec) {}

  Collected run() {
    try {
      carrier_ = transport::connect(transport::CarrierKind::kTcp, spec_.server);
    } catch (const Error& e) {
      throw RunFailure{kExitConnect, e.what()};
    }
    handshake();
    std::thread receiver([this] { receive_loop(); });
    send_all();
    carrier_->send(transport::Bye{});
    receiver.join();
    carrier_->close();
    std::lock_guard lock(mu_);
    if (failure_) throw *failure_;
    // Anything unanswered when the server said Bye was dropped.
    for (const auto& [id, pending] : outstanding_) out_.dropped_ids.push_back(id);
    std::sort(out_.dropped_ids.begin(), out_.dropped_ids.end());
    return std::move(out_);
  }

 private:
  struct Pending {
    core::FrameHeader header;
    Clock::time_point sent_at;
  };

  void handshake() {
    carrier_->send(transport::Hello{transport::kProtoVersion,
                                    pipeline::session_config_to_json(spec_.session_cfg).dump()});
    auto in = carrier_->receive();
    if (!in) throw RunFailure{kExitProtocol, "connection closed during handshake"};
    const auto* msg = std::get_if<transport::Message>(&*in);
    if (!msg) throw RunFailure{kExitProtocol, "undecodable handshake reply"};
    if (const auto* err = std::get_if<transport::ErrorMsg>(msg)) {
      throw RunFailure{kExitProtocol, "server error " + std::to_string(err->code) + ": " + err->detail};
    }
    const auto* ack = std::get_if<transport::HelloAck>(msg);
    if (!ack) throw RunFailure{kExitProtocol, "expected HelloAck"};
    spdlog::info("session {} established", ack->session_id);
  }

  void fail_locked(std::string why) {
    if (!failure_) failure_ = RunFailure{kExitProtocol, std::move(why)};
    cv_.notify_all();
  }

  void send_all() {
    const auto start = Clock::now();
    const std::uint64_t ts0 = bundle_.frames.empty() ? 0 : bundle_.frames.front().header().capture_ts_us;
    const double speed = bundle_.meta.fps > 0.0 ? bundle_.meta.fps / spec_.fps : 1.0;
    const std::size_t window = spec_.session_cfg.queue_capacity;
    for (const auto& frame : bundle_.frames) {
      if (spec_.afap) {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return failure_ || outstanding_.size() < window; });
      } else {
        const double offset_us = double(frame.header().capture_ts_us - ts0) * speed;
        std::this_thread::sleep_until(start + std::chrono::microseconds(std::int64_t(offset_us)));
      }
      {
        std::lock_guard lock(mu_);
        if (failure_) return;
        outstanding_[frame.frame_id()] = {frame.header(), Clock::now()};
      }
      if (!carrier_->send(transport::FrameMsg{frame})) {
        std::lock_guard lock(mu_);
        fail_locked("connection lost while sending");
        return;
      }
    }
  }

  void receive_loop() {
    while (true) {
      auto in = carrier_->receive();
      std::lock_guard lock(mu_);
      if (!in) return fail_locked("connection closed before Bye");
      if (const auto* err = std::get_if<transport::DecodeError>(&*in)) {
        return fail_locked(std::string("decode error: ") + std::string(transport::decode_error_name(err->kind)));
      }
      auto& msg = std::get<transport::Message>(*in);
      if (auto* r = std::get_if<transport::ResultMsg>(&msg)) {
        const auto it = outstanding_.find(r->frame_id);
        if (it == outstanding_.end()) return fail_locked("result for unknown frame " + std::to_string(r->frame_id));
        try {
          out_.results.push_back(from_result_msg(*r, it->second.header));
        } catch (const Error& e) {
          return fail_locked(e.what());
        }
        out_.round_trip_us.push_back(elapsed_us(it->second.sent_at));
        // Results arrive in frame order, so earlier unanswered frames were dropped.
        for (auto d = outstanding_.begin(); d != it; d = outstanding_.erase(d)) out_.dropped_ids.push_back(d->first);
        outstanding_.erase(it);
        cv_.notify_all();
      } else if (const auto* e = std::get_if<transport::ErrorMsg>(&msg)) {
        return fail_locked("server error " + std::to_string(e->code) + ": " + e->detail);
      } else if (std::holds_alternative<transport::Bye>(msg)) {
        cv_.notify_all();
        return;
      } else if (!std::holds_alternative<transport::Metrics>(msg)) {
        return fail_locked("unexpected " + std::string(transport::message_type_name(transport::message_type(msg))));
      }
    }
  }

  const scenegen::SequenceBundle& bundle_;
  const ClientRunSpec& spec_;
  std::unique_ptr<transport::Carrier> carrier_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::uint64_t, Pending> outstanding_;
  Collected out_;
  std::optional<RunFailure> failure_;
};

json build_report(const ClientRunSpec& spec, const scenegen::SequenceBundle& bundle, const Collected& c,
                  double elapsed_s, const std::string& hash) {
  pipeline::RunReportBuilder server;
  std::vector<std::uint64_t> transport_us;
  for (std::size_t i = 0; i < c.results.size(); ++i) {
    server.add(c.results[i]);
    const auto total = c.results[i].timings.get(core::Stage::kTotal).value_or(0);
    transport_us.push_back(c.round_trip_us[i] > total ? c.round_trip_us[i] - total : 0);
  }
  server.add_dropped(c.dropped_ids.size());
  const auto server_json = server.to_json();
  const double sent = double(bundle.size());
  json j;
  j["mode"] = spec.mode == ClientMode::kOffload ? "offload" : "local";
  j["afap"] = spec.afap;
  j["bundle_hash"] = hash;
  j["frames_sent"] = bundle.size();
  j["frames_received"] = c.results.size();
  j["dropped"] = c.dropped_ids.size();
  j["elapsed_s"] = elapsed_s;
  j["results_per_s"] = elapsed_s > 0.0 ? double(c.results.size()) / elapsed_s : 0.0;
  j["round_trip_us"] = pipeline::percentiles_json(c.round_trip_us);
  if (spec.mode == ClientMode::kOffload) j["transport_us"] = pipeline::percentiles_json(transport_us);
  j["server"] = server_json;
  j["rates"] = {{"bypass", server_json["bypass_rate"]},
                {"reuse", server_json["reuse_rate"]},
                {"drop", sent > 0.0 ? double(c.dropped_ids.size()) / sent : 0.0}};
  return j;
}

void write_outputs(const ClientRunSpec& spec, const ClientOutcome& outcome, const std::string& hash) {
  std::filesystem::create_directories(spec.out_dir);
  for (const auto& r : outcome.results) {
    core::write_ppm(spec.out_dir / scenegen::indexed_name("composed", r.frame_id, "ppm"), *r.composed);
  }
  pipeline::StoredResults stored;
  stored.asset_id = spec.session_cfg.asset_id;
  stored.bundle_hash = hash;
  stored.results = outcome.results;
  stored.dropped_ids = outcome.dropped_ids;
  stored.report = outcome.report;
  pipeline::write_results(spec.out_dir / "results", stored);
  core::write_file(spec.out_dir / "report.json", [&] {
    const auto text = outcome.report.dump(2) + "\n";
    return std::vector<std::uint8_t>(text.begin(), text.end());
  }());
}

}  // namespace

void ClientRunSpec::validate() const {
  if (!(fps > 0.0)) fail(ErrorCode::kNonPositiveFps, "fps must be positive");
  if (bundle_dir.has_value() == generate.has_value()) {
    fail(ErrorCode::kInvalidConfig, "exactly one of bundle_dir and generate is required");
  }
  session_cfg.validate();
}

ClientOutcome run_client(const ClientRunSpec& spec) {
  ClientOutcome outcome;
  try {
    spec.validate();
  } catch (const Error& e) {
    return {kExitUsage, e.what(), {}, {}, {}};
  }
  auto assets = std::make_shared<const compose::AssetStore>();
  if (!assets->find(spec.session_cfg.asset_id) && spec.session_cfg.compose_location == pipeline::ComposeLocation::kClient) {
    return {kExitUsage, "asset '" + spec.session_cfg.asset_id + "' is not available for device compose", {}, {}, {}};
  }

  scenegen::SequenceBundle bundle;
  try {
    bundle = spec.bundle_dir ? scenegen::read_bundle(*spec.bundle_dir) : scenegen::generate_sequence(*spec.generate);
  } catch (const Error& e) {
    return {kExitSource, e.what(), {}, {}, {}};
  }
  const std::string hash = scenegen::bundle_hash(bundle);

  Collected collected;
  const auto t0 = Clock::now();
  try {
    if (spec.mode == ClientMode::kLocal) {
      collected = run_local(bundle, spec, assets);
    } else {
      collected = OffloadRun(bundle, spec).run();
    }
  } catch (const RunFailure& f) {
    return {f.exit_code, f.message, {}, {}, {}};
  } catch (const Error& e) {
    return {spec.mode == ClientMode::kLocal ? kExitSource : kExitProtocol, e.what(), {}, {}, {}};
  }
  const double elapsed_s = double(elapsed_us(t0)) / 1e6;

  for (auto& r : collected.results) compose_on_device(r, *assets, spec.session_cfg.asset_id);
  outcome.report = build_report(spec, bundle, collected, elapsed_s, hash);
  outcome.results = std::move(collected.results);
  outcome.dropped_ids = std::move(collected.dropped_ids);
  write_outputs(spec, outcome, hash);
  outcome.message = std::to_string(outcome.results.size()) + " results, " +
                    std::to_string(outcome.dropped_ids.size()) + " dropped";
  return outcome;
}

}  // namespace drpipe::endpoints
