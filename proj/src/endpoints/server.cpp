#include "drpipe/endpoints/server.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <list>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include <spdlog/spdlog.h>

#include "drpipe/endpoints/protocol.hpp"
#include "drpipe/pipeline/report.hpp"
#include "drpipe/pipeline/scheduler.hpp"
#include "drpipe/pipeline/session.hpp"
#include "drpipe/scenegen/bundle_io.hpp"
#include "drpipe/scenegen/scene.hpp"

namespace drpipe::endpoints {

namespace {

using json = nlohmann::json;
using transport::Carrier;
using transport::Message;

std::uint64_t now_epoch_us() {
  return std::uint64_t(std::chrono::duration_cast<std::chrono::microseconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count());
}

// A running pipeline session and everything that receives its output.
struct Hosted {
  Hosted(std::uint64_t id_, pipeline::SessionConfig cfg, std::shared_ptr<const compose::AssetStore> assets)
      : id(id_), epoch_us(now_epoch_us()), session(cfg, std::move(assets)), scheduler(cfg.queue_capacity) {}

  const std::uint64_t id;
  const std::uint64_t epoch_us;

  std::mutex mu;  // session, window
  pipeline::Session session;
  pipeline::RunReportBuilder window;
  std::uint64_t processed = 0;

  pipeline::Scheduler scheduler;
  std::thread worker;

  std::mutex sinks_mu;
  std::vector<std::shared_ptr<Carrier>> sinks;  // sinks[0] is the owner

  void broadcast(const Message& m) {
    std::vector<std::shared_ptr<Carrier>> targets;
    {
      std::lock_guard lock(sinks_mu);
      targets = sinks;
    }
    for (const auto& c : targets) c->send(m);
  }

  void attach(std::shared_ptr<Carrier> c) {
    std::lock_guard lock(sinks_mu);
    sinks.push_back(std::move(c));
  }

  void detach(const Carrier* c) {
    std::lock_guard lock(sinks_mu);
    std::erase_if(sinks, [&](const auto& s) { return s.get() == c; });
  }

  // Caller holds mu. Periodic pushes start a new window; on-demand
  // snapshots do not.
  transport::Metrics metrics_locked(bool reset) {
    json j = window.to_json();
    j["session_id"] = id;
    j["window_frames"] = window.frames();
    const auto& cfg = session.config();
    j["gating"] = {{"frame_passer", cfg.gating.frame_passer_enabled}, {"early_stop", cfg.gating.early_stop_enabled}};
    j["asset_id"] = cfg.asset_id;
    j["instance_id"] = cfg.target.instance_id;
    j["budget_us"] = cfg.budget.budget_us;
    if (reset) window = {};
    return transport::Metrics{j.dump()};
  }

  transport::Metrics metrics(bool reset) {
    std::lock_guard lock(mu);
    return metrics_locked(reset);
  }

  void run_worker() {
    core::Frame frame;
    while (scheduler.take(frame)) {
      std::optional<Message> out;
      std::optional<transport::Metrics> push;
      {
        std::lock_guard lock(mu);
        try {
          const auto r = session.process_frame(frame);
          window.add(r);
          out = to_result_msg(r);
          if (++processed % kMetricsEvery == 0) push = metrics_locked(true);
        } catch (const Error& e) {
          spdlog::warn("session {}: frame {}: {}", id, frame.frame_id(), e.what());
          out = error_msg(wire_error_for(e.code()), e.what());
        }
      }
      broadcast(*out);
      if (push) broadcast(*push);
    }
  }

  void start() {
    worker = std::thread([this] { run_worker(); });
  }

  // Processes what is queued, then stops the worker.
  void drain() {
    scheduler.close();
    if (worker.joinable()) worker.join();
  }
};

}  // namespace

void ServerConfig::validate() const {
  if (max_sessions < 1) fail(ErrorCode::kInvalidConfig, "max_sessions must be >= 1");
}

struct EdgeServer::Impl {
  ServerConfig cfg;
  std::shared_ptr<const compose::AssetStore> assets;
  std::unique_ptr<transport::Listener> tcp;
  std::unique_ptr<transport::Listener> ws;
  std::vector<std::thread> acceptors;
  std::atomic<bool> stopping{false};
  std::once_flag stopped;

  mutable std::mutex registry_mu;
  std::map<std::uint64_t, std::shared_ptr<Hosted>> registry;
  std::uint64_t next_id = 1;

  struct Connection {
    std::shared_ptr<Carrier> carrier;
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };
  std::mutex conns_mu;
  std::list<Connection> conns;

  // nullptr when the session limit is reached.
  std::shared_ptr<Hosted> create_session(const pipeline::SessionConfig& cfg) {
    std::lock_guard lock(registry_mu);
    if (registry.size() >= this->cfg.max_sessions) return nullptr;
    auto h = std::make_shared<Hosted>(next_id, cfg, assets);
    registry.emplace(next_id++, h);
    return h;
  }

  std::shared_ptr<Hosted> find_session(std::uint64_t id) {
    std::lock_guard lock(registry_mu);
    const auto it = registry.find(id);
    return it == registry.end() ? nullptr : it->second;
  }

  void end_session(const std::shared_ptr<Hosted>& h) {
    {
      std::lock_guard lock(registry_mu);
      registry.erase(h->id);
    }
    h->drain();
    std::vector<std::shared_ptr<Carrier>> observers;
    {
      std::lock_guard lock(h->sinks_mu);
      observers.assign(h->sinks.begin() + std::min<std::size_t>(1, h->sinks.size()), h->sinks.end());
      h->sinks.resize(std::min<std::size_t>(1, h->sinks.size()));
    }
    for (const auto& o : observers) {
      o->send(transport::Bye{});
      o->close();
    }
    spdlog::info("session {} ended", h->id);
  }

  static void reject(Carrier& c, WireError code, const std::string& detail) {
    spdlog::warn("{}: {} ({})", c.peer(), detail, int(code));
    c.send(error_msg(code, detail));
    c.close();
  }

  void apply_control(Hosted& h, Carrier& from, const std::string& text) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      from.send(error_msg(WireError::kInvalidControl, e.what()));
      return;
    }
    transport::Metrics ack;
    {
      std::lock_guard lock(h.mu);
      try {
        h.session.apply_control(j);
      } catch (const Error& e) {
        from.send(error_msg(wire_error_for(e.code()), e.what()));
        return;
      }
      ack = h.metrics_locked(false);
    }
    // Acknowledge with the updated state so every viewer reflects it.
    h.broadcast(ack);
  }

  // Reads until Bye or disconnect. Returns true on Bye.
  bool serve_messages(Hosted& h, Carrier& c, bool accepts_frames) {
    while (auto in = c.receive()) {
      if (const auto* err = std::get_if<transport::DecodeError>(&*in)) {
        c.send(error_msg(WireError::kDecodeError, std::string(transport::decode_error_name(err->kind)) + ": " +
                                                     err->detail));
        continue;
      }
      auto& msg = std::get<Message>(*in);
      if (auto* f = std::get_if<transport::FrameMsg>(&msg); f && accepts_frames) {
        const auto outcome = h.scheduler.submit(std::move(f->frame));
        if (outcome.dropped_id) {
          std::lock_guard lock(h.mu);
          h.window.add_dropped();
        }
      } else if (const auto* ctl = std::get_if<transport::Control>(&msg)) {
        apply_control(h, c, ctl->control_json);
      } else if (std::holds_alternative<transport::Metrics>(msg)) {
        c.send(h.metrics(false));
      } else if (std::holds_alternative<transport::Bye>(msg)) {
        return true;
      } else {
        c.send(error_msg(WireError::kUnexpectedMessage,
                         std::string(transport::message_type_name(transport::message_type(msg))) +
                             " not accepted here"));
      }
    }
    return false;
  }

  void run_device(const std::shared_ptr<Carrier>& c, const json& cfg_json) {
    pipeline::SessionConfig cfg;
    try {
      cfg = pipeline::session_config_from_json(cfg_json);
      assets->get(cfg.asset_id);
    } catch (const Error& e) {
      reject(*c, e.code() == ErrorCode::kUnknownAsset ? WireError::kUnknownAsset : WireError::kBadHello, e.what());
      return;
    }
    auto h = create_session(cfg);
    if (!h) return reject(*c, WireError::kSessionLimit, "session limit reached");
    h->attach(c);
    c->send(transport::HelloAck{h->id, h->epoch_us});
    spdlog::info("session {} started for {}", h->id, c->peer());
    h->start();
    const bool bye = serve_messages(*h, *c, true);
    end_session(h);
    if (bye) {
      c->send(h->metrics(false));
      c->send(transport::Bye{});
    }
    c->close();
  }

  void run_observer(const std::shared_ptr<Carrier>& c, std::uint64_t id) {
    auto h = find_session(id);
    if (!h) return reject(*c, WireError::kUnknownSession, "no session " + std::to_string(id));
    c->send(transport::HelloAck{h->id, h->epoch_us});
    h->attach(c);
    spdlog::info("viewer {} observing session {}", c->peer(), id);
    if (serve_messages(*h, *c, false)) c->send(transport::Bye{});
    h->detach(c.get());
    c->close();
  }

  void run_demo(const std::shared_ptr<Carrier>& c, const json& demo) {
    pipeline::SessionConfig cfg;
    scenegen::SequenceBundle bundle;
    try {
      if (!demo.is_object()) fail(ErrorCode::kInvalidConfig, "demo must be an object");
      cfg = pipeline::session_config_from_json(demo.value("session", json::object()));
      assets->get(cfg.asset_id);
      auto scene = scenegen::default_scene_config();
      if (demo.contains("scene")) scene = scenegen::scene_config_from_json(demo["scene"]);
      bundle = scenegen::generate_sequence(scene);
    } catch (const Error& e) {
      reject(*c, e.code() == ErrorCode::kUnknownAsset ? WireError::kUnknownAsset : WireError::kBadHello, e.what());
      return;
    }
    auto h = create_session(cfg);
    if (!h) return reject(*c, WireError::kSessionLimit, "session limit reached");
    h->attach(c);
    c->send(transport::HelloAck{h->id, h->epoch_us});
    spdlog::info("demo session {} started for viewer {}", h->id, c->peer());
    h->start();

    std::atomic<bool> feeding{true};
    std::thread feeder([&] {
      const auto period = std::chrono::microseconds(std::uint64_t(1e6 / bundle.meta.fps));
      auto next = std::chrono::steady_clock::now();
      for (std::uint64_t id = 0; feeding; ++id) {
        const auto& src = bundle.frames[id % bundle.size()];
        auto header = src.header();
        header.frame_id = id;
        header.capture_ts_us = id * std::uint64_t(period.count());
        h->scheduler.submit(src.with_header(header));
        next += period;
        while (feeding && std::chrono::steady_clock::now() < next) {
          std::this_thread::sleep_for(std::min<std::chrono::steady_clock::duration>(
              next - std::chrono::steady_clock::now(), std::chrono::milliseconds(5)));
        }
      }
    });
    const bool bye = serve_messages(*h, *c, false);
    feeding = false;
    feeder.join();
    end_session(h);
    if (bye) c->send(transport::Bye{});
    c->close();
  }

  void handle(const std::shared_ptr<Carrier>& c) {
    auto first = c->receive();
    if (!first) return c->close();
    if (std::holds_alternative<transport::DecodeError>(*first)) {
      return reject(*c, WireError::kDecodeError, "undecodable hello");
    }
    const auto* hello = std::get_if<transport::Hello>(&std::get<Message>(*first));
    if (!hello) return reject(*c, WireError::kUnexpectedMessage, "expected Hello");
    if (hello->proto_version != transport::kProtoVersion) {
      return reject(*c, WireError::kUnsupportedVersion,
                    "protocol version " + std::to_string(hello->proto_version) + " not supported");
    }
    json j;
    try {
      j = hello->session_cfg_json.empty() ? json::object() : json::parse(hello->session_cfg_json);
    } catch (const json::exception& e) {
      return reject(*c, WireError::kBadHello, e.what());
    }
    if (j.is_object() && j.contains("viewer")) {
      const auto& v = j["viewer"];
      if (v.is_object() && v.contains("observe") && v["observe"].is_number_unsigned()) {
        return run_observer(c, v["observe"].get<std::uint64_t>());
      }
      if (v.is_object() && v.contains("demo")) return run_demo(c, v["demo"]);
      return reject(*c, WireError::kBadHello, "viewer hello needs observe or demo");
    }
    run_device(c, j);
  }

  void reap_finished() {
    std::lock_guard lock(conns_mu);
    for (auto it = conns.begin(); it != conns.end();) {
      if (*it->done) {
        it->thread.join();
        it = conns.erase(it);
      } else {
        ++it;
      }
    }
  }

  void accept_loop(transport::Listener& listener) {
    while (auto carrier = listener.accept()) {
      reap_finished();
      std::shared_ptr<Carrier> c = std::move(carrier);
      std::lock_guard lock(conns_mu);
      if (stopping) {
        c->close();
        break;
      }
      auto done = std::make_shared<std::atomic<bool>>(false);
      conns.push_back({c, std::thread([this, c, done] {
                         try {
                           handle(c);
                         } catch (const std::exception& e) {
                           spdlog::error("{}: connection handler failed: {}", c->peer(), e.what());
                           c->close();
                         }
                         *done = true;
                       }),
                       done});
    }
  }
};

EdgeServer::EdgeServer(ServerConfig cfg) : impl_(std::make_unique<Impl>()) {
  cfg.validate();
  impl_->cfg = cfg;
  impl_->assets = std::make_shared<const compose::AssetStore>(
      cfg.asset_dir ? compose::AssetStore::with_directory(*cfg.asset_dir) : compose::AssetStore());
  impl_->tcp = std::make_unique<transport::Listener>(transport::CarrierKind::kTcp, cfg.tcp);
  if (cfg.ws) impl_->ws = std::make_unique<transport::Listener>(transport::CarrierKind::kWebSocket, *cfg.ws);
}

EdgeServer::~EdgeServer() { stop(); }

void EdgeServer::start() {
  impl_->acceptors.emplace_back([this] { impl_->accept_loop(*impl_->tcp); });
  if (impl_->ws) impl_->acceptors.emplace_back([this] { impl_->accept_loop(*impl_->ws); });
  spdlog::info("listening on tcp {}{}", impl_->tcp->port(),
               impl_->ws ? " and ws " + std::to_string(impl_->ws->port()) : std::string());
}

void EdgeServer::stop() {
  std::call_once(impl_->stopped, [this] {
    impl_->stopping = true;
    impl_->tcp->close();
    if (impl_->ws) impl_->ws->close();
    for (auto& t : impl_->acceptors) t.join();
    std::list<Impl::Connection> conns;
    {
      std::lock_guard lock(impl_->conns_mu);
      conns.swap(impl_->conns);
    }
    for (auto& c : conns) c.carrier->close();
    for (auto& c : conns) c.thread.join();
  });
}

std::uint16_t EdgeServer::tcp_port() const { return impl_->tcp->port(); }

std::optional<std::uint16_t> EdgeServer::ws_port() const {
  return impl_->ws ? std::optional<std::uint16_t>(impl_->ws->port()) : std::nullopt;
}

std::size_t EdgeServer::session_count() const {
  std::lock_guard lock(impl_->registry_mu);
  return impl_->registry.size();
}

}  // namespace drpipe::endpoints
