#include "drpipe/transport/carrier.hpp"

#include <array>
#include <charconv>
#include <deque>
#include <future>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "drpipe/core/error.hpp"

namespace drpipe::transport {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    fail(ErrorCode::kInvalidArgument, "expected host:port, got '" + text + "'");
  }
  unsigned port = 0;
  const char* first = text.data() + colon + 1;
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, port);
  if (ec != std::errc{} || ptr != last || port > 65535) {
    fail(ErrorCode::kInvalidArgument, "bad port in '" + text + "'");
  }
  return {text.substr(0, colon), std::uint16_t(port)};
}

namespace {

std::string endpoint_text(const tcp::socket& s) {
  boost::system::error_code ec;
  const auto ep = s.remote_endpoint(ec);
  return ec ? "?" : ep.address().to_string() + ":" + std::to_string(ep.port());
}

void push_feed(std::deque<Inbound>& pending, FeedResult&& fr) {
  for (auto& m : fr.messages) pending.emplace_back(std::move(m));
  for (auto& e : fr.errors) pending.emplace_back(std::move(e));
}

class TcpCarrier final : public Carrier {
 public:
  explicit TcpCarrier(std::unique_ptr<asio::io_context> ioc, tcp::socket socket)
      : ioc_(std::move(ioc)), socket_(std::move(socket)), peer_(endpoint_text(socket_)) {
    boost::system::error_code ec;
    socket_.set_option(tcp::no_delay(true), ec);
  }

  ~TcpCarrier() override { close(); }

  bool send(const Message& m) override {
    const auto bytes = encode(m);
    std::lock_guard lock(send_mu_);
    boost::system::error_code ec;
    asio::write(socket_, asio::buffer(bytes), ec);
    return !ec;
  }

  std::optional<Inbound> receive() override {
    while (pending_.empty()) {
      boost::system::error_code ec;
      const std::size_t n = socket_.read_some(asio::buffer(chunk_), ec);
      if (ec || n == 0) return std::nullopt;
      push_feed(pending_, decoder_.feed({chunk_.data(), n}));
    }
    Inbound in = std::move(pending_.front());
    pending_.pop_front();
    return in;
  }

  void close() override {
    std::call_once(closed_, [this] {
      boost::system::error_code ec;
      socket_.shutdown(tcp::socket::shutdown_both, ec);
    });
  }

  std::string peer() const override { return peer_; }

 private:
  std::unique_ptr<asio::io_context> ioc_;
  tcp::socket socket_;
  std::string peer_;
  std::mutex send_mu_;
  std::once_flag closed_;
  Decoder decoder_;
  std::deque<Inbound> pending_;
  std::array<std::uint8_t, 64 * 1024> chunk_{};
};

// Beast streams allow one outstanding read and one outstanding write, both on
// the same executor; every operation is posted to a private io thread and the
// caller waits for its completion.
class WsCarrier final : public Carrier {
 public:
  enum class Role { kServer, kClient };

  // `socket` must belong to `ioc`. A server carrier starts its handshake
  // immediately on the io thread; send and receive wait for it.
  WsCarrier(std::unique_ptr<asio::io_context> ioc, tcp::socket socket, Role role, const std::string& host = {})
      : ioc_(std::move(ioc)), ws_(std::move(socket)), peer_(endpoint_text(ws_.next_layer())) {
    ws_.binary(true);
    ws_.read_message_max(kMaxPayload + kEnvelopeBytes);
    std::promise<bool> handshake;
    handshake_ = handshake.get_future().share();
    if (role == Role::kClient) {
      ws_.handshake(host, "/");
      handshake.set_value(true);
    } else {
      asio::post(*ioc_, [this, p = std::make_shared<std::promise<bool>>(std::move(handshake))] {
        ws_.async_accept([p](boost::system::error_code ec) { p->set_value(!ec); });
      });
    }
    runner_ = std::thread([this] { ioc_->run(); });
  }

  ~WsCarrier() override {
    close();
    work_.reset();
    runner_.join();
  }

  bool send(const Message& m) override {
    if (!ensure_started()) return false;
    auto bytes = std::make_shared<std::vector<std::uint8_t>>(encode(m));
    std::lock_guard lock(send_mu_);
    std::promise<boost::system::error_code> done;
    auto fut = done.get_future();
    asio::post(*ioc_, [this, bytes, &done] {
      ws_.async_write(asio::buffer(*bytes),
                      [bytes, &done](boost::system::error_code ec, std::size_t) { done.set_value(ec); });
    });
    return !fut.get();
  }

  std::optional<Inbound> receive() override {
    if (!ensure_started()) return std::nullopt;
    while (pending_.empty()) {
      std::promise<boost::system::error_code> done;
      auto fut = done.get_future();
      beast::flat_buffer buf;
      asio::post(*ioc_, [this, &buf, &done] {
        ws_.async_read(buf, [&done](boost::system::error_code ec, std::size_t) { done.set_value(ec); });
      });
      if (fut.get()) return std::nullopt;
      // One envelope per websocket message.
      Decoder d;
      const auto data = buf.cdata();
      auto fr = d.feed({static_cast<const std::uint8_t*>(data.data()), data.size()});
      if (d.buffered() > 0 || d.pending_garbage() > 0) {
        fr.errors.push_back({DecodeErrorKind::kMalformed, d.buffered() + d.pending_garbage(),
                             "incomplete envelope in websocket message"});
      }
      push_feed(pending_, std::move(fr));
    }
    Inbound in = std::move(pending_.front());
    pending_.pop_front();
    return in;
  }

  void close() override {
    std::call_once(closed_, [this] {
      if (handshake_.wait_for(std::chrono::seconds(0)) != std::future_status::ready || !handshake_.get()) {
        asio::post(*ioc_, [this] {
          boost::system::error_code ec;
          ws_.next_layer().close(ec);
        });
        handshake_.wait();
        return;
      }
      std::promise<void> done;
      auto fut = done.get_future();
      asio::post(*ioc_, [this, &done] {
        if (!ws_.is_open()) {
          boost::system::error_code ec;
          ws_.next_layer().close(ec);
          done.set_value();
          return;
        }
        ws_.async_close(websocket::close_code::normal, [this, &done](boost::system::error_code) {
          boost::system::error_code ec;
          ws_.next_layer().close(ec);
          done.set_value();
        });
      });
      if (fut.wait_for(std::chrono::seconds(2)) != std::future_status::ready) {
        asio::post(*ioc_, [this] {
          boost::system::error_code ec;
          ws_.next_layer().close(ec);
        });
        fut.wait();
      }
    });
  }

  std::string peer() const override { return peer_; }

 private:
  bool ensure_started() { return handshake_.get(); }

  std::unique_ptr<asio::io_context> ioc_;
  websocket::stream<tcp::socket> ws_;
  asio::executor_work_guard<asio::io_context::executor_type> work_ = asio::make_work_guard(*ioc_);
  std::string peer_;
  std::thread runner_;
  std::shared_future<bool> handshake_;
  std::mutex send_mu_;
  std::once_flag closed_;
  std::deque<Inbound> pending_;
};

tcp::endpoint resolve_one(asio::io_context& ioc, const Endpoint& ep) {
  tcp::resolver resolver(ioc);
  const auto results = resolver.resolve(ep.host, std::to_string(ep.port));
  return *results.begin();
}

}  // namespace

std::unique_ptr<Carrier> connect(CarrierKind kind, const Endpoint& ep) {
  try {
    auto ioc = std::make_unique<asio::io_context>();
    tcp::socket socket(*ioc);
    socket.connect(resolve_one(*ioc, ep));
    if (kind == CarrierKind::kTcp) return std::make_unique<TcpCarrier>(std::move(ioc), std::move(socket));
    return std::make_unique<WsCarrier>(std::move(ioc), std::move(socket), WsCarrier::Role::kClient, ep.host);
  } catch (const boost::system::system_error& e) {
    fail(ErrorCode::kConnectFailure, ep.to_string() + ": " + e.what());
  }
}

struct Listener::Impl {
  CarrierKind kind;
  asio::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::mutex mu;
  bool closed = false;
};

Listener::Listener(CarrierKind kind, const Endpoint& ep) : impl_(std::make_unique<Impl>()) {
  impl_->kind = kind;
  try {
    const auto endpoint = resolve_one(impl_->ioc, ep);
    impl_->acceptor.open(endpoint.protocol());
    impl_->acceptor.set_option(tcp::acceptor::reuse_address(true));
    impl_->acceptor.bind(endpoint);
    impl_->acceptor.listen();
  } catch (const boost::system::system_error& e) {
    fail(ErrorCode::kBindFailure, ep.to_string() + ": " + e.what());
  }
}

Listener::~Listener() { close(); }

std::unique_ptr<Carrier> Listener::accept() {
  auto sock_ioc = std::make_unique<asio::io_context>();
  tcp::socket socket(*sock_ioc);
  boost::system::error_code result = asio::error::operation_aborted;
  {
    std::lock_guard lock(impl_->mu);
    if (impl_->closed) return nullptr;
    impl_->ioc.restart();
    impl_->acceptor.async_accept(socket, [&](boost::system::error_code ec) { result = ec; });
  }
  impl_->ioc.run();
  if (result) return nullptr;
  if (impl_->kind == CarrierKind::kTcp) return std::make_unique<TcpCarrier>(std::move(sock_ioc), std::move(socket));
  return std::make_unique<WsCarrier>(std::move(sock_ioc), std::move(socket), WsCarrier::Role::kServer);
}

void Listener::close() {
  std::lock_guard lock(impl_->mu);
  if (impl_->closed) return;
  impl_->closed = true;
  boost::system::error_code ec;
  impl_->acceptor.close(ec);
  impl_->ioc.stop();
}

std::uint16_t Listener::port() const { return impl_->acceptor.local_endpoint().port(); }

CarrierKind Listener::kind() const { return impl_->kind; }

}  // namespace drpipe::transport
