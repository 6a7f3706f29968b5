#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "drpipe/transport/codec.hpp"

namespace drpipe::transport {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
};

// "host:port"; throws InvalidArgument.
Endpoint parse_endpoint(const std::string& text);

using Inbound = std::variant<Message, DecodeError>;

// A full-duplex message link. send() may run concurrently with receive();
// concurrent sends are serialized.
class Carrier {
 public:
  virtual ~Carrier() = default;

  // False once the link is gone.
  virtual bool send(const Message& m) = 0;
  // Blocks for the next message or decode error; nullopt after the peer
  // closes or close() is called.
  virtual std::optional<Inbound> receive() = 0;
  // Unblocks a pending receive. Idempotent.
  virtual void close() = 0;
  virtual std::string peer() const = 0;
};

enum class CarrierKind { kTcp, kWebSocket };

// Throws ConnectFailure.
std::unique_ptr<Carrier> connect(CarrierKind kind, const Endpoint& ep);

class Listener {
 public:
  // Port 0 binds an ephemeral port. Throws BindFailure.
  Listener(CarrierKind kind, const Endpoint& ep);
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  // Blocks for the next connection; nullptr after close(). A websocket
  // handshake completes in the background.
  std::unique_ptr<Carrier> accept();
  void close();
  std::uint16_t port() const;
  CarrierKind kind() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace drpipe::transport
