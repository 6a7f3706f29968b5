#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "drpipe/core/timing.hpp"
#include "drpipe/core/types.hpp"

namespace drpipe::transport {

inline constexpr std::uint16_t kProtoVersion = 1;
inline constexpr std::uint8_t kMagic[4] = {0x44, 0x52, 0x4D, 0x31};  // "DRM1"
inline constexpr std::size_t kEnvelopeBytes = 13;                    // magic, type, len, crc
inline constexpr std::uint32_t kMaxPayload = 64u << 20;

enum class MsgType : std::uint8_t {
  kHello = 1,
  kHelloAck = 2,
  kFrame = 3,
  kResult = 4,
  kControl = 5,
  kMetrics = 6,
  kError = 7,
  kBye = 8,
};

struct Hello {
  std::uint16_t proto_version = kProtoVersion;
  std::string session_cfg_json;

  friend bool operator==(const Hello&, const Hello&) = default;
};

struct HelloAck {
  std::uint64_t session_id = 0;
  std::uint64_t epoch_us = 0;

  friend bool operator==(const HelloAck&, const HelloAck&) = default;
};

// The camera pose travels as 7 floats; its confidence is not on the wire and
// decodes as 1.
struct FrameMsg {
  core::Frame frame;

  friend bool operator==(const FrameMsg&, const FrameMsg&) = default;
};

// Fixed layout: placement fields are always encoded and only meaningful when
// pose is present. Pose confidences decode as 1.
struct ResultMsg {
  std::uint64_t frame_id = 0;
  std::uint8_t flags = 0;  // bit0 bypass, bit1 reuse, bit2 keyframe, bit3 no_target
  std::optional<core::Pose6D> pose;
  core::Pose6D placement_pose;
  float placement_scale = 0.0f;
  core::StageTimings timings;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> inpainted_rgb;
  std::optional<std::vector<std::uint8_t>> composed_rgb;

  friend bool operator==(const ResultMsg&, const ResultMsg&) = default;
};

struct Control {
  std::string control_json;

  friend bool operator==(const Control&, const Control&) = default;
};

struct Metrics {
  std::string report_json;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

struct ErrorMsg {
  std::uint16_t code = 0;
  std::string detail;

  friend bool operator==(const ErrorMsg&, const ErrorMsg&) = default;
};

struct Bye {
  friend bool operator==(const Bye&, const Bye&) = default;
};

using Message = std::variant<Hello, HelloAck, FrameMsg, ResultMsg, Control, Metrics, ErrorMsg, Bye>;

MsgType message_type(const Message& m);
std::string_view message_type_name(MsgType t);

// Standard reflected CRC-32 (polynomial 0xEDB88320).
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

// Exactly one envelope of kEnvelopeBytes + payload length bytes. Throws
// OversizedPayload, NonFiniteFloat, or MalformedMessage when a message
// invariant (flags bits 4..7, raster lengths) does not hold.
std::vector<std::uint8_t> encode(const Message& m);

// Parses one payload. Throws MalformedMessage.
Message decode_payload(MsgType type, std::span<const std::uint8_t> payload);

enum class DecodeErrorKind { kBadMagic, kCrcMismatch, kOversized, kMalformed };

std::string_view decode_error_name(DecodeErrorKind k);

struct DecodeError {
  DecodeErrorKind kind;
  std::size_t skipped_bytes = 0;  // bytes discarded for this error
  std::string detail;

  friend bool operator==(const DecodeError&, const DecodeError&) = default;
};

struct FeedResult {
  std::vector<Message> messages;
  std::vector<DecodeError> errors;
};

// Streaming decoder; one per connection. Message and error sequences do not
// depend on how the byte stream is chunked. A run of bytes that does not start
// with the magic is reported once, as a single BadMagic, when the next magic
// is found.
class Decoder {
 public:
  FeedResult feed(std::span<const std::uint8_t> chunk);

  std::size_t buffered() const { return buffer_.size() - head_; }
  // Bytes discarded since the last resynchronization, not yet reported.
  std::size_t pending_garbage() const { return garbage_; }

 private:
  void drain(FeedResult& out);
  void skip(std::size_t n) { head_ += n; }

  std::vector<std::uint8_t> buffer_;
  std::size_t head_ = 0;
  std::size_t garbage_ = 0;
};

}  // namespace drpipe::transport
