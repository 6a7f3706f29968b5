#include "drpipe/transport/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include <zlib.h>

#include "drpipe/core/error.hpp"

namespace drpipe::transport {

namespace {

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v, 2); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void f32(float v, const char* what) {
    if (!std::isfinite(v)) fail(ErrorCode::kNonFiniteFloat, what);
    u32(std::bit_cast<std::uint32_t>(v));
  }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void text(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void f32_array(std::span<const float> vs, const char* what) {
    if (!std::all_of(vs.begin(), vs.end(), [](float v) { return std::isfinite(v); })) {
      fail(ErrorCode::kNonFiniteFloat, what);
    }
    const std::size_t at = out_.size();
    out_.resize(at + vs.size() * 4);
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out_.data() + at, vs.data(), vs.size() * 4);
    } else {
      for (std::size_t i = 0; i < vs.size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(vs[i]);
        for (int b = 0; b < 4; ++b) out_[at + i * 4 + std::size_t(b)] = std::uint8_t(bits >> (8 * b));
      }
    }
  }

  void pose(const core::Pose6D& p, const char* what) {
    for (float v : {p.t.x, p.t.y, p.t.z, p.q.w, p.q.x, p.q.y, p.q.z}) f32(v, what);
  }

 private:
  void put_le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(std::uint8_t(v >> (8 * i)));
  }

  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return std::uint8_t(get_le(1)); }
  std::uint16_t u16() { return std::uint16_t(get_le(2)); }
  std::uint32_t u32() { return std::uint32_t(get_le(4)); }
  std::uint64_t u64() { return get_le(8); }
  float f32(const char* what) {
    const float v = std::bit_cast<float>(u32());
    if (!std::isfinite(v)) fail(ErrorCode::kMalformedMessage, std::string("non-finite ") + what);
    return v;
  }
  std::vector<std::uint8_t> bytes(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> out(in_.begin() + pos_, in_.begin() + pos_ + n);
    pos_ += n;
    return out;
  }
  std::vector<float> f32_array(std::size_t n, const char* what) {
    need(n * 4);
    std::vector<float> out(n);
    const std::uint8_t* src = in_.data() + pos_;
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out.data(), src, n * 4);
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= std::uint32_t(src[i * 4 + std::size_t(b)]) << (8 * b);
        out[i] = std::bit_cast<float>(bits);
      }
    }
    if (!std::all_of(out.begin(), out.end(), [](float v) { return std::isfinite(v); })) {
      fail(ErrorCode::kMalformedMessage, std::string("non-finite ") + what);
    }
    pos_ += n * 4;
    return out;
  }
  std::string rest_text() {
    std::string s(reinterpret_cast<const char*>(in_.data()) + pos_, in_.size() - pos_);
    pos_ = in_.size();
    return s;
  }
  core::Pose6D pose(const char* what) {
    core::Pose6D p;
    p.t = {f32(what), f32(what), f32(what)};
    p.q = {f32(what), f32(what), f32(what), f32(what)};
    return p;
  }
  std::size_t remaining() const { return in_.size() - pos_; }
  void need(std::size_t n) const {
    if (remaining() < n) fail(ErrorCode::kMalformedMessage, "truncated payload");
  }
  void finish() const {
    if (remaining() != 0) fail(ErrorCode::kMalformedMessage, std::to_string(remaining()) + " trailing bytes");
  }

 private:
  std::uint64_t get_le(int n) {
    need(std::size_t(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t(in_[pos_ + i]) << (8 * i);
    pos_ += std::size_t(n);
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::size_t checked_raster(std::uint32_t w, std::uint32_t h, ErrorCode code) {
  if (w == 0 || h == 0 || w > core::kMaxImageDim || h > core::kMaxImageDim) {
    fail(code, "raster dimensions out of range");
  }
  return std::size_t(w) * h;
}

void write_payload(Writer& w, const Hello& m) {
  w.u16(m.proto_version);
  w.text(m.session_cfg_json);
}

void write_payload(Writer& w, const HelloAck& m) {
  w.u64(m.session_id);
  w.u64(m.epoch_us);
}

void write_payload(Writer& w, const FrameMsg& m) {
  const auto& f = m.frame;
  if (f.width() == 0) fail(ErrorCode::kMalformedMessage, "empty frame");
  const auto& h = f.header();
  w.u64(h.frame_id);
  w.u64(h.capture_ts_us);
  w.u32(h.width);
  w.u32(h.height);
  w.u8(f.has_depth() ? 1 : 0);
  for (float v : {h.intrinsics.fx, h.intrinsics.fy, h.intrinsics.cx, h.intrinsics.cy}) w.f32(v, "intrinsics");
  w.pose(h.camera_pose, "camera pose");
  w.bytes(f.rgb());
  if (f.has_depth()) {
    w.f32_array(f.depth(), "depth");
  }
}

void write_payload(Writer& w, const ResultMsg& m) {
  if (m.flags & 0xF0) fail(ErrorCode::kMalformedMessage, "flags bits 4..7 must be zero");
  const std::size_t n = checked_raster(m.width, m.height, ErrorCode::kMalformedMessage);
  if (m.inpainted_rgb.size() != n * 3) fail(ErrorCode::kMalformedMessage, "inpainted raster length");
  if (m.composed_rgb && m.composed_rgb->size() != n * 3) {
    fail(ErrorCode::kMalformedMessage, "composed raster length");
  }
  w.u64(m.frame_id);
  w.u8(m.flags);
  w.u8(m.pose ? 1 : 0);
  w.pose(m.pose.value_or(core::Pose6D{}), "pose");
  w.pose(m.placement_pose, "placement pose");
  w.f32(m.placement_scale, "placement scale");
  w.u16(std::uint16_t(m.timings.present_count()));
  for (std::size_t s = 0; s < core::kStageCount; ++s) {
    const auto v = m.timings.get(core::Stage(s));
    if (!v) continue;
    const auto name = core::stage_name(core::Stage(s));
    w.u8(std::uint8_t(name.size()));
    w.text(name);
    w.u64(*v);
  }
  w.u32(m.width);
  w.u32(m.height);
  w.bytes(m.inpainted_rgb);
  w.u8(m.composed_rgb ? 1 : 0);
  if (m.composed_rgb) w.bytes(*m.composed_rgb);
}

void write_payload(Writer& w, const Control& m) { w.text(m.control_json); }
void write_payload(Writer& w, const Metrics& m) { w.text(m.report_json); }

void write_payload(Writer& w, const ErrorMsg& m) {
  w.u16(m.code);
  w.text(m.detail);
}

void write_payload(Writer&, const Bye&) {}

FrameMsg read_frame(Reader& r) {
  core::FrameHeader h;
  h.frame_id = r.u64();
  h.capture_ts_us = r.u64();
  h.width = r.u32();
  h.height = r.u32();
  const std::uint8_t has_depth = r.u8();
  if (has_depth > 1) fail(ErrorCode::kMalformedMessage, "has_depth must be 0 or 1");
  h.intrinsics = {r.f32("intrinsics"), r.f32("intrinsics"), r.f32("intrinsics"), r.f32("intrinsics")};
  h.camera_pose = r.pose("camera pose");
  const std::size_t n = checked_raster(h.width, h.height, ErrorCode::kMalformedMessage);
  r.need(n * 3 + (has_depth ? n * 4 : 0));
  auto rgb = r.bytes(n * 3);
  std::optional<std::vector<float>> depth;
  if (has_depth) {
    depth = r.f32_array(n, "depth");
  }
  r.finish();
  return FrameMsg{core::Frame(h, std::move(rgb), std::move(depth))};
}

ResultMsg read_result(Reader& r) {
  ResultMsg m;
  m.frame_id = r.u64();
  m.flags = r.u8();
  if (m.flags & 0xF0) fail(ErrorCode::kMalformedMessage, "flags bits 4..7 must be zero");
  const std::uint8_t pose_present = r.u8();
  if (pose_present > 1) fail(ErrorCode::kMalformedMessage, "pose_present must be 0 or 1");
  const auto pose = r.pose("pose");
  if (pose_present) m.pose = pose;
  m.placement_pose = r.pose("placement pose");
  m.placement_scale = r.f32("placement scale");
  const std::uint16_t count = r.u16();
  for (std::uint16_t i = 0; i < count; ++i) {
    const std::uint8_t len = r.u8();
    const auto raw = r.bytes(len);
    const auto stage = core::stage_from_name(std::string_view(reinterpret_cast<const char*>(raw.data()), raw.size()));
    if (!stage) fail(ErrorCode::kMalformedMessage, "unknown stage name");
    if (m.timings.has(*stage)) fail(ErrorCode::kMalformedMessage, "duplicate stage timing");
    m.timings.set(*stage, r.u64());
  }
  m.width = r.u32();
  m.height = r.u32();
  const std::size_t n = checked_raster(m.width, m.height, ErrorCode::kMalformedMessage);
  m.inpainted_rgb = r.bytes(n * 3);
  const std::uint8_t composed_present = r.u8();
  if (composed_present > 1) fail(ErrorCode::kMalformedMessage, "composed_present must be 0 or 1");
  if (composed_present) m.composed_rgb = r.bytes(n * 3);
  r.finish();
  return m;
}

}  // namespace

MsgType message_type(const Message& m) { return MsgType(std::uint8_t(m.index() + 1)); }

std::string_view message_type_name(MsgType t) {
  switch (t) {
    case MsgType::kHello: return "Hello";
    case MsgType::kHelloAck: return "HelloAck";
    case MsgType::kFrame: return "FrameMsg";
    case MsgType::kResult: return "ResultMsg";
    case MsgType::kControl: return "Control";
    case MsgType::kMetrics: return "Metrics";
    case MsgType::kError: return "ErrorMsg";
    case MsgType::kBye: return "Bye";
  }
  return "Unknown";
}

std::string_view decode_error_name(DecodeErrorKind k) {
  switch (k) {
    case DecodeErrorKind::kBadMagic: return "BadMagic";
    case DecodeErrorKind::kCrcMismatch: return "CrcMismatch";
    case DecodeErrorKind::kOversized: return "Oversized";
    case DecodeErrorKind::kMalformed: return "Malformed";
  }
  return "Unknown";
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  // zlib takes a uInt length; payloads are capped well below that.
  return std::uint32_t(::crc32(0L, bytes.data(), uInt(bytes.size())));
}

std::vector<std::uint8_t> encode(const Message& m) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.push_back(std::uint8_t(message_type(m)));
  out.resize(9);  // length patched below
  Writer w(out);
  std::visit([&](const auto& msg) { write_payload(w, msg); }, m);
  const std::size_t len = out.size() - 9;
  if (len > kMaxPayload) fail(ErrorCode::kOversizedPayload, std::to_string(len) + " payload bytes");
  for (int i = 0; i < 4; ++i) out[5 + i] = std::uint8_t(len >> (8 * i));
  w.u32(crc32(std::span(out).subspan(4)));
  return out;
}

Message decode_payload(MsgType type, std::span<const std::uint8_t> payload) {
  Reader r(payload);
  switch (type) {
    case MsgType::kHello: {
      Hello h;
      h.proto_version = r.u16();
      h.session_cfg_json = r.rest_text();
      return h;
    }
    case MsgType::kHelloAck: {
      HelloAck a;
      a.session_id = r.u64();
      a.epoch_us = r.u64();
      r.finish();
      return a;
    }
    case MsgType::kFrame:
      return read_frame(r);
    case MsgType::kResult:
      return read_result(r);
    case MsgType::kControl:
      return Control{r.rest_text()};
    case MsgType::kMetrics:
      return Metrics{r.rest_text()};
    case MsgType::kError: {
      ErrorMsg e;
      e.code = r.u16();
      e.detail = r.rest_text();
      return e;
    }
    case MsgType::kBye:
      r.finish();
      return Bye{};
  }
  fail(ErrorCode::kMalformedMessage, "unknown message type " + std::to_string(int(type)));
}

FeedResult Decoder::feed(std::span<const std::uint8_t> chunk) {
  FeedResult out;
  if (chunk.empty()) return out;
  buffer_.insert(buffer_.end(), chunk.begin(), chunk.end());
  drain(out);
  if (head_ == buffer_.size()) {
    buffer_.clear();
    head_ = 0;
  } else if (head_ > 0 && head_ >= buffer_.size() / 2) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + std::ptrdiff_t(head_));
    head_ = 0;
  }
  return out;
}

void Decoder::drain(FeedResult& out) {
  auto prefix_matches = [](const std::uint8_t* p, std::size_t avail) {
    return std::memcmp(p, kMagic, std::min<std::size_t>(4, avail)) == 0;
  };
  while (head_ < buffer_.size()) {
    const std::uint8_t* p = buffer_.data() + head_;
    const std::size_t avail = buffer_.size() - head_;

    if (!prefix_matches(p, avail)) {
      std::size_t i = 1;
      while (i < avail && !prefix_matches(p + i, avail - i)) ++i;
      skip(i);
      garbage_ += i;
      continue;
    }
    if (avail < 4) return;
    if (garbage_ > 0) {
      out.errors.push_back({DecodeErrorKind::kBadMagic, garbage_, "skipped to next magic"});
      garbage_ = 0;
    }
    if (avail < 9) return;

    const std::uint8_t type = p[4];
    const std::uint32_t len = std::uint32_t(p[5]) | std::uint32_t(p[6]) << 8 | std::uint32_t(p[7]) << 16 |
                              std::uint32_t(p[8]) << 24;
    if (len > kMaxPayload) {
      out.errors.push_back({DecodeErrorKind::kOversized, 9, "payload_len " + std::to_string(len)});
      skip(9);
      continue;
    }
    const std::size_t total = kEnvelopeBytes + len;
    if (avail < total) return;

    const std::uint32_t stored = std::uint32_t(p[9 + len]) | std::uint32_t(p[10 + len]) << 8 |
                                 std::uint32_t(p[11 + len]) << 16 | std::uint32_t(p[12 + len]) << 24;
    if (crc32({p + 4, 5 + std::size_t(len)}) != stored) {
      out.errors.push_back({DecodeErrorKind::kCrcMismatch, total, std::string(message_type_name(MsgType(type)))});
      skip(total);
      continue;
    }
    try {
      out.messages.push_back(decode_payload(MsgType(type), {p + 9, len}));
    } catch (const Error& e) {
      out.errors.push_back({DecodeErrorKind::kMalformed, total, e.what()});
    }
    skip(total);
  }
}

}  // namespace drpipe::transport
