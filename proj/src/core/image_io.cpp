#include "drpipe/core/image_io.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <string>

#include "drpipe/core/error.hpp"

namespace drpipe::core {

namespace {

std::vector<std::uint8_t> netpbm_header(const char* magic, std::uint32_t w, std::uint32_t h,
                                        unsigned maxval) {
  const std::string s = std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) +
                        "\n" + std::to_string(maxval) + "\n";
  return {s.begin(), s.end()};
}

// Parses "<magic> <w> <h> <maxval>" with comments, leaving `pos` at the first
// raster byte (after the single whitespace following maxval).
struct NetpbmHeader {
  std::uint32_t width;
  std::uint32_t height;
  unsigned maxval;
  std::size_t data_offset;
};

NetpbmHeader parse_netpbm(std::span<const std::uint8_t> b, const char* magic) {
  if (b.size() < 2 || b[0] != std::uint8_t(magic[0]) || b[1] != std::uint8_t(magic[1])) {
    fail(ErrorCode::kIo, std::string("expected ") + magic + " header");
  }
  std::size_t pos = 2;
  auto next_number = [&]() -> unsigned long {
    while (pos < b.size()) {
      if (b[pos] == '#') {
        while (pos < b.size() && b[pos] != '\n') ++pos;
      } else if (std::isspace(b[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= b.size() || !std::isdigit(b[pos])) fail(ErrorCode::kIo, "malformed netpbm header");
    unsigned long v = 0;
    while (pos < b.size() && std::isdigit(b[pos])) {
      v = v * 10 + (b[pos] - '0');
      if (v > 1'000'000) fail(ErrorCode::kIo, "netpbm header value too large");
      ++pos;
    }
    return v;
  };
  NetpbmHeader h{};
  h.width = std::uint32_t(next_number());
  h.height = std::uint32_t(next_number());
  h.maxval = unsigned(next_number());
  if (pos >= b.size() || !std::isspace(b[pos])) fail(ErrorCode::kIo, "malformed netpbm header");
  h.data_offset = pos + 1;
  if (h.width == 0 || h.height == 0 || h.width > kMaxImageDim || h.height > kMaxImageDim) {
    fail(ErrorCode::kIo, "netpbm dimensions out of range");
  }
  return h;
}

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

std::uint32_t get_u32le(std::span<const std::uint8_t> b, std::size_t at) {
  return std::uint32_t(b[at]) | std::uint32_t(b[at + 1]) << 8 | std::uint32_t(b[at + 2]) << 16 |
         std::uint32_t(b[at + 3]) << 24;
}

}  // namespace

std::vector<std::uint8_t> encode_ppm(std::uint32_t width, std::uint32_t height,
                                     std::span<const std::uint8_t> rgb) {
  if (rgb.size() != std::size_t(width) * height * 3) fail(ErrorCode::kDimMismatch, "ppm raster");
  auto out = netpbm_header("P6", width, height, 255);
  out.insert(out.end(), rgb.begin(), rgb.end());
  return out;
}

RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  const auto h = parse_netpbm(bytes, "P6");
  if (h.maxval != 255) fail(ErrorCode::kIo, "only maxval 255 PPM is supported");
  const std::size_t n = std::size_t(h.width) * h.height * 3;
  if (bytes.size() - h.data_offset != n) fail(ErrorCode::kIo, "PPM raster size mismatch");
  RgbImage img{h.width, h.height, {}};
  img.rgb.assign(bytes.begin() + std::ptrdiff_t(h.data_offset), bytes.end());
  return img;
}

std::vector<std::uint8_t> encode_pgm16(const InstanceMask& mask) {
  auto out = netpbm_header("P5", mask.width(), mask.height(), 65535);
  out.reserve(out.size() + mask.labels().size() * 2);
  for (auto l : mask.labels()) {
    out.push_back(std::uint8_t(l >> 8));
    out.push_back(std::uint8_t(l & 0xff));
  }
  return out;
}

InstanceMask decode_pgm16(std::span<const std::uint8_t> bytes) {
  const auto h = parse_netpbm(bytes, "P5");
  if (h.maxval != 65535) fail(ErrorCode::kIo, "mask PGM must use maxval 65535");
  const std::size_t n = std::size_t(h.width) * h.height;
  if (bytes.size() - h.data_offset != n * 2) fail(ErrorCode::kIo, "PGM raster size mismatch");
  std::vector<std::uint16_t> labels(n);
  const std::uint8_t* p = bytes.data() + h.data_offset;
  for (std::size_t i = 0; i < n; ++i) labels[i] = std::uint16_t(p[2 * i] << 8 | p[2 * i + 1]);
  return InstanceMask(h.width, h.height, std::move(labels));
}

std::vector<std::uint8_t> encode_depth(std::uint32_t width, std::uint32_t height,
                                       std::span<const float> depth) {
  if (depth.size() != std::size_t(width) * height) fail(ErrorCode::kDimMismatch, "depth raster");
  std::vector<std::uint8_t> out = {'D', 'P', 'T', '1'};
  out.reserve(16 + depth.size() * 4);
  put_u32le(out, width);
  put_u32le(out, height);
  put_u32le(out, 0);
  for (float f : depth) put_u32le(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

DepthImage decode_depth(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "DPT1", 4) != 0) {
    fail(ErrorCode::kIo, "missing DPT1 magic");
  }
  DepthImage img;
  img.width = get_u32le(bytes, 4);
  img.height = get_u32le(bytes, 8);
  if (get_u32le(bytes, 12) != 0) fail(ErrorCode::kIo, "DPT1 reserved field must be 0");
  if (img.width == 0 || img.height == 0 || img.width > kMaxImageDim || img.height > kMaxImageDim) {
    fail(ErrorCode::kIo, "depth dimensions out of range");
  }
  const std::size_t n = std::size_t(img.width) * img.height;
  if (bytes.size() != 16 + n * 4) fail(ErrorCode::kIo, "depth raster size mismatch");
  img.depth.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    img.depth[i] = std::bit_cast<float>(get_u32le(bytes, 16 + 4 * i));
  }
  return img;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::kIo, "read failed: " + path.string());
  return data;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

void write_ppm(const std::filesystem::path& path, const Frame& frame) {
  write_file(path, encode_ppm(frame.width(), frame.height(), frame.rgb()));
}

RgbImage read_ppm(const std::filesystem::path& path) { return decode_ppm(read_file(path)); }

void write_pgm16(const std::filesystem::path& path, const InstanceMask& mask) {
  write_file(path, encode_pgm16(mask));
}

InstanceMask read_pgm16(const std::filesystem::path& path) {
  return decode_pgm16(read_file(path));
}

void write_depth(const std::filesystem::path& path, const Frame& frame) {
  if (!frame.has_depth()) fail(ErrorCode::kNoDepth, "frame has no depth plane");
  write_file(path, encode_depth(frame.width(), frame.height(), frame.depth()));
}

DepthImage read_depth(const std::filesystem::path& path) { return decode_depth(read_file(path)); }

}  // namespace drpipe::core
