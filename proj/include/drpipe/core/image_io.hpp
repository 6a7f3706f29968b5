#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "drpipe/core/types.hpp"

namespace drpipe::core {

struct RgbImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> rgb;

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

struct DepthImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<float> depth;
};

// Binary PPM (P6, maxval 255).
std::vector<std::uint8_t> encode_ppm(std::uint32_t width, std::uint32_t height,
                                     std::span<const std::uint8_t> rgb);
RgbImage decode_ppm(std::span<const std::uint8_t> bytes);

// Binary PGM (P5, maxval 65535, big-endian samples); the sample value is the label.
std::vector<std::uint8_t> encode_pgm16(const InstanceMask& mask);
InstanceMask decode_pgm16(std::span<const std::uint8_t> bytes);

// "DPT1" + u32 width + u32 height + u32 reserved (all LE), then LE float32 samples.
std::vector<std::uint8_t> encode_depth(std::uint32_t width, std::uint32_t height,
                                       std::span<const float> depth);
DepthImage decode_depth(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

void write_ppm(const std::filesystem::path& path, const Frame& frame);
RgbImage read_ppm(const std::filesystem::path& path);
void write_pgm16(const std::filesystem::path& path, const InstanceMask& mask);
InstanceMask read_pgm16(const std::filesystem::path& path);
void write_depth(const std::filesystem::path& path, const Frame& frame);
DepthImage read_depth(const std::filesystem::path& path);

}  // namespace drpipe::core
