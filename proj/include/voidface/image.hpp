#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "voidface/types.hpp"

namespace voidface {

// Decoded 8-bit interleaved image. Decoders always produce 3 channels.
struct Image {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint8_t channels = 3;
  std::vector<Byte> pixels;

  Byte at(std::uint32_t x, std::uint32_t y, std::uint8_t c) const {
    return pixels[(std::size_t{y} * width + x) * channels + c];
  }
};

// Binary PPM (P6) or PGM (P5, expanded to RGB), maxval 255.
Image decode_pnm(std::span<const Byte> data);
Image decode_png(std::span<const Byte> data);
// Picks a decoder from the leading magic bytes.
Image decode_image(std::span<const Byte> data);

std::vector<Byte> encode_ppm(const Image& img);

std::vector<Byte> read_file_bytes(const std::filesystem::path& path);

}  // namespace voidface
