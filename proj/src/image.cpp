#include "voidface/image.hpp"

#include <png.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "voidface/error.hpp"

namespace voidface {

namespace {

struct PnmCursor {
  std::span<const Byte> d;
  std::size_t pos = 0;

  void skip_space_and_comments() {
    while (pos < d.size()) {
      if (d[pos] == '#') {
        while (pos < d.size() && d[pos] != '\n') ++pos;
      } else if (std::isspace(d[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  }

  std::uint32_t number() {
    skip_space_and_comments();
    if (pos >= d.size() || !std::isdigit(d[pos])) fail(ErrorCode::format, "malformed PNM header");
    std::uint64_t v = 0;
    while (pos < d.size() && std::isdigit(d[pos])) {
      v = v * 10 + (d[pos++] - '0');
      if (v > 0xFFFFFFFFu) fail(ErrorCode::format, "PNM header value overflow");
    }
    return static_cast<std::uint32_t>(v);
  }
};

}  // namespace

Image decode_pnm(std::span<const Byte> data) {
  if (data.size() < 2 || data[0] != 'P' || (data[1] != '6' && data[1] != '5'))
    fail(ErrorCode::format, "not a binary PPM/PGM image");
  const bool gray = data[1] == '5';
  PnmCursor cur{data, 2};
  Image img;
  img.width = cur.number();
  img.height = cur.number();
  std::uint32_t maxval = cur.number();
  if (maxval != 255) fail(ErrorCode::format, "only 8-bit PNM (maxval 255) is supported");
  if (cur.pos >= data.size() || !std::isspace(data[cur.pos]))
    fail(ErrorCode::format, "malformed PNM header");
  ++cur.pos;
  if (img.width == 0 || img.height == 0) fail(ErrorCode::dimension, "empty PNM image");
  const std::size_t px = std::size_t{img.width} * img.height;
  const std::size_t need = px * (gray ? 1 : 3);
  if (data.size() - cur.pos < need) fail(ErrorCode::format, "PNM pixel data truncated");
  img.channels = 3;
  img.pixels.resize(px * 3);
  if (gray) {
    for (std::size_t i = 0; i < px; ++i)
      img.pixels[3 * i] = img.pixels[3 * i + 1] = img.pixels[3 * i + 2] = data[cur.pos + i];
  } else {
    std::memcpy(img.pixels.data(), data.data() + cur.pos, need);
  }
  return img;
}

Image decode_png(std::span<const Byte> data) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, data.data(), data.size()))
    fail(ErrorCode::format, std::string("PNG decode failed: ") + png.message);
  png.format = PNG_FORMAT_RGB;
  Image img;
  img.width = png.width;
  img.height = png.height;
  img.channels = 3;
  img.pixels.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    fail(ErrorCode::format, "PNG decode failed: " + msg);
  }
  if (img.width == 0 || img.height == 0) fail(ErrorCode::dimension, "empty PNG image");
  return img;
}

Image decode_image(std::span<const Byte> data) {
  static constexpr Byte kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (data.size() >= 8 && std::memcmp(data.data(), kPngSig, 8) == 0) return decode_png(data);
  if (data.size() >= 2 && data[0] == 'P') return decode_pnm(data);
  fail(ErrorCode::format, "unrecognised image format (expected PNG or binary PPM/PGM)");
}

std::vector<Byte> encode_ppm(const Image& img) {
  if (img.channels != 3) fail(ErrorCode::dimension, "PPM encoder expects 3 channels");
  std::string header =
      "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<Byte> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

std::vector<Byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::not_found, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace voidface
