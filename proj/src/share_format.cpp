#include "voidface/share_format.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>

#include "voidface/error.hpp"

namespace voidface::share_format {

namespace {

constexpr Byte kMagic[4] = {'V', 'O', 'I', 'D'};

void put_u16(std::vector<Byte>& out, std::uint16_t v) {
  out.push_back(static_cast<Byte>(v & 0xFF));
  out.push_back(static_cast<Byte>(v >> 8));
}

void put_u32(std::vector<Byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<Byte>(v >> (8 * i)));
}

std::uint16_t get_u16(std::span<const Byte> d, std::size_t at) {
  return static_cast<std::uint16_t>(d[at] | (d[at + 1] << 8));
}

std::uint32_t get_u32(std::span<const Byte> d, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{d[at + i]} << (8 * i);
  return v;
}

}  // namespace

std::uint32_t crc32(std::span<const Byte> data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < data.size()) {
    auto n = static_cast<uInt>(std::min<std::size_t>(data.size() - off, 1u << 30));
    crc = ::crc32(crc, data.data() + off, n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<Byte> encode(const vss::ShareGrid& grid) {
  grid.validate();
  std::vector<Byte> out;
  out.reserve(kHeaderSize + grid.bytes.size() + kTrailerSize);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kVersion);
  out.push_back(static_cast<Byte>(grid.role));
  out.insert(out.end(), grid.subject.bytes().begin(), grid.subject.bytes().end());
  out.push_back(grid.patch_index);
  out.push_back(grid.subgrid_index);
  out.push_back(grid.subgrid_total);
  put_u16(out, grid.dims.width);
  put_u16(out, grid.dims.height);
  out.push_back(grid.dims.channels);
  out.insert(out.end(), grid.bytes.begin(), grid.bytes.end());
  put_u32(out, crc32(out));
  return out;
}

vss::ShareGrid decode(std::span<const Byte> data) {
  if (data.size() < kHeaderSize + kTrailerSize)
    fail(ErrorCode::format, "share record truncated (" + std::to_string(data.size()) + " bytes)");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), data.begin()))
    fail(ErrorCode::format, "bad share magic");
  if (data[4] != kVersion)
    fail(ErrorCode::format, "unsupported share version " + std::to_string(data[4]));
  if (data[5] > 2) fail(ErrorCode::format, "unknown share role " + std::to_string(data[5]));

  vss::ShareGrid g;
  g.role = static_cast<vss::ShareRole>(data[5]);
  std::array<Byte, 16> id{};
  std::copy_n(data.begin() + 6, 16, id.begin());
  g.subject = SubjectId(id);
  g.patch_index = data[22];
  g.subgrid_index = data[23];
  g.subgrid_total = data[24];
  g.dims.width = get_u16(data, 25);
  g.dims.height = get_u16(data, 27);
  g.dims.channels = data[29];

  const std::size_t payload = g.dims.byte_count();
  if (data.size() != kHeaderSize + payload + kTrailerSize)
    fail(ErrorCode::format, "share record length does not match header dimensions");
  const std::size_t body = kHeaderSize + payload;
  if (crc32(data.first(body)) != get_u32(data, body)) fail(ErrorCode::format, "share CRC mismatch");

  g.bytes.assign(data.begin() + kHeaderSize, data.begin() + body);
  g.validate();
  return g;
}

void write_file(const std::filesystem::path& path, const vss::ShareGrid& grid) {
  const auto bytes = encode(grid);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) fail(ErrorCode::io, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

vss::ShareGrid read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::not_found, "cannot open share file " + path.string());
  std::vector<Byte> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

std::string file_name(const vss::ShareGrid& grid) {
  std::string base = grid.subject.str();
  switch (grid.role) {
    case vss::ShareRole::authentication:
      return base + "_as.share";
    case vss::ShareRole::private_share:
      return base + "_p" + std::to_string(grid.patch_index) + ".share";
    case vss::ShareRole::subgrid:
      return base + "_p" + std::to_string(grid.patch_index) + "_s" +
             std::to_string(grid.subgrid_index) + "of" + std::to_string(grid.subgrid_total) +
             ".share";
  }
  return base + ".share";
}

}  // namespace voidface::share_format
