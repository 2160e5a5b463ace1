#pragma once

// On-disk / on-wire share encoding, little-endian:
//
//   "VOID" | version u8 = 1 | role u8 | subject_id [16] | patch_index u8 |
//   subgrid_index u8 | subgrid_total u8 | width u16 | height u16 |
//   channels u8 | payload [w*h*c] | crc32 u32 (over everything before it)

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "voidface/vss.hpp"

namespace voidface::share_format {

inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 4 + 1 + 1 + 16 + 1 + 1 + 1 + 2 + 2 + 1;
inline constexpr std::size_t kTrailerSize = 4;

std::uint32_t crc32(std::span<const Byte> data);

std::vector<Byte> encode(const vss::ShareGrid& grid);
vss::ShareGrid decode(std::span<const Byte> data);

void write_file(const std::filesystem::path& path, const vss::ShareGrid& grid);
vss::ShareGrid read_file(const std::filesystem::path& path);

// "<subject>_as.share", "<subject>_p<i>.share", "<subject>_p<i>_s<j>of<k>.share"
std::string file_name(const vss::ShareGrid& grid);

}  // namespace voidface::share_format
