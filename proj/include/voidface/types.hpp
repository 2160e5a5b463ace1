#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace voidface {

using Byte = std::uint8_t;

// 128-bit subject identifier, rendered in canonical UUID text form.
class SubjectId {
 public:
  SubjectId() = default;
  explicit SubjectId(const std::array<Byte, 16>& bytes) : bytes_(bytes) {}

  static SubjectId parse(std::string_view text);
  static std::optional<SubjectId> try_parse(std::string_view text);

  const std::array<Byte, 16>& bytes() const { return bytes_; }
  std::string str() const;
  bool is_nil() const;

  auto operator<=>(const SubjectId&) const = default;

 private:
  std::array<Byte, 16> bytes_{};
};

struct Dimensions {
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::uint8_t channels = 3;

  std::size_t pixel_count() const { return std::size_t{width} * height; }
  std::size_t byte_count() const { return pixel_count() * channels; }

  auto operator<=>(const Dimensions&) const = default;
};

std::string to_string(const Dimensions& d);

enum class PatchKind : std::uint8_t {
  left_eyebrow = 0,
  right_eyebrow,
  left_eye,
  right_eye,
  nose,
  mouth,
};

inline constexpr std::size_t kPatchKindCount = 6;
inline constexpr std::array<PatchKind, kPatchKindCount> kAllPatchKinds = {
    PatchKind::left_eyebrow, PatchKind::right_eyebrow, PatchKind::left_eye,
    PatchKind::right_eye,    PatchKind::nose,          PatchKind::mouth};

std::string_view to_string(PatchKind kind);
std::optional<PatchKind> parse_patch_kind(std::string_view name);

}  // namespace voidface
