#include <cstdio>
#include <sodium.h>

#include <boost/uuid/string_generator.hpp>
#include <boost/uuid/uuid.hpp>
#include <boost/uuid/uuid_io.hpp>

#include "voidface/error.hpp"
#include "voidface/random.hpp"
#include "voidface/types.hpp"

namespace voidface {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::io: return "io";
    case ErrorCode::format: return "format";
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::landmark_bounds: return "landmark-bounds";
    case ErrorCode::incomplete_landmarks: return "incomplete-landmarks";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::not_found: return "not-found";
    case ErrorCode::authorization: return "authorization";
    case ErrorCode::no_data: return "no-data";
    case ErrorCode::incomplete_share: return "incomplete-share";
    case ErrorCode::capacity: return "capacity";
    case ErrorCode::config: return "config";
    case ErrorCode::ordering: return "ordering";
    case ErrorCode::insufficient_capacity: return "insufficient-capacity";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::trainer: return "trainer";
  }
  return "unknown";
}

// --- SubjectId ---------------------------------------------------------------

std::optional<SubjectId> SubjectId::try_parse(std::string_view text) {
  try {
    boost::uuids::string_generator gen;
    auto u = gen(std::string(text));
    std::array<Byte, 16> bytes{};
    std::copy(u.begin(), u.end(), bytes.begin());
    return SubjectId(bytes);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

SubjectId SubjectId::parse(std::string_view text) {
  auto id = try_parse(text);
  if (!id) fail(ErrorCode::invalid_argument, "malformed subject id: " + std::string(text));
  return *id;
}

std::string SubjectId::str() const {
  boost::uuids::uuid u{};
  std::copy(bytes_.begin(), bytes_.end(), u.begin());
  return boost::uuids::to_string(u);
}

bool SubjectId::is_nil() const {
  for (Byte b : bytes_)
    if (b != 0) return false;
  return true;
}

std::string to_string(const Dimensions& d) {
  return std::to_string(d.width) + "x" + std::to_string(d.height) + "x" +
         std::to_string(d.channels);
}

namespace {
constexpr std::array<std::string_view, kPatchKindCount> kKindNames = {
    "left_eyebrow", "right_eyebrow", "left_eye", "right_eye", "nose", "mouth"};
}

std::string_view to_string(PatchKind kind) {
  return kKindNames.at(static_cast<std::size_t>(kind));
}

std::optional<PatchKind> parse_patch_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == name) return static_cast<PatchKind>(i);
  return std::nullopt;
}

// --- randomness --------------------------------------------------------------

std::uint64_t RandomSource::uniform_below(std::uint64_t bound) {
  if (bound == 0) fail(ErrorCode::invalid_argument, "uniform_below(0)");
  // Lemire-style rejection on the low range.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

double RandomSource::uniform_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

SecureRandom::SecureRandom() {
  if (sodium_init() < 0) fail(ErrorCode::io, "libsodium initialisation failed");
}

void SecureRandom::fill(std::span<Byte> out) {
  randombytes_buf(out.data(), out.size());
}

std::uint64_t SecureRandom::next_u64() {
  std::uint64_t v;
  randombytes_buf(&v, sizeof v);
  return v;
}

void SeededRandom::fill(std::span<Byte> out) {
  std::size_t i = 0;
  while (i + 8 <= out.size()) {
    std::uint64_t v = engine_();
    for (int b = 0; b < 8; ++b) out[i++] = static_cast<Byte>(v >> (8 * b));
  }
  if (i < out.size()) {
    std::uint64_t v = engine_();
    while (i < out.size()) {
      out[i++] = static_cast<Byte>(v);
      v >>= 8;
    }
  }
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace voidface
