#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "voidface/image.hpp"
#include "voidface/secure_buffer.hpp"
#include "voidface/vss.hpp"

namespace voidface::patch {

struct Box {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t width = 0;
  std::int64_t height = 0;
};

// One box per facial region, in source-image pixels.
struct LandmarkSet {
  std::array<std::optional<Box>, kPatchKindCount> boxes;

  void set(PatchKind kind, Box b) { boxes[static_cast<std::size_t>(kind)] = b; }

  // Throws incomplete_landmarks / landmark_bounds.
  void validate(std::uint32_t image_width, std::uint32_t image_height) const;

  // {"left_eye": {"x":..,"y":..,"w":..,"h":..}, ...}
  static LandmarkSet from_json(const nlohmann::json& j);
  static LandmarkSet load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

struct PatchBundle {
  SubjectId subject;
  std::vector<vss::PatchImage> patches;  // canonical kind order
};

// Bilinear resample of a source rectangle to target x target, sampling at
// pixel centres (src = (dst + 0.5) * scale - 0.5, clamped to the box).
vss::PatchImage resample_box(const Image& img, const Box& box, std::uint16_t target,
                             std::uint8_t patch_index);

PatchBundle extract_patches(const Image& img, const LandmarkSet& landmarks,
                            std::uint16_t target_size, const SubjectId& subject);

struct AuditRecord {
  std::int64_t timestamp_ms = 0;
  std::string session;
  std::string subject;
  std::string event;
};

// Append-only record of ingestion events. Always kept in memory; mirrored to
// a JSON-lines file when a path is given.
class AuditLog {
 public:
  using Clock = std::function<std::int64_t()>;

  AuditLog();
  explicit AuditLog(std::filesystem::path sink, Clock clock = {});

  void record(const std::string& session, const SubjectId& subject, const std::string& event);
  std::vector<AuditRecord> records() const;

 private:
  mutable std::mutex mu_;
  std::optional<std::filesystem::path> sink_;
  Clock clock_;
  std::vector<AuditRecord> records_;
};

// One face ingestion: holds the full image only until destroy_original().
class IngestionSession {
 public:
  IngestionSession(SubjectId subject, Image image, BufferRegistry& registry, AuditLog& audit);
  // Reads and decodes the file; the encoded bytes are zeroized after decoding.
  static IngestionSession from_file(const std::filesystem::path& path, SubjectId subject,
                                    BufferRegistry& registry, AuditLog& audit);

  const std::string& id() const { return id_; }
  const SubjectId& subject() const { return subject_; }

  const PatchBundle& extract(const LandmarkSet& landmarks, std::uint16_t target_size);
  // Takes the bundle out of the session (e.g. to share it).
  PatchBundle take_bundle();

  // Zeroizes and releases the full image. Idempotent; throws ordering if
  // extraction has not run.
  void destroy_original();

  bool original_destroyed() const { return destroyed_; }
  // Throws not_found once the original is destroyed.
  Image fetch_full_image() const;

 private:
  std::string id_;
  SubjectId subject_;
  std::uint32_t width_, height_;
  std::uint8_t channels_;
  SensitiveBuffer original_;
  AuditLog* audit_;
  std::optional<PatchBundle> bundle_;
  bool extracted_ = false;
  bool destroyed_ = false;
};

}  // namespace voidface::patch
