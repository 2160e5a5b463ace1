#include "voidface/patch_pipeline.hpp"

#include <atomic>
#include <cmath>
#include <fstream>

#include "voidface/error.hpp"

namespace voidface::patch {

namespace {

std::int64_t wall_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::atomic<std::uint64_t> g_session_counter{0};

}  // namespace

void LandmarkSet::validate(std::uint32_t image_width, std::uint32_t image_height) const {
  for (PatchKind kind : kAllPatchKinds) {
    const auto& b = boxes[static_cast<std::size_t>(kind)];
    if (!b)
      fail(ErrorCode::incomplete_landmarks, "landmark missing: " + std::string(to_string(kind)));
    if (b->width <= 0 || b->height <= 0 || b->x < 0 || b->y < 0 ||
        b->x + b->width > image_width || b->y + b->height > image_height)
      fail(ErrorCode::landmark_bounds,
           std::string(to_string(kind)) + " box (" + std::to_string(b->x) + "," +
               std::to_string(b->y) + "," + std::to_string(b->width) + "," +
               std::to_string(b->height) + ") outside " + std::to_string(image_width) + "x" +
               std::to_string(image_height));
  }
}

LandmarkSet LandmarkSet::from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::format, "landmark file must be a JSON object");
  LandmarkSet set;
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto kind = parse_patch_kind(it.key());
    if (!kind) fail(ErrorCode::format, "unknown landmark kind: " + it.key());
    const auto& v = it.value();
    try {
      set.set(*kind, Box{v.at("x").get<std::int64_t>(), v.at("y").get<std::int64_t>(),
                         v.at("w").get<std::int64_t>(), v.at("h").get<std::int64_t>()});
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::format, "landmark " + it.key() + ": " + e.what());
    }
  }
  return set;
}

LandmarkSet LandmarkSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::not_found, "cannot open landmark file " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::format, std::string("landmark JSON: ") + e.what());
  }
}

nlohmann::json LandmarkSet::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (PatchKind kind : kAllPatchKinds)
    if (const auto& b = boxes[static_cast<std::size_t>(kind)])
      j[std::string(to_string(kind))] = {{"x", b->x}, {"y", b->y}, {"w", b->width}, {"h", b->height}};
  return j;
}

vss::PatchImage resample_box(const Image& img, const Box& box, std::uint16_t target,
                             std::uint8_t patch_index) {
  if (target == 0) fail(ErrorCode::dimension, "target size must be positive");
  const std::uint8_t ch = img.channels;
  vss::PatchImage out;
  out.patch_index = patch_index;
  out.dims = {target, target, ch};
  out.pixels.resize(out.dims.byte_count());

  const double sx = static_cast<double>(box.width) / target;
  const double sy = static_cast<double>(box.height) / target;
  auto src_coord = [](std::size_t dst, double scale, std::int64_t extent) {
    double s = (static_cast<double>(dst) + 0.5) * scale - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(extent - 1));
  };

  for (std::size_t oy = 0; oy < target; ++oy) {
    const double fy_src = src_coord(oy, sy, box.height);
    const auto y0 = static_cast<std::int64_t>(std::floor(fy_src));
    const auto y1 = std::min<std::int64_t>(y0 + 1, box.height - 1);
    const double wy = fy_src - static_cast<double>(y0);
    for (std::size_t ox = 0; ox < target; ++ox) {
      const double fx_src = src_coord(ox, sx, box.width);
      const auto x0 = static_cast<std::int64_t>(std::floor(fx_src));
      const auto x1 = std::min<std::int64_t>(x0 + 1, box.width - 1);
      const double wx = fx_src - static_cast<double>(x0);
      for (std::uint8_t c = 0; c < ch; ++c) {
        auto px = [&](std::int64_t x, std::int64_t y) {
          return static_cast<double>(img.at(static_cast<std::uint32_t>(box.x + x),
                                            static_cast<std::uint32_t>(box.y + y), c));
        };
        const double top = px(x0, y0) * (1.0 - wx) + px(x1, y0) * wx;
        const double bottom = px(x0, y1) * (1.0 - wx) + px(x1, y1) * wx;
        const double v = top * (1.0 - wy) + bottom * wy;
        out.pixels[(oy * target + ox) * ch + c] =
            static_cast<Byte>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

PatchBundle extract_patches(const Image& img, const LandmarkSet& landmarks,
                            std::uint16_t target_size, const SubjectId& subject) {
  if (target_size == 0) fail(ErrorCode::dimension, "target size must be positive");
  if (img.pixels.size() != std::size_t{img.width} * img.height * img.channels)
    fail(ErrorCode::dimension, "image buffer does not match its dimensions");
  landmarks.validate(img.width, img.height);
  PatchBundle bundle;
  bundle.subject = subject;
  for (PatchKind kind : kAllPatchKinds)
    bundle.patches.push_back(resample_box(img, *landmarks.boxes[static_cast<std::size_t>(kind)],
                                          target_size, static_cast<std::uint8_t>(kind)));
  return bundle;
}

AuditLog::AuditLog() : clock_(wall_clock_ms) {}

AuditLog::AuditLog(std::filesystem::path sink, Clock clock)
    : sink_(std::move(sink)), clock_(clock ? std::move(clock) : Clock(wall_clock_ms)) {}

void AuditLog::record(const std::string& session, const SubjectId& subject,
                      const std::string& event) {
  std::lock_guard lock(mu_);
  AuditRecord r{clock_(), session, subject.str(), event};
  if (sink_) {
    std::ofstream out(*sink_, std::ios::app);
    if (!out) fail(ErrorCode::io, "cannot append audit log " + sink_->string());
    out << nlohmann::json{{"ts_ms", r.timestamp_ms},
                          {"session", r.session},
                          {"subject", r.subject},
                          {"event", r.event}}
               .dump()
        << "\n";
  }
  records_.push_back(std::move(r));
}

std::vector<AuditRecord> AuditLog::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

IngestionSession::IngestionSession(SubjectId subject, Image image, BufferRegistry& registry,
                                   AuditLog& audit)
    : id_("ingest-" + std::to_string(++g_session_counter)),
      subject_(subject),
      width_(image.width),
      height_(image.height),
      channels_(image.channels),
      original_(&registry, "full-face:" + subject.str(), std::move(image.pixels)),
      audit_(&audit) {
  audit_->record(id_, subject_, "INGEST");
}

IngestionSession IngestionSession::from_file(const std::filesystem::path& path, SubjectId subject,
                                             BufferRegistry& registry, AuditLog& audit) {
  auto encoded = read_file_bytes(path);
  Image img;
  try {
    img = decode_image(encoded);
  } catch (...) {
    secure_zero(encoded);
    throw;
  }
  secure_zero(encoded);
  return IngestionSession(subject, std::move(img), registry, audit);
}

const PatchBundle& IngestionSession::extract(const LandmarkSet& landmarks,
                                             std::uint16_t target_size) {
  if (destroyed_) fail(ErrorCode::ordering, "original image already destroyed");
  Image view;
  view.width = width_;
  view.height = height_;
  view.channels = channels_;
  // Borrow the protected bytes for the duration of the resample.
  view.pixels.assign(original_.view().begin(), original_.view().end());
  try {
    bundle_ = extract_patches(view, landmarks, target_size, subject_);
  } catch (...) {
    secure_zero(view.pixels);
    throw;
  }
  secure_zero(view.pixels);
  extracted_ = true;
  audit_->record(id_, subject_, "EXTRACT");
  return *bundle_;
}

PatchBundle IngestionSession::take_bundle() {
  if (!bundle_) fail(ErrorCode::ordering, "no extracted bundle in session");
  PatchBundle b = std::move(*bundle_);
  bundle_.reset();
  return b;
}

void IngestionSession::destroy_original() {
  if (!extracted_) fail(ErrorCode::ordering, "destroy_original called before extraction");
  if (destroyed_) return;
  original_.wipe();
  destroyed_ = true;
  audit_->record(id_, subject_, "DESTROY_ORIGINAL");
}

Image IngestionSession::fetch_full_image() const {
  if (destroyed_) fail(ErrorCode::not_found, "full image for session " + id_ + " was destroyed");
  Image img;
  img.width = width_;
  img.height = height_;
  img.channels = channels_;
  img.pixels.assign(original_.view().begin(), original_.view().end());
  return img;
}

}  // namespace voidface::patch
