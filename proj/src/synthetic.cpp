#include "voidface/synthetic.hpp"

namespace voidface::synthetic {

Image face(std::uint32_t seed) {
  Image img;
  img.width = 160;
  img.height = 160;
  img.channels = 3;
  img.pixels.resize(160 * 160 * 3);
  for (std::uint32_t y = 0; y < 160; ++y)
    for (std::uint32_t x = 0; x < 160; ++x) {
      auto* p = &img.pixels[(y * 160 + x) * 3];
      p[0] = static_cast<Byte>((x + seed * 13) % 256);
      p[1] = static_cast<Byte>((y * 2 + seed) % 256);
      p[2] = static_cast<Byte>((x * y / 64 + seed * 7) % 256);
    }
  return img;
}

patch::LandmarkSet landmarks() {
  patch::LandmarkSet l;
  l.set(PatchKind::left_eyebrow, {20, 20, 40, 16});
  l.set(PatchKind::right_eyebrow, {100, 20, 40, 16});
  l.set(PatchKind::left_eye, {22, 40, 36, 24});
  l.set(PatchKind::right_eye, {102, 40, 36, 24});
  l.set(PatchKind::nose, {60, 60, 40, 44});
  l.set(PatchKind::mouth, {45, 110, 70, 30});
  return l;
}

}  // namespace voidface::synthetic
