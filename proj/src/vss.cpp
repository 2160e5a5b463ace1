#include "voidface/vss.hpp"

#include <algorithm>

#include "voidface/error.hpp"
#include "voidface/kernels.hpp"

namespace voidface::vss {

namespace {

void check_dims(const Dimensions& d) {
  if (d.width == 0 || d.height == 0 || d.channels == 0)
    fail(ErrorCode::dimension, "zero dimension: " + to_string(d));
  if (d.channels != 1 && d.channels != 3)
    fail(ErrorCode::dimension, "channels must be 1 or 3, got " + std::to_string(d.channels));
}

void require_same_dims(const Dimensions& a, const Dimensions& b) {
  if (a != b) fail(ErrorCode::dimension, "dimension mismatch: " + to_string(a) + " vs " + to_string(b));
}

}  // namespace

PatchImage::PatchImage(std::uint8_t index, Dimensions d, std::vector<Byte> px)
    : patch_index(index), dims(d), pixels(std::move(px)) {
  validate();
}

PatchKind PatchImage::kind() const {
  if (patch_index >= kPatchKindCount)
    fail(ErrorCode::invalid_argument, "patch index " + std::to_string(patch_index) +
                                          " has no named kind");
  return static_cast<PatchKind>(patch_index);
}

void PatchImage::validate() const {
  check_dims(dims);
  if (pixels.size() != dims.byte_count())
    fail(ErrorCode::dimension, "patch pixel buffer has " + std::to_string(pixels.size()) +
                                   " bytes, expected " + std::to_string(dims.byte_count()));
}

void ShareGrid::validate() const {
  check_dims(dims);
  if (bytes.size() != dims.byte_count())
    fail(ErrorCode::dimension, "share buffer has " + std::to_string(bytes.size()) +
                                   " bytes, expected " + std::to_string(dims.byte_count()));
  if (role == ShareRole::authentication && patch_index != kAuthPatchIndex)
    fail(ErrorCode::format, "authentication share must carry the AS patch sentinel");
  if (role != ShareRole::authentication && patch_index == kAuthPatchIndex)
    fail(ErrorCode::format, "private share carries the AS sentinel");
  if (role == ShareRole::subgrid) {
    if (subgrid_total < 2 || subgrid_index >= subgrid_total)
      fail(ErrorCode::format, "sub-grid index " + std::to_string(subgrid_index) + " of " +
                                  std::to_string(subgrid_total) + " is invalid");
  } else if (subgrid_total != 1 || subgrid_index != 0) {
    fail(ErrorCode::format, "unexpanded share must have subgrid 0 of 1");
  }
}

ShareGrid generate_random_grid(Dimensions dims, RandomSource& rng) {
  check_dims(dims);
  ShareGrid g;
  g.role = ShareRole::authentication;
  g.patch_index = kAuthPatchIndex;
  g.dims = dims;
  g.bytes.resize(dims.byte_count());
  rng.fill(g.bytes);
  return g;
}

FirstPatchShares bootstrap_first_patch(const PatchImage& first, const SubjectId& subject,
                                       RandomSource& rng) {
  first.validate();
  ShareGrid auth = generate_random_grid(first.dims, rng);
  auth.subject = subject;
  ShareGrid ps = generate_private_share(first, auth);
  return {std::move(auth), std::move(ps)};
}

ShareGrid generate_private_share(const PatchImage& patch, const ShareGrid& auth) {
  patch.validate();
  auth.validate();
  require_same_dims(patch.dims, auth.dims);
  if (patch.patch_index == kAuthPatchIndex)
    fail(ErrorCode::invalid_argument, "patch index 255 is reserved for the AS");
  ShareGrid ps;
  ps.role = ShareRole::private_share;
  ps.subject = auth.subject;
  ps.patch_index = patch.patch_index;
  ps.dims = patch.dims;
  ps.bytes.resize(patch.pixels.size());
  kernels::xor_bytes(patch.pixels, auth.bytes, ps.bytes);
  return ps;
}

std::vector<ShareGrid> expand_share(const ShareGrid& share, std::size_t k, RandomSource& rng) {
  share.validate();
  if (k < 2) fail(ErrorCode::invalid_argument, "expansion needs k >= 2, got " + std::to_string(k));
  if (k > 255) fail(ErrorCode::invalid_argument, "expansion limited to 255 sub-grids");
  if (share.role != ShareRole::private_share)
    fail(ErrorCode::invalid_argument, "only unexpanded private shares can be expanded");

  std::vector<ShareGrid> out(k);
  std::vector<Byte> residual = share.bytes;
  for (std::size_t i = 0; i < k; ++i) {
    ShareGrid& g = out[i];
    g.role = ShareRole::subgrid;
    g.subject = share.subject;
    g.patch_index = share.patch_index;
    g.subgrid_index = static_cast<std::uint8_t>(i);
    g.subgrid_total = static_cast<std::uint8_t>(k);
    g.dims = share.dims;
    if (i + 1 < k) {
      g.bytes.resize(share.bytes.size());
      rng.fill(g.bytes);
      kernels::xor_into(residual, g.bytes);
    } else {
      g.bytes = std::move(residual);
    }
  }
  return out;
}

PatchImage reconstruct_patch(const ShareGrid& auth, const ShareGrid& share) {
  if (share.role == ShareRole::subgrid) return reconstruct_patch(auth, std::span(&share, 1));
  auth.validate();
  share.validate();
  require_same_dims(auth.dims, share.dims);
  PatchImage p;
  p.patch_index = share.patch_index;
  p.dims = share.dims;
  p.pixels.resize(share.bytes.size());
  kernels::xor_bytes(auth.bytes, share.bytes, p.pixels);
  return p;
}

PatchImage reconstruct_patch(const ShareGrid& auth, std::span<const ShareGrid> subgrids) {
  if (subgrids.empty()) fail(ErrorCode::incomplete_share, "no private share supplied");
  if (subgrids.size() == 1 && subgrids[0].role != ShareRole::subgrid)
    return reconstruct_patch(auth, subgrids[0]);
  auth.validate();

  const ShareGrid& head = subgrids.front();
  std::vector<bool> seen(head.subgrid_total, false);
  for (const ShareGrid& g : subgrids) {
    g.validate();
    require_same_dims(auth.dims, g.dims);
    if (g.role != ShareRole::subgrid)
      fail(ErrorCode::incomplete_share, "mixed expanded and unexpanded shares");
    if (g.patch_index != head.patch_index)
      fail(ErrorCode::invalid_argument, "sub-grids disagree on patch index (" +
                                            std::to_string(head.patch_index) + " vs " +
                                            std::to_string(g.patch_index) + ")");
    if (g.subgrid_total != head.subgrid_total)
      fail(ErrorCode::incomplete_share, "sub-grids disagree on total count");
    if (seen[g.subgrid_index])
      fail(ErrorCode::incomplete_share, "duplicate sub-grid " + std::to_string(g.subgrid_index));
    seen[g.subgrid_index] = true;
  }
  if (subgrids.size() != head.subgrid_total)
    fail(ErrorCode::incomplete_share, "have " + std::to_string(subgrids.size()) + " of " +
                                          std::to_string(head.subgrid_total) + " sub-grids");

  PatchImage p;
  p.patch_index = head.patch_index;
  p.dims = head.dims;
  p.pixels = auth.bytes;
  for (const ShareGrid& g : subgrids) kernels::xor_into(p.pixels, g.bytes);
  return p;
}

SubjectShares share_patches(std::span<const PatchImage> patches, const SubjectId& subject,
                            RandomSource& rng) {
  if (patches.empty()) fail(ErrorCode::invalid_argument, "no patches to share");
  for (const auto& p : patches) require_same_dims(patches.front().dims, p.dims);
  auto [auth, first] = bootstrap_first_patch(patches.front(), subject, rng);
  SubjectShares out;
  out.privates.reserve(patches.size());
  out.privates.push_back(std::move(first));
  for (std::size_t i = 1; i < patches.size(); ++i)
    out.privates.push_back(generate_private_share(patches[i], auth));
  out.auth = std::move(auth);
  return out;
}

}  // namespace voidface::vss
