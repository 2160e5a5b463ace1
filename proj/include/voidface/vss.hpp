#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "voidface/random.hpp"
#include "voidface/types.hpp"

namespace voidface::vss {

inline constexpr std::uint8_t kAuthPatchIndex = 0xFF;

// One facial region, the secret being shared.
struct PatchImage {
  std::uint8_t patch_index = 0;
  Dimensions dims;
  std::vector<Byte> pixels;

  PatchImage() = default;
  PatchImage(std::uint8_t index, Dimensions d, std::vector<Byte> px);
  PatchImage(PatchKind kind, Dimensions d, std::vector<Byte> px)
      : PatchImage(static_cast<std::uint8_t>(kind), d, std::move(px)) {}

  PatchKind kind() const;  // throws for indices outside the six named kinds
  void validate() const;
};

enum class ShareRole : std::uint8_t {
  authentication = 0,
  private_share = 1,
  subgrid = 2,
};

// Noise-like grid. Carries its own placement metadata so it can travel
// between nodes without relying on storage position.
struct ShareGrid {
  ShareRole role = ShareRole::authentication;
  SubjectId subject;
  std::uint8_t patch_index = kAuthPatchIndex;
  std::uint8_t subgrid_index = 0;
  std::uint8_t subgrid_total = 1;
  Dimensions dims;
  std::vector<Byte> bytes;

  void validate() const;
  bool operator==(const ShareGrid&) const = default;
};

struct FirstPatchShares {
  ShareGrid auth;
  ShareGrid first_private;
};

struct SubjectShares {
  ShareGrid auth;
  std::vector<ShareGrid> privates;  // one per patch, in patch order
};

ShareGrid generate_random_grid(Dimensions dims, RandomSource& rng);

// P_1 -> (AS, PS_1) with AS uniform and PS_1 = P_1 xor AS.
FirstPatchShares bootstrap_first_patch(const PatchImage& first,
                                       const SubjectId& subject,
                                       RandomSource& rng);

// PS_i = P_i xor AS.
ShareGrid generate_private_share(const PatchImage& patch, const ShareGrid& auth);

// Splits a private share into k XOR-additive sub-grids: k-1 uniform grids
// plus one residual.
std::vector<ShareGrid> expand_share(const ShareGrid& share, std::size_t k,
                                    RandomSource& rng);

PatchImage reconstruct_patch(const ShareGrid& auth, const ShareGrid& share);
PatchImage reconstruct_patch(const ShareGrid& auth,
                             std::span<const ShareGrid> subgrids);

// Shares every patch of one subject: the first patch bootstraps the AS.
SubjectShares share_patches(std::span<const PatchImage> patches,
                            const SubjectId& subject, RandomSource& rng);

}  // namespace voidface::vss
