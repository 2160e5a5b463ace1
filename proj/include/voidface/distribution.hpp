#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "voidface/random.hpp"
#include "voidface/vss.hpp"

namespace voidface::dist {

using InstitutionId = std::uint32_t;

enum class PlacementCase { exact, case1_subset, case2_expanded };

std::string_view to_string(PlacementCase c);

struct Assignment {
  InstitutionId institution = 0;
  vss::ShareGrid grid;
};

// Grid metadata without payload; what the vault keeps about a placement.
struct PlacementEntry {
  InstitutionId institution = 0;
  std::uint8_t patch_index = 0;
  std::uint8_t subgrid_index = 0;
  std::uint8_t subgrid_total = 1;

  bool operator==(const PlacementEntry&) const = default;
};

struct PlacementPlan {
  SubjectId subject;
  std::size_t share_count = 0;         // N_ps
  std::size_t institution_count = 0;   // N
  PlacementCase placement_case = PlacementCase::exact;
  std::size_t deficit = 0;             // j = N - N_ps when positive
  std::vector<Assignment> assignments; // exactly N, institution i at index i
  std::vector<std::uint8_t> dropped_patches;  // case 1 only

  std::vector<PlacementEntry> entries() const;
  nlohmann::json to_json() const;  // metadata only, never share bytes
};

// Places one subject's private shares on N institutions, one grid each.
PlacementPlan plan_distribution(std::span<const vss::ShareGrid> shares,
                                std::size_t n_institutions, RandomSource& rng);

// Institutions holding the grids needed to reassemble PS_patch. Empty when
// the share was dropped (case 1).
std::vector<InstitutionId> locate_shares(const PlacementPlan& plan, std::uint8_t patch_index);
std::vector<InstitutionId> locate_shares(std::span<const PlacementEntry> entries,
                                         std::size_t share_count, std::uint8_t patch_index);

// Sub-grid counts per share: the most even composition of N into N_ps parts,
// with the larger parts on `larger_first` (positions into the share list).
std::vector<std::size_t> even_split(std::size_t n_shares, std::size_t n_institutions,
                                    std::span<const std::size_t> larger_first);

nlohmann::json entries_to_json(std::span<const PlacementEntry> entries);
std::vector<PlacementEntry> entries_from_json(const nlohmann::json& j);

}  // namespace voidface::dist
