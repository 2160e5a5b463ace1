#include "voidface/distribution.hpp"

#include <algorithm>
#include <numeric>

#include "voidface/error.hpp"

namespace voidface::dist {

std::string_view to_string(PlacementCase c) {
  switch (c) {
    case PlacementCase::exact: return "exact";
    case PlacementCase::case1_subset: return "case1_subset";
    case PlacementCase::case2_expanded: return "case2_expanded";
  }
  return "unknown";
}

std::vector<std::size_t> even_split(std::size_t n_shares, std::size_t n_institutions,
                                    std::span<const std::size_t> larger_first) {
  if (n_shares == 0 || n_institutions < n_shares)
    fail(ErrorCode::invalid_argument, "even_split needs 0 < N_ps <= N");
  const std::size_t base = n_institutions / n_shares;
  std::size_t extra = n_institutions % n_shares;
  std::vector<std::size_t> counts(n_shares, base);
  for (std::size_t pos : larger_first) {
    if (extra == 0) break;
    counts.at(pos) += 1;
    --extra;
  }
  if (extra != 0) fail(ErrorCode::invalid_argument, "not enough positions for the remainder");
  return counts;
}

PlacementPlan plan_distribution(std::span<const vss::ShareGrid> shares,
                                std::size_t n_institutions, RandomSource& rng) {
  if (shares.empty()) fail(ErrorCode::invalid_argument, "no private shares to distribute");
  if (n_institutions == 0) fail(ErrorCode::invalid_argument, "need at least one institution");
  for (const auto& s : shares) {
    s.validate();
    if (s.role != vss::ShareRole::private_share)
      fail(ErrorCode::invalid_argument, "only unexpanded private shares can be distributed");
    if (s.subject != shares.front().subject)
      fail(ErrorCode::invalid_argument, "shares belong to different subjects");
  }

  PlacementPlan plan;
  plan.subject = shares.front().subject;
  plan.share_count = shares.size();
  plan.institution_count = n_institutions;
  const std::size_t n_ps = shares.size();

  std::vector<std::size_t> order(n_ps);
  std::iota(order.begin(), order.end(), 0);

  if (n_ps == n_institutions) {
    plan.placement_case = PlacementCase::exact;
    for (std::size_t i = 0; i < n_ps; ++i)
      plan.assignments.push_back({static_cast<InstitutionId>(i), shares[i]});
  } else if (n_ps > n_institutions) {
    plan.placement_case = PlacementCase::case1_subset;
    rng.shuffle(order);
    std::vector<std::size_t> kept(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_institutions));
    std::sort(kept.begin(), kept.end());
    for (std::size_t i = 0; i < kept.size(); ++i)
      plan.assignments.push_back({static_cast<InstitutionId>(i), shares[kept[i]]});
    for (std::size_t i = n_institutions; i < n_ps; ++i)
      plan.dropped_patches.push_back(shares[order[i]].patch_index);
    std::sort(plan.dropped_patches.begin(), plan.dropped_patches.end());
  } else {
    plan.placement_case = PlacementCase::case2_expanded;
    plan.deficit = n_institutions - n_ps;
    rng.shuffle(order);  // randomly selected shares take the larger counts
    const auto counts = even_split(n_ps, n_institutions, order);
    InstitutionId next = 0;
    for (std::size_t i = 0; i < n_ps; ++i) {
      if (counts[i] == 1) {
        plan.assignments.push_back({next++, shares[i]});
        continue;
      }
      for (auto& sub : vss::expand_share(shares[i], counts[i], rng))
        plan.assignments.push_back({next++, std::move(sub)});
    }
  }
  return plan;
}

std::vector<PlacementEntry> PlacementPlan::entries() const {
  std::vector<PlacementEntry> out;
  out.reserve(assignments.size());
  for (const auto& a : assignments)
    out.push_back({a.institution, a.grid.patch_index, a.grid.subgrid_index, a.grid.subgrid_total});
  return out;
}

std::vector<InstitutionId> locate_shares(std::span<const PlacementEntry> entries,
                                         std::size_t share_count, std::uint8_t patch_index) {
  if (patch_index >= share_count)
    fail(ErrorCode::invalid_argument, "unknown patch index " + std::to_string(patch_index));
  std::vector<InstitutionId> out;
  for (const auto& e : entries)
    if (e.patch_index == patch_index) out.push_back(e.institution);
  return out;
}

std::vector<InstitutionId> locate_shares(const PlacementPlan& plan, std::uint8_t patch_index) {
  auto e = plan.entries();
  return locate_shares(e, plan.share_count, patch_index);
}

nlohmann::json entries_to_json(std::span<const PlacementEntry> entries) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : entries)
    arr.push_back({{"institution", e.institution},
                   {"patch_index", e.patch_index},
                   {"subgrid_index", e.subgrid_index},
                   {"subgrid_total", e.subgrid_total}});
  return arr;
}

std::vector<PlacementEntry> entries_from_json(const nlohmann::json& j) {
  std::vector<PlacementEntry> out;
  for (const auto& e : j)
    out.push_back({e.at("institution").get<InstitutionId>(), e.at("patch_index").get<std::uint8_t>(),
                   e.at("subgrid_index").get<std::uint8_t>(),
                   e.at("subgrid_total").get<std::uint8_t>()});
  return out;
}

nlohmann::json PlacementPlan::to_json() const {
  auto e = entries();
  return {{"subject_id", subject.str()},
          {"case", std::string(to_string(placement_case))},
          {"j", deficit},
          {"n_ps", share_count},
          {"n_institutions", institution_count},
          {"dropped_patches", dropped_patches},
          {"assignments", entries_to_json(e)}};
}

}  // namespace voidface::dist
