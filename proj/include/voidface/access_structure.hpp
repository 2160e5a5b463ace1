#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace voidface::access {

// Subset of the share universe, bit k set <=> label k present.
using ShareSet = std::uint32_t;

inline constexpr std::size_t kMaxUniverse = 16;

// Multi-secret access structure over a small labelled share universe.
//
// Each secret carries the generators of its qualified family; the family
// itself is their up-closure. The forbidden family is either the complement
// of the qualified family (perfect structure, never materialized) or an
// explicitly listed family, which is how invalid structures are expressed
// for validation.
class AccessStructure {
 public:
  struct Secret {
    std::vector<ShareSet> qualified_generators;
    std::optional<std::vector<ShareSet>> explicit_forbidden;
  };

  AccessStructure(std::vector<std::string> labels, std::vector<Secret> secrets);

  std::size_t universe_size() const { return labels_.size(); }
  std::size_t secret_count() const { return secrets_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const Secret& secret(std::size_t i) const;

  ShareSet full_set() const { return (ShareSet{1} << labels_.size()) - 1; }
  ShareSet label_bit(std::string_view label) const;
  ShareSet make_set(std::initializer_list<std::string_view> labels) const;
  std::string render(ShareSet set) const;

  bool in_qualified(std::size_t secret, ShareSet set) const;
  bool in_forbidden(std::size_t secret, ShareSet set) const;

  // Inclusion-minimal members of each family (enumerated).
  std::vector<ShareSet> minimal_qualified(std::size_t secret) const;
  std::vector<ShareSet> minimal_forbidden(std::size_t secret) const;

  // Universe, then one line per secret with its minimal qualified sets.
  std::string dump() const;

 private:
  void require_enumerable() const;

  std::vector<std::string> labels_;
  std::vector<Secret> secrets_;
};

// Every superset of a qualified set is qualified and every subset of a
// forbidden set is forbidden, for every secret.
bool check_monotonicity(const AccessStructure& s);

// For i != j, minimal qualified sets of i and minimal forbidden sets of j do
// not intersect.
bool check_uniqueness(const AccessStructure& s);

// Qualified and forbidden families are disjoint for every secret.
bool check_disjoint(const AccessStructure& s);

// Every subset is classified exactly once.
bool check_perfect(const AccessStructure& s);

// Universe {AS, PS_1..PS_n}; secret i has the single minimal qualified set
// {AS, PS_(i+1)} and its forbidden family is everything else.
AccessStructure build_voidface_structure(std::size_t n_patches);

// Zero-based secret index. True iff `shares` contains some minimal qualified
// set of that secret.
bool is_qualified(const AccessStructure& s, std::size_t secret, ShareSet shares);

// Label helpers for the standard structure.
inline constexpr ShareSet kAuthBit = 1;
inline constexpr ShareSet private_bit(std::size_t patch_index) {
  return ShareSet{1} << (patch_index + 1);
}

}  // namespace voidface::access
