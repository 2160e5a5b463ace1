#include "voidface/access_structure.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

#include "voidface/error.hpp"

namespace voidface::access {

namespace {

bool is_subset(ShareSet a, ShareSet b) { return (a & ~b) == 0; }

// Keeps only inclusion-minimal members.
std::vector<ShareSet> antichain(std::vector<ShareSet> sets) {
  std::sort(sets.begin(), sets.end(), [](ShareSet a, ShareSet b) {
    return std::popcount(a) != std::popcount(b) ? std::popcount(a) < std::popcount(b) : a < b;
  });
  sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
  std::vector<ShareSet> out;
  for (ShareSet s : sets)
    if (std::none_of(out.begin(), out.end(), [s](ShareSet m) { return is_subset(m, s); }))
      out.push_back(s);
  return out;
}

}  // namespace

AccessStructure::AccessStructure(std::vector<std::string> labels, std::vector<Secret> secrets)
    : labels_(std::move(labels)), secrets_(std::move(secrets)) {
  if (labels_.size() > 31) fail(ErrorCode::capacity, "share universe larger than 31 labels");
  const ShareSet full = full_set();
  for (auto& sec : secrets_) {
    for (ShareSet q : sec.qualified_generators)
      if (!is_subset(q, full)) fail(ErrorCode::invalid_argument, "qualified set outside universe");
    if (sec.explicit_forbidden)
      for (ShareSet f : *sec.explicit_forbidden)
        if (!is_subset(f, full)) fail(ErrorCode::invalid_argument, "forbidden set outside universe");
  }
}

const AccessStructure::Secret& AccessStructure::secret(std::size_t i) const {
  if (i >= secrets_.size())
    fail(ErrorCode::invalid_argument, "unknown secret index " + std::to_string(i));
  return secrets_[i];
}

ShareSet AccessStructure::label_bit(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return ShareSet{1} << i;
  fail(ErrorCode::invalid_argument, "unknown share label " + std::string(label));
}

ShareSet AccessStructure::make_set(std::initializer_list<std::string_view> labels) const {
  ShareSet s = 0;
  for (auto l : labels) s |= label_bit(l);
  return s;
}

std::string AccessStructure::render(ShareSet set) const {
  std::string out = "{";
  bool first = true;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!(set & (ShareSet{1} << i))) continue;
    if (!first) out += ", ";
    out += labels_[i];
    first = false;
  }
  return out + "}";
}

bool AccessStructure::in_qualified(std::size_t i, ShareSet set) const {
  const auto& gens = secret(i).qualified_generators;
  return std::any_of(gens.begin(), gens.end(), [set](ShareSet q) { return is_subset(q, set); });
}

bool AccessStructure::in_forbidden(std::size_t i, ShareSet set) const {
  const auto& sec = secret(i);
  if (!sec.explicit_forbidden) return !in_qualified(i, set);
  const auto& f = *sec.explicit_forbidden;
  return std::find(f.begin(), f.end(), set) != f.end();
}

void AccessStructure::require_enumerable() const {
  if (labels_.size() > kMaxUniverse)
    fail(ErrorCode::capacity, "share universe of " + std::to_string(labels_.size()) +
                                  " exceeds the enumeration limit of " +
                                  std::to_string(kMaxUniverse));
}

std::vector<ShareSet> AccessStructure::minimal_qualified(std::size_t i) const {
  return antichain(secret(i).qualified_generators);
}

std::vector<ShareSet> AccessStructure::minimal_forbidden(std::size_t i) const {
  require_enumerable();
  const ShareSet full = full_set();
  std::vector<ShareSet> members;
  for (ShareSet s = 0;; ++s) {
    if (in_forbidden(i, s)) members.push_back(s);
    if (s == full) break;
  }
  return antichain(std::move(members));
}

std::string AccessStructure::dump() const {
  std::ostringstream os;
  os << "universe: " << render(full_set()) << "\n";
  for (std::size_t i = 0; i < secrets_.size(); ++i) {
    os << "secret " << (i + 1) << ": minimal qualified";
    for (ShareSet q : minimal_qualified(i)) os << " " << render(q);
    os << (secrets_[i].explicit_forbidden ? "; forbidden: explicit" : "; forbidden: complement")
       << "\n";
  }
  return os.str();
}

bool check_monotonicity(const AccessStructure& s) {
  if (s.universe_size() > kMaxUniverse)
    fail(ErrorCode::capacity, "share universe exceeds the enumeration limit");
  const std::size_t n = s.universe_size();
  const ShareSet full = s.full_set();
  for (std::size_t i = 0; i < s.secret_count(); ++i) {
    for (ShareSet a = 0;; ++a) {
      // One-element steps suffice: a chain of them connects any A subset of B.
      for (std::size_t b = 0; b < n; ++b) {
        const ShareSet bit = ShareSet{1} << b;
        if (a & bit) continue;
        const ShareSet bigger = a | bit;
        if (s.in_qualified(i, a) && !s.in_qualified(i, bigger)) return false;
        if (s.in_forbidden(i, bigger) && !s.in_forbidden(i, a)) return false;
      }
      if (a == full) break;
    }
  }
  return true;
}

bool check_uniqueness(const AccessStructure& s) {
  if (s.universe_size() > kMaxUniverse)
    fail(ErrorCode::capacity, "share universe exceeds the enumeration limit");
  const std::size_t m = s.secret_count();
  std::vector<std::vector<ShareSet>> min_q(m), min_f(m);
  for (std::size_t i = 0; i < m; ++i) {
    min_q[i] = s.minimal_qualified(i);
    min_f[i] = s.minimal_forbidden(i);
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      for (ShareSet q : min_q[i])
        if (std::find(min_f[j].begin(), min_f[j].end(), q) != min_f[j].end()) return false;
    }
  return true;
}

bool check_disjoint(const AccessStructure& s) {
  if (s.universe_size() > kMaxUniverse)
    fail(ErrorCode::capacity, "share universe exceeds the enumeration limit");
  const ShareSet full = s.full_set();
  for (std::size_t i = 0; i < s.secret_count(); ++i)
    for (ShareSet a = 0;; ++a) {
      if (s.in_qualified(i, a) && s.in_forbidden(i, a)) return false;
      if (a == full) break;
    }
  return true;
}

bool check_perfect(const AccessStructure& s) {
  if (s.universe_size() > kMaxUniverse)
    fail(ErrorCode::capacity, "share universe exceeds the enumeration limit");
  const ShareSet full = s.full_set();
  for (std::size_t i = 0; i < s.secret_count(); ++i)
    for (ShareSet a = 0;; ++a) {
      if (s.in_qualified(i, a) == s.in_forbidden(i, a)) return false;
      if (a == full) break;
    }
  return true;
}

AccessStructure build_voidface_structure(std::size_t n_patches) {
  if (n_patches == 0) fail(ErrorCode::invalid_argument, "structure needs at least one patch");
  if (n_patches + 1 > kMaxUniverse)
    fail(ErrorCode::capacity, std::to_string(n_patches) + " patches exceed the universe limit");
  std::vector<std::string> labels{"AS"};
  std::vector<AccessStructure::Secret> secrets;
  for (std::size_t i = 0; i < n_patches; ++i) {
    labels.push_back("PS_" + std::to_string(i + 1));
    secrets.push_back({{kAuthBit | private_bit(i)}, std::nullopt});
  }
  return AccessStructure(std::move(labels), std::move(secrets));
}

bool is_qualified(const AccessStructure& s, std::size_t secret, ShareSet shares) {
  if ((shares & ~s.full_set()) != 0)
    fail(ErrorCode::invalid_argument, "share set outside universe");
  return s.in_qualified(secret, shares);
}

}  // namespace voidface::access
