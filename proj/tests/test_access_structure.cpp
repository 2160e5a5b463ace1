#include <gtest/gtest.h>

#include "test_support.hpp"
#include "voidface/access_structure.hpp"
#include "voidface/error.hpp"

using namespace voidface;
using namespace voidface::access;

namespace {

// Independent definition of the scheme's semantics: patch i is recoverable
// exactly when both the AS (bit 0) and PS_i (bit i+1) are held.
bool oracle_qualified(std::size_t i, ShareSet t) {
  return (t & 1u) && (t & (1u << (i + 1)));
}

// Brute-force monotonicity over every ordered pair A subset-of B.
bool oracle_monotone(const AccessStructure& s) {
  const ShareSet full = s.full_set();
  for (std::size_t i = 0; i < s.secret_count(); ++i)
    for (ShareSet b = 0; b <= full; ++b)
      for (ShareSet a = b;; a = (a - 1) & b) {  // every submask of b
        if (s.in_qualified(i, a) && !s.in_qualified(i, b)) return false;
        if (s.in_forbidden(i, b) && !s.in_forbidden(i, a)) return false;
        if (a == 0) break;
      }
  return true;
}

}  // namespace

TEST(AccessStructure, VoidfaceSixPatchesMatchesOracle) {
  auto s = build_voidface_structure(6);
  ASSERT_EQ(s.universe_size(), 7u);
  ASSERT_EQ(s.secret_count(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    auto minimal = s.minimal_qualified(i);
    ASSERT_EQ(minimal.size(), 1u);
    EXPECT_EQ(minimal[0], s.make_set({"AS", "PS_" + std::to_string(i + 1)}));
    for (ShareSet t = 0; t < 128; ++t) {
      EXPECT_EQ(s.in_qualified(i, t), oracle_qualified(i, t));
      EXPECT_NE(s.in_qualified(i, t), s.in_forbidden(i, t));
    }
  }
  EXPECT_TRUE(oracle_monotone(s));
  EXPECT_TRUE(check_monotonicity(s));
  EXPECT_TRUE(check_uniqueness(s));
  EXPECT_TRUE(check_disjoint(s));
  EXPECT_TRUE(check_perfect(s));
}

TEST(AccessStructure, MinimalForbiddenOfPerfectStructureIsEmptySet) {
  auto s = build_voidface_structure(3);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(s.minimal_forbidden(i), std::vector<ShareSet>{0});
}

TEST(AccessStructure, MonotonicityViolation) {
  // Q^1 generated by {AS}, but F^1 lists {AS, PS_1} alone.
  std::vector<std::string> labels{"AS", "PS_1"};
  AccessStructure s(labels, {{{0b01}, std::vector<ShareSet>{0b11}}});
  EXPECT_FALSE(check_monotonicity(s));
  EXPECT_FALSE(oracle_monotone(s));
  EXPECT_FALSE(check_disjoint(s));
}

TEST(AccessStructure, EmptyQualifiedFamiliesAreVacuouslyMonotone) {
  AccessStructure s({"AS", "PS_1", "PS_2"}, {{{}, std::vector<ShareSet>{}},
                                             {{}, std::vector<ShareSet>{}}});
  EXPECT_TRUE(check_monotonicity(s));
}

TEST(AccessStructure, UniquenessViolation) {
  // Secret 1 is opened by {AS, PS_1}; secret 2 lists the same set as its
  // (only, hence minimal) forbidden set.
  AccessStructure s({"AS", "PS_1", "PS_2"},
                    {{{0b011}, std::nullopt}, {{0b011}, std::vector<ShareSet>{0b011}}});
  EXPECT_FALSE(check_uniqueness(s));
}

TEST(AccessStructure, SingleSecretIsVacuouslyUnique) {
  EXPECT_TRUE(check_uniqueness(build_voidface_structure(1)));
}

TEST(AccessStructure, SinglePatch) {
  auto s = build_voidface_structure(1);
  EXPECT_EQ(s.minimal_qualified(0), std::vector<ShareSet>{s.make_set({"AS", "PS_1"})});
  EXPECT_THROW(build_voidface_structure(0), Error);
}

TEST(AccessStructure, AllPrivateSharesWithoutAsAreForbidden) {
  auto s = build_voidface_structure(6);
  ShareSet all_ps = s.full_set() & ~kAuthBit;
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_TRUE(s.in_forbidden(i, all_ps));
    EXPECT_FALSE(is_qualified(s, i, all_ps));
  }
}

TEST(AccessStructure, IsQualifiedExamples) {
  auto s = build_voidface_structure(6);
  EXPECT_TRUE(is_qualified(s, 2, s.make_set({"AS", "PS_3"})));
  EXPECT_FALSE(is_qualified(s, 2, s.make_set({"PS_3"})));
  for (std::size_t i = 0; i < 6; ++i) EXPECT_TRUE(is_qualified(s, i, s.full_set()));
  try {
    is_qualified(s, 6, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
  }
}

TEST(AccessStructure, ValidForOneThroughTwelve) {
  for (std::size_t n = 1; n <= 12; ++n) {
    auto s = build_voidface_structure(n);
    EXPECT_TRUE(check_monotonicity(s)) << n;
    EXPECT_TRUE(check_uniqueness(s)) << n;
    EXPECT_TRUE(check_perfect(s)) << n;
  }
}

TEST(AccessStructure, CapacityLimit) {
  std::vector<std::string> labels;
  for (int i = 0; i < 17; ++i) labels.push_back("S" + std::to_string(i));
  AccessStructure s(labels, {{{1}, std::nullopt}});
  try {
    check_monotonicity(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::capacity);
  }
  EXPECT_THROW(check_uniqueness(s), Error);
}

TEST(AccessStructure, DumpListsUniverseAndMinimalSets) {
  auto text = build_voidface_structure(2).dump();
  EXPECT_NE(text.find("universe: {AS, PS_1, PS_2}"), std::string::npos);
  EXPECT_NE(text.find("secret 2: minimal qualified {AS, PS_2}"), std::string::npos);
}

// Qualified subsets reconstruct bit-exactly, forbidden ones reveal nothing
// measurable about the patch.
TEST(AccessStructure, SemanticSoundnessBridge) {
  constexpr std::size_t n = 4;
  auto s = build_voidface_structure(n);
  SeededRandom rng(99);
  Dimensions d{96, 96, 3};
  std::vector<vss::PatchImage> patches;
  for (std::uint8_t i = 0; i < n; ++i) patches.push_back(testing_support::random_patch(i, d, 500 + i));
  auto shares = vss::share_patches(patches, testing_support::subject(3), rng);

  auto grid_bytes = [&](std::size_t label) -> const std::vector<Byte>& {
    return label == 0 ? shares.auth.bytes : shares.privates[label - 1].bytes;
  };

  for (ShareSet t = 1; t <= s.full_set(); ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (is_qualified(s, i, t)) {
        auto rec = vss::reconstruct_patch(shares.auth, shares.privates[i]);
        EXPECT_EQ(rec.pixels, patches[i].pixels);
        continue;
      }
      // XOR of every member of the forbidden set, and of each single member.
      std::vector<Byte> acc(d.byte_count(), 0);
      for (std::size_t b = 0; b <= n; ++b) {
        if (!(t & (1u << b))) continue;
        const auto& g = grid_bytes(b);
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] ^= g[k];
        EXPECT_LT(std::abs(*oracle::pearson_bytes(g, patches[i].pixels)), 0.05);
      }
      EXPECT_NE(acc, patches[i].pixels);
      EXPECT_LT(std::abs(*oracle::pearson_bytes(acc, patches[i].pixels)), 0.05) << t << " " << i;
    }
  }
}
