#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "test_support.hpp"
#include "voidface/share_format.hpp"
#include "voidface/vault.hpp"

using namespace voidface;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("voidface-vault-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct FakeClock {
  std::int64_t t = 1000;
  vault::Vault::Clock fn() {
    return [this] { return t; };
  }
};

vss::ShareGrid auth_for(const SubjectId& s, std::uint64_t seed) {
  SeededRandom rng(seed);
  auto g = vss::generate_random_grid({8, 8, 3}, rng);
  g.subject = s;
  return g;
}

std::vector<dist::PlacementEntry> placement_on(std::initializer_list<dist::InstitutionId> insts) {
  std::vector<dist::PlacementEntry> out;
  std::uint8_t p = 0;
  for (auto i : insts) out.push_back({i, p++, 0, 1});
  return out;
}

class FakeInstitutions : public vault::InstitutionDirectory {
 public:
  std::set<dist::InstitutionId> offline;
  std::vector<std::pair<dist::InstitutionId, SubjectId>> deleted;
  bool delete_subject(dist::InstitutionId inst, const SubjectId& s) override {
    if (offline.contains(inst)) return false;
    deleted.emplace_back(inst, s);
    return true;
  }
};

}  // namespace

TEST(Vault, RegisterAndValidate) {
  FakeClock clock;
  vault::Vault v(clock.fn());
  const auto a = testing_support::subject(1), b = testing_support::subject(40);
  v.register_subject(a, auth_for(a, 1), placement_on({0, 1}), 2, {"lab"});
  v.register_subject(b, auth_for(b, 2), placement_on({2}), 1, {"other"});

  std::vector<SubjectId> req{a, b, testing_support::subject(90)};
  auto res = v.validate_training_request("lab", req);
  ASSERT_EQ(res.authorized.size(), 1u);
  EXPECT_EQ(res.authorized[0].subject, a);
  EXPECT_EQ(res.authorized[0].auth, auth_for(a, 1));
  ASSERT_EQ(res.excluded.size(), 2u);
  EXPECT_EQ(res.excluded[0].reason, vault::ExclusionReason::not_allowed);
  EXPECT_EQ(res.excluded[1].reason, vault::ExclusionReason::unknown_subject);
}

TEST(Vault, RejectsMismatchedOrDuplicate) {
  vault::Vault v;
  const auto a = testing_support::subject(1);
  EXPECT_THROW(v.register_subject(a, auth_for(testing_support::subject(2), 1), {}, 0, {}), Error);
  v.register_subject(a, auth_for(a, 1), {}, 0, {"lab"});
  try {
    v.register_subject(a, auth_for(a, 2), {}, 0, {"lab"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::conflict);
  }
}

TEST(Vault, UnknownRequesterIsUnauthorized) {
  vault::Vault v;
  const auto a = testing_support::subject(1);
  v.register_subject(a, auth_for(a, 1), {}, 0, {"lab"});
  std::vector<SubjectId> req{a};
  try {
    v.validate_training_request("mallory", req);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::authorization);
  }
}

TEST(Vault, RevokeExcludesAndQueuesGc) {
  FakeClock clock;
  vault::Vault v(clock.fn());
  const auto a = testing_support::subject(1);
  auto as = auth_for(a, 7);
  v.register_subject(a, as, placement_on({3, 4, 5}), 3, {"lab"});
  clock.t = 2000;
  EXPECT_TRUE(v.rtbf_revoke(a));
  EXPECT_FALSE(v.rtbf_revoke(a));
  EXPECT_FALSE(v.holds_auth_bytes(a));
  EXPECT_FALSE(v.contains_bytes(as.bytes));

  auto rec = v.record(a);
  ASSERT_TRUE(rec);
  EXPECT_FALSE(rec->active);
  EXPECT_EQ(rec->revoked_at, 2000);
  EXPECT_EQ(rec->pending_gc, (std::set<dist::InstitutionId>{3, 4, 5}));

  std::vector<SubjectId> req{a};
  try {
    v.validate_training_request("lab", req);
    FAIL();
  } catch (const vault::NoAuthorizedSubjects& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_data);
    ASSERT_EQ(e.excluded().size(), 1u);
    EXPECT_EQ(e.excluded()[0].reason, vault::ExclusionReason::rtbf);
  }
  EXPECT_THROW(v.rtbf_revoke(testing_support::subject(99)), Error);
}

TEST(Vault, GcRetriesUnreachableInstitutions) {
  FakeClock clock;
  vault::Vault v(clock.fn());
  const auto a = testing_support::subject(1);
  v.register_subject(a, auth_for(a, 7), placement_on({0, 1, 2}), 3, {"lab"});
  v.rtbf_revoke(a);

  FakeInstitutions inst;
  inst.offline = {1};
  auto first = v.gc_abandoned_shares(inst);
  EXPECT_EQ(first.acknowledged(), 2u);
  EXPECT_EQ(first.queued(), 1u);
  EXPECT_EQ(v.pending_gc().size(), 1u);

  inst.offline.clear();
  auto second = v.gc_abandoned_shares(inst);
  EXPECT_EQ(second.acknowledged(), 1u);
  EXPECT_EQ(second.queued(), 0u);
  EXPECT_TRUE(v.pending_gc().empty());
  EXPECT_EQ(v.gc_history().size(), 2u);
  EXPECT_EQ(inst.deleted.size(), 3u);

  EXPECT_TRUE(v.gc_abandoned_shares(inst).items.empty());
}

TEST(Vault, ReRegisterAfterRevokeKeepsHistory) {
  FakeClock clock;
  vault::Vault v(clock.fn());
  const auto a = testing_support::subject(1);
  v.register_subject(a, auth_for(a, 1), placement_on({0}), 1, {"lab"});
  clock.t = 1500;
  v.rtbf_revoke(a);
  clock.t = 3000;
  v.register_subject(a, auth_for(a, 2), placement_on({1}), 1, {"lab"});
  auto rec = v.record(a);
  ASSERT_TRUE(rec);
  EXPECT_TRUE(rec->active);
  EXPECT_EQ(rec->created_at, 3000);
  EXPECT_EQ(rec->prior_revocations, std::vector<std::int64_t>{1500});
  EXPECT_EQ(*rec->auth, auth_for(a, 2));
}

TEST(Vault, PersistsAcrossRestart) {
  TempDir dir;
  FakeClock clock;
  const auto a = testing_support::subject(1), b = testing_support::subject(40);
  auto as_a = auth_for(a, 1);
  {
    vault::Vault v(dir.path, clock.fn());
    v.register_subject(a, as_a, placement_on({0, 1}), 2, {"lab"});
    v.register_subject(b, auth_for(b, 2), placement_on({2}), 1, {"lab"});
    v.grant(a, "second-lab");
    v.rtbf_revoke(b);
  }
  vault::Vault v(dir.path, clock.fn());
  auto ra = v.record(a);
  ASSERT_TRUE(ra && ra->active);
  EXPECT_EQ(*ra->auth, as_a);
  EXPECT_TRUE(ra->allowed_requesters.contains("second-lab"));
  auto rb = v.record(b);
  ASSERT_TRUE(rb);
  EXPECT_FALSE(rb->active);
  EXPECT_EQ(rb->pending_gc, (std::set<dist::InstitutionId>{2}));
  EXPECT_FALSE(v.holds_auth_bytes(b));

  v.compact();
  vault::Vault after(dir.path, clock.fn());
  EXPECT_EQ(after.record(a)->placement.size(), 2u);
  EXPECT_EQ(*after.record(a)->auth, as_a);
  EXPECT_FALSE(after.record(b)->active);
}

TEST(Vault, CrashBetweenAsWriteAndLogLeavesNoActiveRecord) {
  TempDir dir;
  const auto a = testing_support::subject(1);
  fs::create_directories(dir.path / "as");
  share_format::write_file(dir.path / "as" / (a.str() + ".share"), auth_for(a, 1));
  vault::Vault v(dir.path);
  EXPECT_FALSE(v.record(a));
  EXPECT_FALSE(fs::exists(dir.path / "as" / (a.str() + ".share")));
}

TEST(Vault, LogEventWithoutAsFileStaysInactive) {
  TempDir dir;
  const auto a = testing_support::subject(1);
  {
    vault::Vault v(dir.path);
    v.register_subject(a, auth_for(a, 1), {}, 0, {"lab"});
  }
  fs::remove(dir.path / "as" / (a.str() + ".share"));
  vault::Vault v(dir.path);
  auto rec = v.record(a);
  EXPECT_TRUE(!rec || !rec->active);
}

TEST(Vault, TornFinalLineIsIgnored) {
  TempDir dir;
  const auto a = testing_support::subject(1);
  {
    vault::Vault v(dir.path);
    v.register_subject(a, auth_for(a, 1), {}, 0, {"lab"});
  }
  std::ofstream(dir.path / "log.jsonl", std::ios::app) << "{\"type\":\"REVO";
  vault::Vault v(dir.path);
  EXPECT_TRUE(v.record(a)->active);
}

TEST(Vault, ConcurrentValidation) {
  vault::Vault v;
  std::vector<SubjectId> ids;
  for (std::uint8_t i = 0; i < 20; ++i) {
    ids.push_back(testing_support::subject(static_cast<std::uint8_t>(i * 10)));
    v.register_subject(ids.back(), auth_for(ids.back(), i), {}, 0, {"lab"});
  }
  std::size_t total = 0;
#pragma omp parallel for reduction(+ : total)
  for (int t = 0; t < 64; ++t) total += v.validate_training_request("lab", ids).authorized.size();
  EXPECT_EQ(total, 64u * 20u);
}
