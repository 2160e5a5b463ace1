#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "test_support.hpp"
#include "voidface/orchestrator.hpp"

using namespace voidface;
using namespace voidface::orch;

namespace {

NodeProfile ws(const std::string& id, double rate, double bw) {
  NodeProfile p;
  p.node_id = id;
  p.compute_rate = rate;
  p.bandwidth = bw;
  return p;
}

// Every n_p-subset of the compliant nodes; returns the smallest achievable
// maximum estimate.
double brute_force_min_max(const std::vector<double>& est, std::size_t n_p, double deadline) {
  std::vector<double> ok;
  for (double e : est)
    if (e <= deadline) ok.push_back(e);
  double best = INFINITY;
  std::vector<bool> pick(ok.size(), false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(n_p), true);
  do {
    double worst = 0;
    for (std::size_t i = 0; i < ok.size(); ++i)
      if (pick[i]) worst = std::max(worst, ok[i]);
    best = std::min(best, worst);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

}  // namespace

TEST(Selection, ClosedFormEstimate) {
  std::vector<NodeProfile> nodes;
  for (int i = 0; i < 6; ++i) nodes.push_back(ws("w" + std::to_string(i), 2.0, 1e6));
  const auto w = round_workload(10, {96, 96, 3});
  EXPECT_DOUBLE_EQ(w.work_units, 10.0);
  EXPECT_DOUBLE_EQ(w.bytes, 276480.0);
  auto sel = select_nodes(nodes, 6, w, 100.0);
  ASSERT_EQ(sel.assignment.size(), 6u);
  for (double e : sel.estimates) EXPECT_DOUBLE_EQ(e, 10.0 / 2.0 + 276480.0 / 1e6);
  EXPECT_EQ(sel.assignment, (std::vector<NodeId>{"w0", "w1", "w2", "w3", "w4", "w5"}));
}

TEST(Selection, PicksFastestCompliantAndMatchesBruteForce) {
  std::vector<NodeProfile> nodes;
  const double rates[10] = {1, 9, 3, 0.1, 7, 0.2, 5, 2, 0.15, 4};
  for (int i = 0; i < 10; ++i) nodes.push_back(ws("n" + std::to_string(i), rates[i], 1e9));
  const Workload w{10, 0};
  auto sel = select_nodes(nodes, 6, w, 20.0);  // 0.1/0.15/0.2 miss
  EXPECT_EQ(sel.assignment, (std::vector<NodeId>{"n1", "n4", "n6", "n9", "n2", "n7"}));
  std::vector<double> est;
  for (const auto& n : nodes) est.push_back(estimate_seconds(n, w));
  EXPECT_DOUBLE_EQ(*std::max_element(sel.estimates.begin(), sel.estimates.end()),
                   brute_force_min_max(est, 6, 20.0));
}

TEST(Selection, DeadlineBelowEverything) {
  std::vector<NodeProfile> nodes{ws("a", 1, 1), ws("b", 2, 2)};
  try {
    select_nodes(nodes, 1, {10, 10}, 0.5);
    FAIL();
  } catch (const InsufficientCapacity& e) {
    EXPECT_EQ(e.code(), ErrorCode::insufficient_capacity);
    ASSERT_EQ(e.near_misses().size(), 1u);
    EXPECT_EQ(e.near_misses()[0].node_id, "b");
  }
}

TEST(Selection, IgnoresInstitutionsAndEnergyShortfall) {
  auto inst = ws("inst", 100, 100);
  inst.role = NodeRole::institution;
  auto tired = ws("tired", 100, 100);
  tired.energy_budget = 0.5;
  std::vector<NodeProfile> nodes{inst, tired, ws("ok", 1, 100)};
  auto sel = select_nodes(nodes, 1, {1, 1}, 10);
  EXPECT_EQ(sel.assignment, std::vector<NodeId>{"ok"});
  EXPECT_THROW(select_nodes(nodes, 2, {1, 1}, 10), InsufficientCapacity);
}

TEST(Selection, RejectsBadProfiles) {
  auto bad = ws("x", 0, 1);
  std::vector<NodeProfile> nodes{bad};
  EXPECT_THROW(select_nodes(nodes, 1, {1, 1}, 10), Error);
  std::vector<NodeProfile> dup{ws("x", 1, 1), ws("x", 1, 1)};
  EXPECT_THROW(select_nodes(dup, 1, {1, 1}, 10), Error);
}

TEST(Selection, FeasibilityPropertyOverRandomPopulations) {
  SeededRandom rng(2024);
  int feasible = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<NodeProfile> nodes;
    const auto n = 1 + rng.uniform_below(20);
    for (std::uint64_t i = 0; i < n; ++i)
      nodes.push_back(ws("n" + std::to_string(i), 0.1 + 10 * rng.uniform_unit(),
                         1e4 + 1e6 * rng.uniform_unit()));
    const auto n_p = 1 + rng.uniform_below(8);
    const Workload w{5, 276480};
    const double deadline = 1 + 60 * rng.uniform_unit();
    std::vector<double> est;
    for (const auto& x : nodes) est.push_back(estimate_seconds(x, w));
    const auto compliant = std::count_if(est.begin(), est.end(), [&](double e) { return e <= deadline; });
    try {
      auto sel = select_nodes(nodes, n_p, w, deadline);
      ++feasible;
      ASSERT_EQ(sel.assignment.size(), n_p);
      std::set<NodeId> distinct(sel.assignment.begin(), sel.assignment.end());
      ASSERT_EQ(distinct.size(), n_p);
      for (double e : sel.estimates) ASSERT_LE(e, deadline);
      if (compliant <= 14)
        ASSERT_DOUBLE_EQ(*std::max_element(sel.estimates.begin(), sel.estimates.end()),
                         brute_force_min_max(est, n_p, deadline));
    } catch (const InsufficientCapacity&) {
      ASSERT_LT(static_cast<std::uint64_t>(compliant), n_p);
    }
  }
  EXPECT_GT(feasible, 100);
}

TEST(Straggler, ScoreValues) {
  EXPECT_DOUBLE_EQ(straggler_score(5, 10, 1), 1.0);
  EXPECT_NEAR(straggler_score(20, 10, 1), 0.36787944117144233, 1e-15);
  EXPECT_LT(straggler_score(20, 10, 1), 0.5);
  EXPECT_NEAR(straggler_score(110, 10, 1), std::exp(-10.0), 1e-18);
}

namespace {

struct RoundFixture {
  std::vector<NodeProfile> nodes;
  TrainingRound round;
  Workload w{1, 0};
  FairnessLedger fairness;
  SeededRandom rng{9};

  RoundFixture() {
    for (int i = 0; i < 9; ++i) nodes.push_back(ws("w" + std::to_string(i), 1.0 / (1 + i), 1));
    auto sel = select_nodes(nodes, 6, w, 100);
    round.assignment = sel.assignment;
    round.expected = sel.estimates;
    round.deadline = 100;
    round.status = RoundStatus::running;
  }
};

}  // namespace

TEST(Straggler, HealthyRoundUnchanged) {
  RoundFixture f;
  std::map<NodeId, NodeObservation> obs;
  for (std::size_t i = 0; i < 6; ++i) obs[f.round.assignment[i]] = {f.round.expected[i], 1.0};
  auto before = f.round.assignment;
  drop_stragglers(f.round, obs, f.nodes, f.w, {}, f.fairness, f.rng);
  EXPECT_EQ(f.round.assignment, before);
  EXPECT_TRUE(f.round.dropped.empty());
  EXPECT_EQ(f.round.status, RoundStatus::running);
}

TEST(Straggler, SilentNodeReplaced) {
  RoundFixture f;
  std::map<NodeId, NodeObservation> obs;
  obs["w2"] = {0.5, 10.5};
  drop_stragglers(f.round, obs, f.nodes, f.w, {}, f.fairness, f.rng);
  ASSERT_EQ(f.round.dropped.size(), 1u);
  EXPECT_EQ(f.round.dropped[0].reason, DropReason::heartbeat);
  EXPECT_EQ(f.round.assignment[2], "w6");
  EXPECT_EQ(f.fairness.skip_count("w2"), 1u);
  std::set<NodeId> distinct(f.round.assignment.begin(), f.round.assignment.end());
  EXPECT_EQ(distinct.size(), 6u);

  // exactly two intervals is not yet a miss
  RoundFixture g;
  obs["w2"] = {0.5, 10.0};
  drop_stragglers(g.round, obs, g.nodes, g.w, {}, g.fairness, g.rng);
  EXPECT_TRUE(g.round.dropped.empty());
}

TEST(Straggler, LatenessOneRemoved) {
  RoundFixture f;
  std::map<NodeId, NodeObservation> obs;
  obs["w0"] = {2 * f.round.expected[0], 0};
  drop_stragglers(f.round, obs, f.nodes, f.w, {1.0, 0.5, 5, 2}, f.fairness, f.rng);
  ASSERT_EQ(f.round.dropped.size(), 1u);
  EXPECT_EQ(f.round.dropped[0].reason, DropReason::straggler);
  EXPECT_NEAR(f.round.dropped[0].score, std::exp(-1.0), 1e-15);
  EXPECT_EQ(f.round.assignment[0], "w6");
}

TEST(Straggler, AbortsWithoutReplacement) {
  RoundFixture f;
  std::map<NodeId, NodeObservation> obs;
  for (const auto& id : {"w0", "w1", "w2", "w3"}) obs[id] = {0, 60};
  drop_stragglers(f.round, obs, f.nodes, f.w, {}, f.fairness, f.rng);
  EXPECT_EQ(f.round.status, RoundStatus::aborted);
  EXPECT_FALSE(f.round.abort_reason.empty());
}

TEST(Straggler, DroppedNodesLoseSelectionPriority) {
  RoundFixture f;
  f.fairness.record_drop("w0");
  auto sel = select_nodes(f.nodes, 6, f.w, 100, &f.fairness);
  EXPECT_EQ(std::find(sel.assignment.begin(), sel.assignment.end(), "w0"), sel.assignment.end());
}

TEST(RoundConfig, ParsesAndValidates) {
  auto c = RoundConfig::from_json(nlohmann::json::parse(
      R"({"n_p":6,"deadline_s":30,"lambda":1.0,"theta":0.5,"heartbeat_s":5,"trainer":"stub"})"));
  EXPECT_EQ(c.n_p, 6u);
  EXPECT_DOUBLE_EQ(c.deadline_s, 30);
  EXPECT_EQ(RoundConfig::from_json(c.to_json()).to_json(), c.to_json());
  EXPECT_THROW(RoundConfig::from_json({{"theta", 2.0}}), Error);
  EXPECT_THROW(RoundConfig::from_json({{"trainer", "gpu"}}), Error);
  EXPECT_THROW(RoundConfig::from_json({{"n_p", "six"}}), Error);
}

namespace {

class MapSource : public ShareSource {
 public:
  std::map<std::tuple<dist::InstitutionId, SubjectId, std::uint8_t, std::uint8_t>, vss::ShareGrid> grids;
  std::optional<vss::ShareGrid> fetch(dist::InstitutionId inst, const SubjectId& s,
                                      std::uint8_t p, std::uint8_t sg) override {
    auto it = grids.find({inst, s, p, sg});
    if (it == grids.end()) return std::nullopt;
    return it->second;
  }
};

struct Placed {
  std::vector<vss::PatchImage> patches;
  vault::AsHandle handle;
};

Placed place(MapSource& src, std::uint8_t tag, std::size_t n_inst, std::uint64_t seed) {
  SeededRandom rng(seed);
  Placed out;
  for (std::uint8_t i = 0; i < 6; ++i)
    out.patches.push_back(testing_support::random_patch(i, {16, 16, 3}, seed * 10 + i));
  const auto subject = testing_support::subject(tag);
  auto shares = vss::share_patches(out.patches, subject, rng);
  auto plan = dist::plan_distribution(shares.privates, n_inst, rng);
  for (const auto& a : plan.assignments)
    src.grids[{a.institution, subject, a.grid.patch_index, a.grid.subgrid_index}] = a.grid;
  out.handle = {subject, shares.auth, plan.entries(), plan.share_count};
  return out;
}

}  // namespace

TEST(Dispatch, HealthyRoundIsBitExact) {
  MapSource src;
  auto a = place(src, 1, 6, 1), b = place(src, 50, 20, 2);
  std::vector<vault::AsHandle> handles{a.handle, b.handle};
  std::vector<BufferRegistry> ws(6);
  std::vector<PatchProblem> problems;
  auto per_subject = dispatch_and_reconstruct(6, handles, src, ws, &problems);
  EXPECT_TRUE(problems.empty());
  ASSERT_EQ(per_subject.size(), 2u);
  for (std::size_t p = 0; p < 6; ++p) {
    ASSERT_TRUE(per_subject[0].patches[p]);
    auto va = per_subject[0].patches[p]->pixels.view();
    EXPECT_TRUE(std::equal(va.begin(), va.end(), a.patches[p].pixels.begin(), a.patches[p].pixels.end()));
    auto vb = per_subject[1].patches[p]->pixels.view();
    EXPECT_TRUE(std::equal(vb.begin(), vb.end(), b.patches[p].pixels.begin(), b.patches[p].pixels.end()));
    EXPECT_EQ(ws[p].live_count(), 2u);
  }
}

TEST(Dispatch, CaseOneDroppedPatchIsUnavailable) {
  MapSource src;
  auto a = place(src, 1, 5, 3);
  std::vector<vault::AsHandle> handles{a.handle};
  std::vector<BufferRegistry> ws(6);
  std::vector<PatchProblem> problems;
  auto per_subject = dispatch_and_reconstruct(6, handles, src, ws, &problems);
  ASSERT_EQ(problems.size(), 1u);
  EXPECT_EQ(problems[0].detail, "patch unavailable");
  int present = 0;
  for (const auto& p : per_subject[0].patches) present += p.has_value();
  EXPECT_EQ(present, 5);

  train::StubTrainer stub;
  auto out = train::train_round(per_subject, stub, 6);
  EXPECT_EQ(out.metrics.patches_trained, 5u);
  EXPECT_EQ(out.metrics.failures.size(), 1u);
}

TEST(Dispatch, MissingSubgridIsIncomplete) {
  MapSource src;
  auto a = place(src, 1, 12, 4);
  src.grids.erase(src.grids.begin());
  std::vector<vault::AsHandle> handles{a.handle};
  std::vector<BufferRegistry> ws(6);
  std::vector<PatchProblem> problems;
  dispatch_and_reconstruct(6, handles, src, ws, &problems);
  ASSERT_EQ(problems.size(), 1u);
  EXPECT_EQ(problems[0].code, ErrorCode::incomplete_share);
}

TEST(Dispatch, TrainingWipesWorkstationBuffers) {
  MapSource src;
  auto a = place(src, 1, 6, 5);
  std::vector<vault::AsHandle> handles{a.handle};
  std::vector<BufferRegistry> ws(6);
  auto per_subject = dispatch_and_reconstruct(6, handles, src, ws);
  train::StubTrainer stub;
  train::train_round(per_subject, stub, 6);
  for (std::size_t p = 0; p < 6; ++p) {
    EXPECT_EQ(ws[p].live_count(), 0u);
    EXPECT_FALSE(ws[p].contains(a.patches[p].pixels));
  }
}
