#include <gtest/gtest.h>

#include <sodium.h>

#include "voidface/error.hpp"
#include "voidface/simnet.hpp"
#include "voidface/trainer.hpp"

using namespace voidface;
using namespace voidface::sim;
using nlohmann::json;

namespace {

std::string sha256_hex(const std::vector<Byte>& data) {
  unsigned char h[crypto_hash_sha256_BYTES];
  crypto_hash_sha256(h, data.data(), data.size());
  char hex[2 * crypto_hash_sha256_BYTES + 1];
  sodium_bin2hex(hex, sizeof hex, h, sizeof h);
  return hex;
}

// Vault, 6 institutions, 8 workstations, orchestrator and one client.
json base_scenario() {
  json nodes = json::array();
  nodes.push_back({{"id", "vault"}, {"role", "vault"}, {"latency_ms", 5}, {"service_ms", 2}});
  for (int i = 0; i < 6; ++i)
    nodes.push_back({{"id", "inst-" + std::to_string(i)}, {"role", "institution"}, {"latency_ms", 10}});
  for (int i = 0; i < 8; ++i)
    nodes.push_back({{"id", "ws-" + std::to_string(i)},
                     {"role", "workstation"},
                     {"latency_ms", 2},
                     {"profile", {{"compute_rate", 1.0}, {"bandwidth", 1e7}}}});
  nodes.push_back({{"id", "orch"}, {"role", "orchestrator"}, {"latency_ms", 1}});
  nodes.push_back({{"id", "client"}, {"role", "client"}, {"latency_ms", 1}});
  return {{"nodes", nodes},
          {"round", {{"n_p", 6}, {"deadline_s", 30}, {"heartbeat_s", 2}}},
          {"script", json::array()}};
}

json enroll(double t, const std::string& subject) {
  return {{"t", t}, {"event", "enroll"}, {"subject", subject}};
}

json train_event(double t, std::vector<std::string> subjects) {
  return {{"t", t}, {"event", "train"}, {"client", "client"}, {"subjects", subjects}};
}

SimResult run(const json& j, std::uint64_t seed = 7) {
  return run_scenario(Scenario::from_json(j), seed);
}

const json& only_round(const SimResult& r) {
  return r.final_state.at("orchestrator").at("rounds").at(0);
}

// Node that held grid `patch` of the subject's plan.
NodeId institution_for(const SubjectTruth& t, std::uint8_t patch) {
  for (const auto& a : t.plan.assignments)
    if (a.grid.patch_index == patch) return t.institutions.at(a.institution);
  return {};
}

}  // namespace

TEST(Simnet, EmptyScriptHasEmptyTrace) {
  auto r = run(base_scenario());
  EXPECT_TRUE(r.trace.empty());
  EXPECT_EQ(r.end_time, 0);
}

TEST(Simnet, RequestResponseTimingIsClosedForm) {
  json j = {{"nodes",
             {{{"id", "a"}, {"role", "client"}, {"latency_ms", 2}},
              {{"id", "b"}, {"role", "institution"}, {"latency_ms", 3}, {"service_ms", 4}}}},
            {"script",
             {{{"t", 1.0},
               {"event", "send"},
               {"src", "a"},
               {"dst", "b"},
               {"type", "PS_FETCH"},
               {"payload", {{"subject", "nobody"}, {"patch_index", 0}}}}}}};
  // Free-form names are not UUIDs; resolve them the way scripts do.
  j["script"][0]["payload"]["subject"] = scenario_subject("nobody").str();
  auto r = run(j);
  ASSERT_EQ(r.trace.size(), 2u);
  const SimTime t = from_seconds(1.0), latency = 5000, service = 4000;
  EXPECT_EQ(r.trace[0].sim_time, t + latency);
  EXPECT_EQ(r.trace[1].type, MessageType::ERROR);
  EXPECT_EQ(r.trace[1].sent_at, t + latency + service);
  EXPECT_EQ(r.trace[1].sim_time, t + 2 * latency + service);
  EXPECT_TRUE(conservation_violations(r).empty());
}

TEST(Simnet, ExplicitLinkOverridesAccessLatency) {
  json j = {{"nodes",
             {{{"id", "a"}, {"role", "client"}, {"latency_ms", 2}},
              {{"id", "b"}, {"role", "client"}, {"latency_ms", 3}}}},
            {"links", {{{"a", "b"}, {"b", "a"}, {"latency_ms", 40}}}},
            {"script", {{{"t", 0.0}, {"event", "send"}, {"src", "a"}, {"dst", "b"}, {"type", "ACK"}}}}};
  auto r = run(j);
  ASSERT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.trace[0].sim_time, 40000);
}

TEST(Simnet, SameSeedSameTrace) {
  json j = base_scenario();
  j["script"] = {enroll(0, "alice"), train_event(1, {"alice"})};
  auto a = run(j, 11), b = run(j, 11), c = run(j, 12);
  EXPECT_EQ(a.trace_hash(), b.trace_hash());
  EXPECT_EQ(a.trace_jsonl(), b.trace_jsonl());
  EXPECT_NE(a.trace_hash(), c.trace_hash());
}

TEST(Simnet, HealthyRoundReconstructsEveryPatchExactly) {
  json j = base_scenario();
  j["script"] = {enroll(0, "alice"), train_event(1, {"alice"})};
  auto r = run(j);
  const auto& round = only_round(r);
  ASSERT_EQ(round.at("status"), "completed") << round.dump(2);
  const auto alice = scenario_subject("alice");
  const auto& truth = r.truth.at(alice);
  ASSERT_EQ(truth.patches.size(), 6u);

  for (std::size_t p = 0; p < 6; ++p) {
    const std::string ws = round.at("assignment").at(p);
    const auto& digests = r.final_state.at("workstations").at(ws).at("digests");
    const std::string key = alice.str() + "/p" + std::to_string(p);
    ASSERT_TRUE(digests.contains(key)) << ws << " " << key;
    EXPECT_EQ(digests.at(key), sha256_hex(truth.patches[p].pixels));
    EXPECT_EQ(r.final_state.at("workstations").at(ws).at("live_buffers"), 0);
  }
  const auto& report = round.at("report");
  EXPECT_EQ(report.at("patches_trained"), 6);
  EXPECT_EQ(report.at("output_digest").get<std::string>().size(), 64u);

  EXPECT_TRUE(lateral_workstation_links(r).empty());
  EXPECT_TRUE(conservation_violations(r).empty());
  EXPECT_TRUE(unsafe_single_links(r).empty());
  for (const auto& h : r.holders.at(alice)) EXPECT_EQ(h.rfind("workstation:", 0), std::string::npos) << h;
}

TEST(Simnet, SimulatedDigestMatchesDirectTraining) {
  json j = base_scenario();
  j["script"] = {enroll(0, "alice"), enroll(0, "bob"), train_event(1, {"alice", "bob"})};
  auto r = run(j);
  const auto& report = only_round(r).at("report");
  ASSERT_EQ(report.at("status"), "completed");

  train::StubTrainer stub;
  std::map<SubjectId, train::Embedding> expected;
  for (const auto& [subject, t] : r.truth) {
    std::vector<train::Embedding> feats;
    for (const auto& p : t.patches) feats.push_back(stub.extract({subject, p.patch_index, p.dims, p.pixels}));
    expected[subject] = stub.aggregate(subject, feats);
  }
  EXPECT_EQ(report.at("output_digest"), train::digest_embeddings(expected));
}

TEST(Simnet, WiretapNeedsAuthAndPrivateOnTheSamePatch) {
  json j = base_scenario();
  j["script"] = {enroll(0, "alice"), train_event(1, {"alice"})};
  auto r = run(j);
  const auto alice = scenario_subject("alice");
  const auto& round = only_round(r);
  const std::string ws0 = round.at("assignment").at(0);
  const NodeId inst0 = institution_for(r.truth.at(alice), 0);

  auto as_only = wiretap_audit(r, {make_link("vault", ws0)});
  EXPECT_EQ(as_only.reconstructable_count(), 0u);
  EXPECT_GT(as_only.captured_bytes.at(make_link("vault", ws0)), 0u);
  auto ps_only = wiretap_audit(r, {make_link(inst0, ws0)});
  EXPECT_EQ(ps_only.reconstructable_count(), 0u);

  auto pair = wiretap_audit(r, {make_link("vault", ws0), make_link(inst0, ws0)});
  ASSERT_EQ(pair.reconstructable_count(), 1u);
  for (const auto& v : pair.verdicts)
    if (v.reconstructable) {
      EXPECT_EQ(v.patch_index, 0);
      EXPECT_TRUE(v.verified);
    }

  // The AS is common to all patches, so it pairs with any captured private share.
  const std::string ws1 = round.at("assignment").at(1);
  const NodeId inst1 = institution_for(r.truth.at(alice), 1);
  auto crossed = wiretap_audit(r, {make_link("vault", ws0), make_link(inst1, ws1)});
  EXPECT_EQ(crossed.reconstructable_count(), 1u);
  for (const auto& v : crossed.verdicts)
    if (v.reconstructable) EXPECT_EQ(v.patch_index, 1);
}

TEST(Simnet, RevokedSubjectNeverTravels) {
  json j = base_scenario();
  j["script"] = {enroll(0, "alice"), enroll(0, "bob"),
                 {{"t", 0.5}, {"event", "rtbf"}, {"client", "client"}, {"subject", "alice"}},
                 train_event(1, {"alice", "bob"})};
  auto r = run(j);
  const auto& report = only_round(r).at("report");
  ASSERT_EQ(report.at("status"), "completed");
  ASSERT_EQ(report.at("excluded").size(), 1u);
  EXPECT_EQ(report.at("excluded")[0].at("reason"), "RTBF");

  std::set<Link> all;
  for (const auto& m : r.trace) all.insert(make_link(m.src, m.dst));
  auto obs = wiretap_audit(r, all);
  const auto alice = scenario_subject("alice");
  for (const auto& v : obs.verdicts) EXPECT_NE(v.subject, alice);
  for (const auto& h : r.holders.at(alice)) EXPECT_EQ(h.rfind("vault", 0), std::string::npos);
}

TEST(Simnet, OnlyRevokedSubjectsAbortWithReasons) {
  json j = base_scenario();
  j["script"] = {enroll(0, "alice"),
                 {{"t", 0.5}, {"event", "rtbf"}, {"client", "client"}, {"subject", "alice"}},
                 train_event(1, {"alice"})};
  auto r = run(j);
  const auto& round = only_round(r);
  EXPECT_EQ(round.at("status"), "aborted");
  EXPECT_EQ(round.at("report").at("code"), "no-data");
  EXPECT_EQ(round.at("report").at("excluded")[0].at("reason"), "RTBF");
  for (const auto& m : r.trace) EXPECT_NE(m.type, MessageType::AS_DISPATCH);
}

TEST(Simnet, GcQueuesOfflineInstitutionAndRetries) {
  json j = base_scenario();
  j["script"] = {enroll(0, "alice"),
                 {{"t", 1.0}, {"event", "rtbf"}, {"client", "client"}, {"subject", "alice"}},
                 {{"t", 1.5}, {"event", "fault"}, {"node", "inst-2"}, {"fault", "offline"}, {"duration", 10}},
                 {{"t", 2.0}, {"event", "gc"}, {"client", "client"}},
                 {{"t", 20.0}, {"event", "gc"}, {"client", "client"}}};
  auto r = run(j);
  const auto& history = r.final_state.at("vault").at("gc_history");
  ASSERT_EQ(history.size(), 2u);
  EXPECT_EQ(history[0].at("queued"), 1);
  EXPECT_EQ(history[0].at("acknowledged"), 5);
  EXPECT_EQ(history[1].at("queued"), 0);
  EXPECT_EQ(history[1].at("acknowledged"), 1);
  EXPECT_TRUE(r.holders.at(scenario_subject("alice")).empty());
  EXPECT_TRUE(r.final_state.at("vault").at("records")[0].at("pending_gc").empty());
}

TEST(Simnet, PeriodicGcRetriesWithoutRequest) {
  json j = base_scenario();
  j["gc_period_s"] = 5;
  j["script"] = {enroll(0, "alice"),
                 {{"t", 0.5}, {"event", "fault"}, {"node", "inst-4"}, {"fault", "offline"}, {"duration", 7}},
                 {{"t", 1.0}, {"event", "rtbf"}, {"client", "client"}, {"subject", "alice"}}};
  auto r = run(j);
  EXPECT_TRUE(r.holders.at(scenario_subject("alice")).empty());
  EXPECT_GE(r.final_state.at("vault").at("gc_history").size(), 2u);
}

TEST(Simnet, SlowWorkstationIsReplaced) {
  json j = base_scenario();
  j["faults"] = {{{"node", "ws-0"}, {"fault", "slow"}, {"factor", 10}}};
  j["script"] = {enroll(0, "alice"), train_event(1, {"alice"})};
  auto r = run(j);
  const auto& round = only_round(r);
  ASSERT_EQ(round.at("status"), "completed") << round.dump(2);
  ASSERT_FALSE(round.at("dropped").empty());
  EXPECT_EQ(round.at("dropped")[0].at("node"), "ws-0");
  for (const auto& n : round.at("assignment")) EXPECT_NE(n, "ws-0");
  EXPECT_EQ(r.final_state.at("orchestrator").at("fairness").at("ws-0"), 1);
  EXPECT_TRUE(conservation_violations(r).empty());
  EXPECT_TRUE(lateral_workstation_links(r).empty());
}

TEST(Simnet, SilentWorkstationIsDroppedOnHeartbeat) {
  json j = base_scenario();
  // Long expected runtime, so only the missed heartbeats can trigger the drop.
  for (auto& n : j["nodes"])
    if (n["role"] == "workstation") n["profile"]["compute_rate"] = 0.1;
  j["round"]["deadline_s"] = 60;
  j["script"] = {enroll(0, "alice"),
                 {{"t", 1.0}, {"event", "fault"}, {"node", "ws-1"}, {"fault", "offline"}, {"duration", 100}},
                 train_event(1, {"alice"})};
  auto r = run(j);
  const auto& round = only_round(r);
  ASSERT_EQ(round.at("status"), "completed") << round.dump(2);
  bool heartbeat_drop = false;
  for (const auto& d : round.at("dropped"))
    if (d.at("node") == "ws-1") heartbeat_drop = d.at("reason") == "heartbeat";
  EXPECT_TRUE(heartbeat_drop) << round.dump(2);
}

TEST(Simnet, LossyVaultAbortsWithDispatchTimeout) {
  json j = base_scenario();
  j["round"]["deadline_s"] = 10;
  j["faults"] = {{{"node", "vault"}, {"fault", "drop_messages"}, {"p", 1.0}}};
  j["script"] = {enroll(0, "alice"), train_event(1, {"alice"})};
  auto r = run(j);
  const auto& round = only_round(r);
  EXPECT_EQ(round.at("status"), "aborted");
  EXPECT_EQ(round.at("abort_reason"), "dispatch-timeout");
  const auto& inbox = r.final_state.at("clients").at("client");
  ASSERT_EQ(inbox.size(), 1u);
  EXPECT_EQ(inbox[0].at("type"), "ERROR");
  EXPECT_NEAR(inbox[0].at("t").get<double>(), 11.0, 0.1);
}

TEST(Simnet, DeadlineTooShortFailsFast) {
  json j = base_scenario();
  j["round"]["n_p"] = 6;
  j["script"] = {enroll(0, "alice"), train_event(1, {"alice"})};
  j["script"][1]["round"] = {{"deadline_s", 0.5}};
  auto r = run(j);
  const auto& inbox = r.final_state.at("clients").at("client");
  ASSERT_EQ(inbox.size(), 1u);
  EXPECT_EQ(inbox[0].at("payload").at("code"), "insufficient-capacity");
}

TEST(Simnet, OfflineDestinationProducesUnreachable) {
  json j = base_scenario();
  j["faults"] = {{{"node", "inst-0"}, {"fault", "offline"}}};
  j["script"] = {{{"t", 0.0}, {"event", "send"}, {"src", "client"}, {"dst", "inst-0"}, {"type", "GC_DELETE"},
                  {"payload", {{"subject", scenario_subject("x").str()}}}}};
  auto r = run(j);
  ASSERT_EQ(r.trace.size(), 2u);
  EXPECT_EQ(r.trace[1].src, kNetworkNode);
  EXPECT_EQ(r.trace[1].payload.at("code"), "unreachable");
  EXPECT_EQ(r.trace[1].payload.at("in_reply_to"), r.trace[0].msg_id);
}

TEST(Simnet, BadScenariosAreConfigErrors) {
  auto code_of = [](const json& j) {
    try {
      Scenario::from_json(j);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io;
  };
  json contradictory = base_scenario();
  contradictory["faults"] = {{{"node", "ws-0"}, {"fault", "offline"}, {"start", 0}, {"end", 5}},
                             {{"node", "ws-0"}, {"fault", "slow"}, {"factor", 2}, {"start", 4}, {"end", 9}}};
  EXPECT_EQ(code_of(contradictory), ErrorCode::config);

  json disjoint = contradictory;
  disjoint["faults"][1]["start"] = 5;
  EXPECT_NO_THROW(Scenario::from_json(disjoint));

  json unknown = base_scenario();
  unknown["script"] = {train_event(0, {"a"})};
  unknown["script"][0]["client"] = "ghost";
  EXPECT_EQ(code_of(unknown), ErrorCode::config);

  json bad_event = base_scenario();
  bad_event["script"] = {{{"t", 0}, {"event", "explode"}}};
  EXPECT_EQ(code_of(bad_event), ErrorCode::config);

  json dup = base_scenario();
  dup["nodes"].push_back({{"id", "vault"}, {"role", "client"}});
  EXPECT_EQ(code_of(dup), ErrorCode::config);
}

TEST(Simnet, TraceRoundTripsThroughJson) {
  json j = base_scenario();
  j["script"] = {enroll(0, "alice"), train_event(1, {"alice"})};
  auto r = run(j);
  ASSERT_FALSE(r.trace.empty());
  for (const auto& m : r.trace) {
    auto back = SimMessage::from_json(m.to_json());
    EXPECT_EQ(back.msg_id, m.msg_id);
    EXPECT_EQ(back.type, m.type);
    EXPECT_EQ(back.sim_time, m.sim_time);
    EXPECT_EQ(back.payload, m.payload);
  }
}
