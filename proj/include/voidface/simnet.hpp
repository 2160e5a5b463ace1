#pragma once

// Deterministic discrete-event simulation of the vault, storage
// institutions, training workstations and the orchestrator.
//
// Time is kept in integer microseconds. Every message is recorded in the
// trace with its send and arrival times; a message lost to a drop fault is
// recorded with dropped = true and never delivered.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "voidface/orchestrator.hpp"
#include "voidface/vss.hpp"

namespace voidface::sim {

using NodeId = std::string;
using SimTime = std::int64_t;  // microseconds

inline constexpr const char* kNetworkNode = "network";

SimTime from_seconds(double s);
double to_seconds(SimTime t);

enum class MessageType {
  TRAIN_REQUEST,
  AS_VALIDATE,
  AS_DISPATCH,
  PS_FETCH,
  PS_RESPONSE,
  RTBF_REQUEST,
  GC_SCAN,
  GC_DELETE,
  TRAIN_PATCH,
  TRAIN_RESULT,
  ACK,
  ERROR,
};
std::string_view to_string(MessageType t);
MessageType parse_message_type(std::string_view s);

struct SimMessage {
  std::uint64_t msg_id = 0;
  NodeId src;
  NodeId dst;
  MessageType type = MessageType::ACK;
  nlohmann::json payload;
  SimTime sent_at = 0;
  SimTime sim_time = 0;  // arrival
  bool dropped = false;

  nlohmann::json to_json() const;
  static SimMessage from_json(const nlohmann::json& j);
};

enum class NodeRole { vault, institution, workstation, orchestrator, client };
std::string_view to_string(NodeRole r);

struct NodeSpec {
  NodeId id;
  NodeRole role = NodeRole::client;
  orch::NodeProfile profile;  // used for workstations
  double latency_ms = 1.0;    // access latency, summed when no explicit link
  double service_ms = 1.0;    // per handled message
};

struct LinkSpec {
  NodeId a, b;
  double latency_ms = 1.0;
};

enum class FaultKind { offline, slow, drop_messages };
std::string_view to_string(FaultKind k);

struct Fault {
  NodeId node;
  FaultKind kind = FaultKind::offline;
  double factor = 1.0;       // slow
  double probability = 0.0;  // drop_messages
  std::optional<NodeId> peer;  // drop_messages: only traffic with this node
  SimTime start = 0;
  SimTime end = 0;  // exclusive

  bool active(SimTime t) const { return t >= start && t < end; }
  nlohmann::json to_json() const;
};

struct ScriptEvent {
  SimTime t = 0;
  std::string event;  // enroll | train | rtbf | gc | fault | send
  nlohmann::json body;
};

struct Scenario {
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  std::vector<Fault> faults;
  std::vector<ScriptEvent> script;
  orch::RoundConfig round;
  std::uint16_t patch_size = 96;
  double gc_timeout_s = 2.0;
  double gc_period_s = 0;  // 0: GC only on request

  // Config error for unknown nodes, bad roles or contradictory faults.
  static Scenario from_json(const nlohmann::json& j);
  void validate() const;
  const NodeSpec& node(const NodeId& id) const;
  std::vector<NodeId> ids_with_role(NodeRole r) const;
};

// Subject ids in scenarios are UUID strings or free names; names map to a
// fixed id derived from the name.
SubjectId scenario_subject(const std::string& text);

// What the simulator knows that no node does: the enrolled patches and
// shares, for audits.
struct SubjectTruth {
  std::vector<vss::PatchImage> patches;
  vss::ShareGrid auth;
  std::vector<vss::ShareGrid> privates;
  dist::PlacementPlan plan;
  std::vector<NodeId> institutions;  // plan institution k -> node
};

struct SimResult {
  std::vector<SimMessage> trace;
  nlohmann::json final_state;
  std::map<SubjectId, SubjectTruth> truth;
  SimTime end_time = 0;  // last delivery, handling or send; idle timers do not count

  std::map<NodeId, NodeRole> roles;
  // Per enrolled subject, the places still holding a byte-exact copy of one
  // of its shares when the run ended (vault, stores, workstation buffers).
  std::map<SubjectId, std::vector<std::string>> holders;

  std::string trace_jsonl() const;
  std::string trace_hash() const;  // sha256 hex of trace_jsonl()
};

SimResult run_scenario(const Scenario& scenario, std::uint64_t seed);

// Undirected link.
using Link = std::pair<NodeId, NodeId>;
Link make_link(NodeId a, NodeId b);

struct PatchVerdict {
  SubjectId subject;
  std::uint8_t patch_index = 0;
  bool reconstructable = false;
  bool verified = false;  // XOR of captured grids equals the true patch
};

struct WiretapObservation {
  std::set<Link> tapped;
  std::map<Link, std::size_t> captured_bytes;
  std::vector<PatchVerdict> verdicts;  // one per (subject, patch) seen on the taps

  std::size_t reconstructable_count() const;
  nlohmann::json to_json() const;
};

WiretapObservation wiretap_audit(const SimResult& result, const std::set<Link>& tapped);

// Workstation pairs that exchanged messages.
std::vector<Link> lateral_workstation_links(const SimResult& result);

// Links that alone yield a qualified set; empty when every link is safe.
std::vector<Link> unsafe_single_links(const SimResult& result);

// PS_FETCH messages that were delivered but not answered exactly once.
std::vector<std::uint64_t> conservation_violations(const SimResult& result);

}  // namespace voidface::sim
