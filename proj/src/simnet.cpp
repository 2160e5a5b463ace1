#include "voidface/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <queue>
#include <sstream>

#include <sodium.h>

#include "voidface/bridge.hpp"
#include "voidface/patch_pipeline.hpp"
#include "voidface/secure_buffer.hpp"
#include "voidface/share_format.hpp"
#include "voidface/synthetic.hpp"
#include "voidface/trainer.hpp"
#include "voidface/vault.hpp"

namespace voidface::sim {

using nlohmann::json;

SimTime from_seconds(double s) { return static_cast<SimTime>(std::llround(s * 1e6)); }
double to_seconds(SimTime t) { return static_cast<double>(t) / 1e6; }

namespace {

constexpr std::pair<MessageType, std::string_view> kTypeNames[] = {
    {MessageType::TRAIN_REQUEST, "TRAIN_REQUEST"}, {MessageType::AS_VALIDATE, "AS_VALIDATE"},
    {MessageType::AS_DISPATCH, "AS_DISPATCH"},     {MessageType::PS_FETCH, "PS_FETCH"},
    {MessageType::PS_RESPONSE, "PS_RESPONSE"},     {MessageType::RTBF_REQUEST, "RTBF_REQUEST"},
    {MessageType::GC_SCAN, "GC_SCAN"},             {MessageType::GC_DELETE, "GC_DELETE"},
    {MessageType::TRAIN_PATCH, "TRAIN_PATCH"},     {MessageType::TRAIN_RESULT, "TRAIN_RESULT"},
    {MessageType::ACK, "ACK"},                     {MessageType::ERROR, "ERROR"},
};

}  // namespace

std::string_view to_string(MessageType t) {
  for (const auto& [k, v] : kTypeNames)
    if (k == t) return v;
  return "UNKNOWN";
}

MessageType parse_message_type(std::string_view s) {
  for (const auto& [k, v] : kTypeNames)
    if (v == s) return k;
  fail(ErrorCode::config, "unknown message type '" + std::string(s) + "'");
}

json SimMessage::to_json() const {
  return {{"msg_id", msg_id},
          {"src", src},
          {"dst", dst},
          {"type", to_string(type)},
          {"payload", payload},
          {"sent_at", to_seconds(sent_at)},
          {"sim_time", to_seconds(sim_time)},
          {"dropped", dropped}};
}

SimMessage SimMessage::from_json(const json& j) {
  SimMessage m;
  m.msg_id = j.at("msg_id");
  m.src = j.at("src");
  m.dst = j.at("dst");
  m.type = parse_message_type(j.at("type").get<std::string>());
  m.payload = j.at("payload");
  m.sent_at = from_seconds(j.at("sent_at"));
  m.sim_time = from_seconds(j.at("sim_time"));
  m.dropped = j.at("dropped");
  return m;
}

std::string_view to_string(NodeRole r) {
  switch (r) {
    case NodeRole::vault: return "vault";
    case NodeRole::institution: return "institution";
    case NodeRole::workstation: return "workstation";
    case NodeRole::orchestrator: return "orchestrator";
    case NodeRole::client: return "client";
  }
  return "unknown";
}

namespace {

NodeRole parse_role(const std::string& s) {
  for (auto r : {NodeRole::vault, NodeRole::institution, NodeRole::workstation,
                 NodeRole::orchestrator, NodeRole::client})
    if (to_string(r) == s) return r;
  fail(ErrorCode::config, "unknown node role '" + s + "'");
}

}  // namespace

std::string_view to_string(FaultKind k) {
  switch (k) {
    case FaultKind::offline: return "offline";
    case FaultKind::slow: return "slow";
    case FaultKind::drop_messages: return "drop_messages";
  }
  return "unknown";
}

json Fault::to_json() const {
  json j = {{"node", node},
            {"fault", to_string(kind)},
            {"start", to_seconds(start)},
            {"end", to_seconds(end)}};
  if (kind == FaultKind::slow) j["factor"] = factor;
  if (kind == FaultKind::drop_messages) j["p"] = probability;
  if (peer) j["peer"] = *peer;
  return j;
}

namespace {

Fault parse_fault(const json& j, SimTime default_start) {
  Fault f;
  f.node = j.at("node").get<std::string>();
  const std::string kind = j.at("fault");
  if (kind == "offline") f.kind = FaultKind::offline;
  else if (kind == "slow") f.kind = FaultKind::slow;
  else if (kind == "drop_messages") f.kind = FaultKind::drop_messages;
  else fail(ErrorCode::config, "unknown fault '" + kind + "'");
  f.factor = j.value("factor", 1.0);
  f.probability = j.value("p", 0.0);
  if (j.contains("peer")) f.peer = j.at("peer").get<std::string>();
  f.start = j.contains("start") ? from_seconds(j.at("start")) : default_start;
  if (j.contains("end")) f.end = from_seconds(j.at("end"));
  else if (j.contains("duration")) f.end = f.start + from_seconds(j.at("duration"));
  else f.end = std::numeric_limits<SimTime>::max();
  if (f.end <= f.start) fail(ErrorCode::config, "fault window on " + f.node + " is empty");
  if (f.kind == FaultKind::slow && !(f.factor >= 1.0))
    fail(ErrorCode::config, "slow factor must be >= 1");
  if (f.kind == FaultKind::drop_messages && !(f.probability >= 0 && f.probability <= 1))
    fail(ErrorCode::config, "drop probability outside [0, 1]");
  return f;
}

bool contradicts(const Fault& a, const Fault& b) {
  if (a.node != b.node) return false;
  if (a.end <= b.start || b.end <= a.start) return false;
  if (a.kind != b.kind) {
    // Lossy links on a node that is otherwise healthy or slow are fine.
    const bool drop_a = a.kind == FaultKind::drop_messages, drop_b = b.kind == FaultKind::drop_messages;
    return !(drop_a != drop_b && (a.kind == FaultKind::slow || b.kind == FaultKind::slow));
  }
  if (a.kind == FaultKind::slow) return a.factor != b.factor;
  if (a.kind == FaultKind::drop_messages) return a.peer == b.peer && a.probability != b.probability;
  return false;
}

}  // namespace

Scenario Scenario::from_json(const json& j) {
  Scenario s;
  try {
    for (const auto& n : j.at("nodes")) {
      NodeSpec spec;
      spec.id = n.at("id").get<std::string>();
      spec.role = parse_role(n.at("role").get<std::string>());
      spec.latency_ms = n.value("latency_ms", 1.0);
      spec.service_ms = n.value("service_ms", 1.0);
      json prof = n.value("profile", json::object());
      prof["id"] = spec.id;
      prof["role"] = spec.role == NodeRole::workstation ? "workstation" : "institution";
      spec.profile = orch::NodeProfile::from_json(prof);
      s.nodes.push_back(std::move(spec));
    }
    for (const auto& l : j.value("links", json::array()))
      s.links.push_back({l.at("a"), l.at("b"), l.value("latency_ms", 1.0)});
    for (const auto& f : j.value("faults", json::array())) s.faults.push_back(parse_fault(f, 0));
    if (j.contains("round")) s.round = orch::RoundConfig::from_json(j.at("round"));
    s.patch_size = j.value("patch_size", s.patch_size);
    s.gc_timeout_s = j.value("gc_timeout_s", s.gc_timeout_s);
    s.gc_period_s = j.value("gc_period_s", s.gc_period_s);
    for (const auto& e : j.value("script", json::array())) {
      ScriptEvent ev;
      ev.t = from_seconds(e.at("t"));
      ev.event = e.at("event");
      ev.body = e;
      if (ev.event == "fault") s.faults.push_back(parse_fault(e, ev.t));
      s.script.push_back(std::move(ev));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::config, std::string("bad scenario: ") + e.what());
  }
  std::stable_sort(s.script.begin(), s.script.end(),
                   [](const ScriptEvent& a, const ScriptEvent& b) { return a.t < b.t; });
  s.validate();
  return s;
}

const NodeSpec& Scenario::node(const NodeId& id) const {
  for (const auto& n : nodes)
    if (n.id == id) return n;
  fail(ErrorCode::config, "scenario references unknown node '" + id + "'");
}

std::vector<NodeId> Scenario::ids_with_role(NodeRole r) const {
  std::vector<NodeId> out;
  for (const auto& n : nodes)
    if (n.role == r) out.push_back(n.id);
  return out;
}

void Scenario::validate() const {
  std::set<NodeId> ids;
  for (const auto& n : nodes) {
    if (n.id == kNetworkNode) fail(ErrorCode::config, "node id 'network' is reserved");
    if (!ids.insert(n.id).second) fail(ErrorCode::config, "duplicate node id " + n.id);
    if (n.latency_ms < 0 || n.service_ms < 0) fail(ErrorCode::config, "negative latency on " + n.id);
  }
  for (const auto& l : links) {
    node(l.a);
    node(l.b);
    if (l.latency_ms < 0) fail(ErrorCode::config, "negative link latency");
  }
  if (ids_with_role(NodeRole::vault).size() > 1) fail(ErrorCode::config, "more than one vault");
  if (ids_with_role(NodeRole::orchestrator).size() > 1)
    fail(ErrorCode::config, "more than one orchestrator");
  for (std::size_t i = 0; i < faults.size(); ++i) {
    node(faults[i].node);
    if (faults[i].peer) node(*faults[i].peer);
    for (std::size_t k = i + 1; k < faults.size(); ++k)
      if (contradicts(faults[i], faults[k]))
        fail(ErrorCode::config, "contradictory overlapping faults on " + faults[i].node);
  }
  auto need_role = [&](const NodeId& id, NodeRole r) {
    if (node(id).role != r)
      fail(ErrorCode::config, "node " + id + " is not a " + std::string(to_string(r)));
  };
  for (const auto& ev : script) {
    const auto& b = ev.body;
    if (ev.event == "enroll") {
      if (ids_with_role(NodeRole::vault).empty()) fail(ErrorCode::config, "enroll needs a vault");
      for (const auto& i : b.value("institutions", json::array())) need_role(i, NodeRole::institution);
    } else if (ev.event == "train") {
      need_role(b.at("client"), NodeRole::client);
      if (ids_with_role(NodeRole::orchestrator).empty() || ids_with_role(NodeRole::vault).empty())
        fail(ErrorCode::config, "train needs an orchestrator and a vault");
      if (b.contains("round")) orch::RoundConfig::from_json(b.at("round"));
    } else if (ev.event == "rtbf" || ev.event == "gc") {
      need_role(b.at("client"), NodeRole::client);
      if (ids_with_role(NodeRole::vault).empty()) fail(ErrorCode::config, ev.event + " needs a vault");
    } else if (ev.event == "send") {
      node(b.at("src"));
      node(b.at("dst"));
      if (b.at("src") == b.at("dst")) fail(ErrorCode::config, "send from a node to itself");
      parse_message_type(b.at("type").get<std::string>());
    } else if (ev.event != "fault") {
      fail(ErrorCode::config, "unknown script event '" + ev.event + "'");
    }
  }
}

SubjectId scenario_subject(const std::string& text) {
  if (auto id = SubjectId::try_parse(text)) return *id;
  std::array<Byte, 16> b{};
  crypto_generichash(b.data(), b.size(), reinterpret_cast<const unsigned char*>(text.data()),
                     text.size(), nullptr, 0);
  b[6] = static_cast<Byte>((b[6] & 0x0F) | 0x40);
  b[8] = static_cast<Byte>((b[8] & 0x3F) | 0x80);
  return SubjectId(b);
}

std::string SimResult::trace_jsonl() const {
  std::string out;
  for (const auto& m : trace) out += m.to_json().dump() + "\n";
  return out;
}

std::string SimResult::trace_hash() const {
  const std::string text = trace_jsonl();
  unsigned char h[crypto_hash_sha256_BYTES];
  crypto_hash_sha256(h, reinterpret_cast<const unsigned char*>(text.data()), text.size());
  char hex[2 * crypto_hash_sha256_BYTES + 1];
  sodium_bin2hex(hex, sizeof hex, h, sizeof h);
  return hex;
}

namespace {

std::string grid_b64(const vss::ShareGrid& g) { return bridge::base64_encode(share_format::encode(g)); }

vss::ShareGrid grid_from_b64(const json& v) {
  auto bytes = bridge::base64_decode(v.get<std::string>());
  auto g = share_format::decode(bytes);
  secure_zero(bytes);
  return g;
}

std::string sha256_hex(std::span<const Byte> data) {
  unsigned char h[crypto_hash_sha256_BYTES];
  crypto_hash_sha256(h, data.data(), data.size());
  char hex[2 * crypto_hash_sha256_BYTES + 1];
  sodium_bin2hex(hex, sizeof hex, h, sizeof h);
  return hex;
}

struct Event {
  SimTime t;
  std::uint64_t seq;
  NodeId owner;  // empty: not tied to a node
  std::function<void()> fn;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    return a.t != b.t ? a.t > b.t : a.seq > b.seq;
  }
};

using GridKey = std::tuple<SubjectId, std::uint8_t, std::uint8_t>;  // subject, patch, subgrid

struct InstitutionState {
  std::map<GridKey, vss::ShareGrid> store;
};

struct WsHandle {
  SubjectId subject;
  vss::ShareGrid auth;
  std::vector<dist::PlacementEntry> entries;
};

struct WsTask {
  std::uint8_t patch_index = 0;
  NodeId orchestrator;
  bool have_task = false;
  bool have_as = false;
  bool started = false;
  bool done = false;
  double heartbeat_s = 5;
  SimTime give_up = std::numeric_limits<SimTime>::max();
  std::vector<WsHandle> handles;
  std::vector<std::string> status;  // per handle
  std::vector<std::map<std::uint8_t, vss::ShareGrid>> fetched;
  std::map<std::uint64_t, std::pair<std::size_t, std::uint8_t>> outstanding;
  std::vector<std::optional<train::ReconstructedPatch>> patches;
};

struct WorkstationState {
  BufferRegistry registry;
  std::map<std::uint64_t, WsTask> tasks;
  std::map<std::string, std::string> digests;  // "<subject>/p<i>" -> sha256 of the patch
};

struct SlotState {
  NodeId node;
  SimTime dispatched = -1;
  SimTime last_heartbeat = -1;
  bool done = false;
  json results;
};

struct RoundState {
  orch::TrainingRound round;
  orch::RoundConfig cfg;
  orch::Workload workload;
  NodeId client;
  std::string requester;
  std::vector<SubjectId> requested;
  json excluded = json::array();
  std::vector<SlotState> slots;
  bool validated = false;
  json report;
};

struct OrchestratorState {
  std::vector<orch::NodeProfile> profiles;
  orch::FairnessLedger fairness;
  std::map<std::uint64_t, RoundState> rounds;
  std::uint64_t next_round = 1;
};

struct GcPass {
  NodeId requester;  // empty for timer-driven passes
  vault::GcReport report;
  std::map<std::uint64_t, std::size_t> outstanding;
  bool open = false;
};

class Simulator {
 public:
  Simulator(const Scenario& s, std::uint64_t seed)
      : sc_(s), rng_(derive_seed(seed, 1)), enroll_seed_(derive_seed(seed, 2)) {
    for (const auto& n : sc_.nodes) {
      roles_[n.id] = n.role;
      latency_[n.id] = n.latency_ms;
      if (n.role == NodeRole::institution) {
        institution_ids_.push_back(n.id);
        institutions_[n.id];
      } else if (n.role == NodeRole::workstation) {
        workstations_[n.id] = std::make_unique<WorkstationState>();
        orch_.profiles.push_back(n.profile);
      } else if (n.role == NodeRole::vault) {
        vault_id_ = n.id;
      } else if (n.role == NodeRole::orchestrator) {
        orch_id_ = n.id;
      } else {
        clients_[n.id] = json::array();
      }
    }
    vault_ = std::make_unique<vault::Vault>([this] { return now_ / 1000; });
  }

  SimResult run() {
    for (const auto& ev : sc_.script)
      schedule(ev.t, "", [this, &ev] { script(ev); });
    while (!queue_.empty()) {
      Event e = queue_.top();
      queue_.pop();
      now_ = e.t;
      if (!e.owner.empty() && offline(e.owner, now_)) continue;
      const std::size_t sent = trace_.size();
      e.fn();
      if (trace_.size() != sent) last_active_ = now_;
    }
    now_ = last_active_;
    SimResult r;
    r.trace = std::move(trace_);
    r.end_time = now_;
    r.roles = roles_;
    r.final_state = final_state();
    r.holders = holders();
    r.truth = std::move(truth_);
    return r;
  }

 private:
  // ---- core ----------------------------------------------------------------

  void schedule(SimTime at, NodeId owner, std::function<void()> fn) {
    queue_.push({at, seq_++, std::move(owner), std::move(fn)});
  }

  SimTime latency(const NodeId& a, const NodeId& b) const {
    for (const auto& l : sc_.links)
      if ((l.a == a && l.b == b) || (l.a == b && l.b == a)) return from_seconds(l.latency_ms / 1000);
    return from_seconds((latency_.at(a) + latency_.at(b)) / 1000);
  }

  bool offline(const NodeId& n, SimTime t) const {
    for (const auto& f : sc_.faults)
      if (f.node == n && f.kind == FaultKind::offline && f.active(t)) return true;
    return false;
  }

  double slow_factor(const NodeId& n, SimTime t) const {
    for (const auto& f : sc_.faults)
      if (f.node == n && f.kind == FaultKind::slow && f.active(t)) return f.factor;
    return 1.0;
  }

  double drop_probability(const NodeId& src, const NodeId& dst, SimTime t) const {
    double keep = 1.0;
    for (const auto& f : sc_.faults) {
      if (f.kind != FaultKind::drop_messages || !f.active(t)) continue;
      const bool on_src = f.node == src && (!f.peer || *f.peer == dst);
      const bool on_dst = f.node == dst && (!f.peer || *f.peer == src);
      if (on_src || on_dst) keep *= 1.0 - f.probability;
    }
    return 1.0 - keep;
  }

  std::uint64_t send(const NodeId& src, const NodeId& dst, MessageType type, json payload,
                     std::optional<SimTime> lat = std::nullopt) {
    SimMessage m;
    m.msg_id = next_msg_++;
    m.src = src;
    m.dst = dst;
    m.type = type;
    m.payload = std::move(payload);
    m.sent_at = now_;
    m.sim_time = now_ + (lat ? *lat : latency(src, dst));
    const double p = drop_probability(src, dst, now_);
    if (p > 0 && rng_.uniform_unit() < p) m.dropped = true;
    trace_.push_back(m);
    if (!m.dropped) schedule(m.sim_time, "", [this, m] { arrive(m); });
    return m.msg_id;
  }

  void arrive(const SimMessage& m) {
    last_active_ = now_;
    if (offline(m.dst, now_)) {
      if (m.src != kNetworkNode)
        send(kNetworkNode, m.src, MessageType::ERROR,
             {{"code", "unreachable"}, {"in_reply_to", m.msg_id}, {"node", m.dst}},
             latency(m.dst, m.src));
      return;
    }
    const auto& spec = sc_.node(m.dst);
    const SimTime service = from_seconds(spec.service_ms / 1000 * slow_factor(m.dst, now_));
    schedule(now_ + service, m.dst, [this, m] { handle(m); });
  }

  void handle(const SimMessage& m) {
    last_active_ = now_;
    switch (roles_.at(m.dst)) {
      case NodeRole::vault: return vault_handle(m);
      case NodeRole::institution: return institution_handle(m);
      case NodeRole::workstation: return workstation_handle(m);
      case NodeRole::orchestrator: return orchestrator_handle(m);
      case NodeRole::client:
        clients_[m.dst].push_back({{"t", to_seconds(now_)},
                                   {"from", m.src},
                                   {"type", to_string(m.type)},
                                   {"payload", m.payload}});
        return;
    }
  }

  // ---- script ----------------------------------------------------------------

  void script(const ScriptEvent& ev) {
    last_active_ = now_;
    const auto& b = ev.body;
    if (ev.event == "enroll") {
      enroll(b);
    } else if (ev.event == "train") {
      json subjects = json::array();
      for (const auto& s : b.at("subjects")) subjects.push_back(scenario_subject(s).str());
      json payload = {{"requester", b.value("requester", std::string("lab"))}, {"subjects", subjects}};
      if (b.contains("round")) payload["round"] = b.at("round");
      send(b.at("client"), orch_id_, MessageType::TRAIN_REQUEST, payload);
    } else if (ev.event == "rtbf") {
      send(b.at("client"), vault_id_, MessageType::RTBF_REQUEST,
           {{"subject", scenario_subject(b.at("subject")).str()}});
    } else if (ev.event == "gc") {
      send(b.at("client"), vault_id_, MessageType::GC_SCAN, json::object());
    } else if (ev.event == "send") {
      send(b.at("src"), b.at("dst"), parse_message_type(b.at("type").get<std::string>()),
           b.value("payload", json::object()));
    }
  }

  // Setup step: shares are produced and placed directly, without traffic.
  void enroll(const json& b) {
    const SubjectId subject = scenario_subject(b.at("subject"));
    std::vector<NodeId> insts;
    for (const auto& i : b.value("institutions", json::array())) insts.push_back(i);
    if (insts.empty()) insts = institution_ids_;
    if (insts.empty()) fail(ErrorCode::config, "enroll without institutions");
    const std::uint64_t seed = b.value("seed", derive_seed(enroll_seed_, truth_.size()));
    SeededRandom rng(seed);

    auto bundle = patch::extract_patches(synthetic::face(static_cast<std::uint32_t>(seed % 9973)),
                                         synthetic::landmarks(), sc_.patch_size, subject);
    std::vector<vss::PatchImage> patches = bundle.patches;
    if (b.contains("patches")) patches.resize(b.at("patches").get<std::size_t>());
    auto shares = vss::share_patches(patches, subject, rng);
    auto plan = dist::plan_distribution(shares.privates, insts.size(), rng);

    std::vector<dist::PlacementEntry> entries;
    for (std::size_t k = 0; k < plan.assignments.size(); ++k) {
      const auto& a = plan.assignments[k];
      const NodeId& node = insts[a.institution];
      const auto global = static_cast<dist::InstitutionId>(
          std::find(institution_ids_.begin(), institution_ids_.end(), node) - institution_ids_.begin());
      entries.push_back({global, a.grid.patch_index, a.grid.subgrid_index, a.grid.subgrid_total});
      institutions_[node].store[{subject, a.grid.patch_index, a.grid.subgrid_index}] = a.grid;
    }
    std::set<std::string> allow;
    for (const auto& r : b.value("allow", json::array({"lab"}))) allow.insert(r.get<std::string>());
    vault_->register_subject(subject, shares.auth, entries, plan.share_count, allow);
    truth_[subject] = {patches, shares.auth, shares.privates, plan, insts};
  }

  // ---- vault ------------------------------------------------------------------

  void vault_handle(const SimMessage& m) {
    switch (m.type) {
      case MessageType::AS_VALIDATE: return vault_validate(m);
      case MessageType::RTBF_REQUEST: {
        const auto subject = SubjectId::parse(m.payload.at("subject").get<std::string>());
        try {
          const bool revoked = vault_->rtbf_revoke(subject);
          send(vault_id_, m.src, MessageType::ACK,
               {{"kind", "rtbf"}, {"in_reply_to", m.msg_id}, {"subject", subject.str()}, {"revoked", revoked}});
          if (sc_.gc_period_s > 0) schedule_gc_timer();
        } catch (const Error& e) {
          send(vault_id_, m.src, MessageType::ERROR,
               {{"kind", "rtbf"}, {"in_reply_to", m.msg_id}, {"code", to_string(e.code())}, {"reason", e.what()}});
        }
        return;
      }
      case MessageType::GC_SCAN: return gc_start(m.src, m.msg_id);
      case MessageType::ACK:
      case MessageType::ERROR: return gc_reply(m);
      default: return;
    }
  }

  void vault_validate(const SimMessage& m) {
    const auto& p = m.payload;
    std::vector<SubjectId> subjects;
    for (const auto& s : p.at("subjects")) subjects.push_back(SubjectId::parse(s.get<std::string>()));
    json base = {{"kind", "validation"}, {"in_reply_to", m.msg_id}, {"round_id", p.at("round_id")}};
    auto exclusions = [](const std::vector<vault::Exclusion>& ex) {
      json out = json::array();
      for (const auto& e : ex) out.push_back({{"subject", e.subject.str()}, {"reason", vault::to_string(e.reason)}});
      return out;
    };
    vault::ValidationResult res;
    try {
      res = vault_->validate_training_request(p.at("requester"), subjects);
    } catch (const vault::NoAuthorizedSubjects& e) {
      json err = base;
      err["code"] = to_string(e.code());
      err["reason"] = "no authorized subjects";
      err["excluded"] = exclusions(e.excluded());
      send(vault_id_, m.src, MessageType::ERROR, err);
      return;
    } catch (const Error& e) {
      json err = base;
      err["code"] = to_string(e.code());
      err["reason"] = e.what();
      send(vault_id_, m.src, MessageType::ERROR, err);
      return;
    }
    json authorized = json::array();
    for (const auto& h : res.authorized) authorized.push_back(h.subject.str());
    for (const auto& slot : p.at("slots")) {
      const std::uint8_t patch = slot.at("patch_index");
      json handles = json::array();
      for (const auto& h : res.authorized) {
        std::vector<dist::PlacementEntry> mine;
        for (const auto& e : h.placement)
          if (e.patch_index == patch) mine.push_back(e);
        handles.push_back({{"subject", h.subject.str()},
                           {"grid", grid_b64(h.auth)},
                           {"entries", dist::entries_to_json(mine)}});
      }
      send(vault_id_, slot.at("node"), MessageType::AS_DISPATCH,
           {{"round_id", p.at("round_id")}, {"patch_index", patch}, {"orchestrator", m.src}, {"handles", handles}});
    }
    json ack = base;
    ack["authorized"] = authorized;
    ack["excluded"] = exclusions(res.excluded);
    ack["slots"] = p.at("slots");
    send(vault_id_, m.src, MessageType::ACK, ack);
  }

  void gc_start(const NodeId& requester, std::uint64_t request_id) {
    if (gc_.open) {
      if (!requester.empty())
        send(vault_id_, requester, MessageType::ERROR,
             {{"kind", "gc"}, {"in_reply_to", request_id}, {"code", "conflict"}, {"reason", "GC pass in progress"}});
      return;
    }
    gc_ = GcPass{requester, {}, {}, true};
    gc_.report.timestamp = vault_->now();
    gc_request_ = request_id;
    for (const auto& [subject, inst] : vault_->pending_gc()) {
      gc_.report.items.push_back({subject, inst, false});
      const auto id = send(vault_id_, institution_ids_.at(inst), MessageType::GC_DELETE,
                           {{"subject", subject.str()}});
      gc_.outstanding[id] = gc_.report.items.size() - 1;
    }
    if (gc_.outstanding.empty()) return gc_finish();
    const std::uint64_t pass = ++gc_generation_;
    schedule(now_ + from_seconds(sc_.gc_timeout_s), vault_id_, [this, pass] {
      if (gc_.open && gc_generation_ == pass) gc_finish();
    });
  }

  void gc_reply(const SimMessage& m) {
    if (!gc_.open) return;
    auto it = gc_.outstanding.find(m.payload.value("in_reply_to", std::uint64_t{0}));
    if (it == gc_.outstanding.end()) return;
    auto& item = gc_.report.items[it->second];
    if (m.type == MessageType::ACK) {
      item.acknowledged = true;
      vault_->acknowledge_gc(item.subject, item.institution);
    }
    gc_.outstanding.erase(it);
    if (gc_.outstanding.empty()) gc_finish();
  }

  void gc_finish() {
    gc_.open = false;
    if (!gc_.report.items.empty()) vault_->record_gc_pass(gc_.report);
    if (!gc_.requester.empty()) {
      json r = gc_.report.to_json();
      r["kind"] = "gc";
      r["in_reply_to"] = gc_request_;
      send(vault_id_, gc_.requester, MessageType::ACK, r);
    }
    if (sc_.gc_period_s > 0 && !vault_->pending_gc().empty()) schedule_gc_timer();
  }

  void schedule_gc_timer() {
    if (gc_timer_armed_) return;
    gc_timer_armed_ = true;
    schedule(now_ + from_seconds(sc_.gc_period_s), "", [this] {
      gc_timer_armed_ = false;
      if (offline(vault_id_, now_)) return schedule_gc_timer();
      if (!vault_->pending_gc().empty()) gc_start("", 0);
    });
  }

  // ---- institutions -----------------------------------------------------------

  void institution_handle(const SimMessage& m) {
    auto& st = institutions_[m.dst];
    if (m.type == MessageType::PS_FETCH) {
      const auto subject = SubjectId::parse(m.payload.at("subject").get<std::string>());
      const std::uint8_t patch = m.payload.at("patch_index"), sub = m.payload.value("subgrid_index", 0);
      auto it = st.store.find({subject, patch, sub});
      if (it == st.store.end()) {
        send(m.dst, m.src, MessageType::ERROR,
             {{"in_reply_to", m.msg_id}, {"code", "not_found"}, {"subject", subject.str()}, {"patch_index", patch}});
        return;
      }
      json r = {{"in_reply_to", m.msg_id}, {"subject", subject.str()}, {"patch_index", patch},
                {"subgrid_index", sub}, {"grid", grid_b64(it->second)}};
      if (m.payload.contains("round_id")) r["round_id"] = m.payload.at("round_id");
      send(m.dst, m.src, MessageType::PS_RESPONSE, r);
    } else if (m.type == MessageType::GC_DELETE) {
      const auto subject = SubjectId::parse(m.payload.at("subject").get<std::string>());
      std::size_t deleted = 0;
      for (auto it = st.store.begin(); it != st.store.end();) {
        if (std::get<0>(it->first) == subject) {
          secure_zero(it->second.bytes);
          it = st.store.erase(it);
          ++deleted;
        } else {
          ++it;
        }
      }
      send(m.dst, m.src, MessageType::ACK,
           {{"kind", "gc_delete"}, {"in_reply_to", m.msg_id}, {"subject", subject.str()}, {"deleted", deleted}});
    }
  }

  // ---- workstations -----------------------------------------------------------

  void workstation_handle(const SimMessage& m) {
    auto& ws = *workstations_.at(m.dst);
    if (m.type == MessageType::TRAIN_PATCH || m.type == MessageType::AS_DISPATCH) {
      const std::uint64_t round = m.payload.at("round_id");
      auto& task = ws.tasks[round];
      if (task.done) return;
      task.patch_index = m.payload.at("patch_index");
      if (m.type == MessageType::TRAIN_PATCH) {
        if (task.have_task) return;
        task.have_task = true;
        task.orchestrator = m.src;
        task.heartbeat_s = m.payload.value("heartbeat_s", 5.0);
        task.give_up = now_ + from_seconds(m.payload.value("deadline_s", 60.0));
        heartbeat(m.dst, round);
      } else {
        if (task.have_as) return;
        task.have_as = true;
        if (task.orchestrator.empty()) task.orchestrator = m.payload.value("orchestrator", orch_id_);
        for (const auto& h : m.payload.at("handles"))
          task.handles.push_back({SubjectId::parse(h.at("subject").get<std::string>()),
                                  grid_from_b64(h.at("grid")), dist::entries_from_json(h.at("entries"))});
      }
      if (task.have_task && task.have_as && !task.started) ws_start(m.dst, round);
    } else if (m.type == MessageType::PS_RESPONSE || m.type == MessageType::ERROR) {
      const std::uint64_t reply_to = m.payload.value("in_reply_to", std::uint64_t{0});
      for (auto& [round, task] : ws.tasks) {
        auto it = task.outstanding.find(reply_to);
        if (it == task.outstanding.end()) continue;
        const auto [h, sub] = it->second;
        task.outstanding.erase(it);
        if (m.type == MessageType::PS_RESPONSE) {
          auto g = grid_from_b64(m.payload.at("grid"));
          if (g.subject == task.handles[h].subject) task.fetched[h][sub] = std::move(g);
          else task.status[h] = "incomplete_share";
        } else {
          task.status[h] = "incomplete_share";
        }
        if (task.outstanding.empty()) ws_reconstruct(m.dst, round);
        return;
      }
    }
  }

  void heartbeat(const NodeId& node, std::uint64_t round) {
    auto& task = workstations_.at(node)->tasks.at(round);
    schedule(now_ + from_seconds(task.heartbeat_s), node, [this, node, round] {
      auto& t = workstations_.at(node)->tasks.at(round);
      if (t.done) return;
      if (now_ >= t.give_up) return ws_abandon(node, round);
      const std::string phase = !t.have_as ? "waiting_as" : !t.outstanding.empty() ? "fetching" : "training";
      send(node, t.orchestrator, MessageType::ACK,
           {{"kind", "heartbeat"}, {"round_id", round}, {"patch_index", t.patch_index}, {"phase", phase}});
      heartbeat(node, round);
    });
  }

  // Past the round deadline nobody will take the result.
  void ws_abandon(const NodeId& node, std::uint64_t round) {
    auto& task = workstations_.at(node)->tasks.at(round);
    for (auto& p : task.patches)
      if (p) p->pixels.wipe();
    for (auto& f : task.fetched)
      for (auto& [sub, g] : f) secure_zero(g.bytes);
    for (auto& hd : task.handles) secure_zero(hd.auth.bytes);
    task.done = true;
  }

  void ws_start(const NodeId& node, std::uint64_t round) {
    auto& task = workstations_.at(node)->tasks.at(round);
    task.started = true;
    const std::size_t n = task.handles.size();
    task.status.assign(n, "pending");
    task.fetched.assign(n, {});
    task.patches.clear();
    task.patches.resize(n);
    for (std::size_t h = 0; h < n; ++h) {
      const auto& hd = task.handles[h];
      if (hd.entries.empty()) {
        task.status[h] = "unavailable";
        continue;
      }
      for (const auto& e : hd.entries) {
        const auto id = send(node, institution_ids_.at(e.institution), MessageType::PS_FETCH,
                             {{"round_id", round}, {"subject", hd.subject.str()},
                              {"patch_index", e.patch_index}, {"subgrid_index", e.subgrid_index}});
        task.outstanding[id] = {h, e.subgrid_index};
      }
    }
    if (task.outstanding.empty()) ws_reconstruct(node, round);
  }

  void ws_reconstruct(const NodeId& node, std::uint64_t round) {
    auto& ws = *workstations_.at(node);
    auto& task = ws.tasks.at(round);
    if (task.done) return;
    for (std::size_t h = 0; h < task.handles.size(); ++h) {
      if (task.status[h] != "pending") continue;
      const auto& hd = task.handles[h];
      std::vector<vss::ShareGrid> grids;
      for (auto& [sub, g] : task.fetched[h]) grids.push_back(std::move(g));
      task.fetched[h].clear();
      try {
        if (grids.size() != hd.entries.size()) fail(ErrorCode::incomplete_share, "missing grid");
        auto p = grids.size() == 1 && grids[0].role == vss::ShareRole::private_share
                     ? vss::reconstruct_patch(hd.auth, grids[0])
                     : vss::reconstruct_patch(hd.auth, grids);
        ws.digests[hd.subject.str() + "/p" + std::to_string(task.patch_index)] = sha256_hex(p.pixels);
        task.patches[h] = train::ReconstructedPatch{
            task.patch_index, p.dims,
            SensitiveBuffer(&ws.registry, hd.subject.str() + "/p" + std::to_string(task.patch_index),
                            std::move(p.pixels))};
        task.status[h] = "ok";
      } catch (const Error&) {
        task.status[h] = "incomplete_share";
      }
      for (auto& g : grids) secure_zero(g.bytes);
    }
    const auto& prof = sc_.node(node).profile;
    const auto w = orch::round_workload(task.handles.size(), {sc_.patch_size, sc_.patch_size, 3});
    const double secs = orch::estimate_seconds(prof, w) * slow_factor(node, now_);
    schedule(now_ + from_seconds(secs), node, [this, node, round] { ws_finish(node, round); });
  }

  void ws_finish(const NodeId& node, std::uint64_t round) {
    auto& task = workstations_.at(node)->tasks.at(round);
    if (task.done) return;
    train::StubTrainer stub;
    json results = json::array();
    for (std::size_t h = 0; h < task.handles.size(); ++h) {
      json r = {{"subject", task.handles[h].subject.str()}, {"status", task.status[h]}};
      if (task.patches[h]) {
        const auto& p = *task.patches[h];
        r["vector"] = stub.extract({task.handles[h].subject, p.patch_index, p.dims, p.pixels.view()});
        task.patches[h]->pixels.wipe();
      }
      results.push_back(r);
    }
    for (auto& hd : task.handles) secure_zero(hd.auth.bytes);
    task.done = true;
    send(node, task.orchestrator, MessageType::TRAIN_RESULT,
         {{"round_id", round}, {"patch_index", task.patch_index}, {"results", results}});
  }

  // ---- orchestrator -----------------------------------------------------------

  void orchestrator_handle(const SimMessage& m) {
    switch (m.type) {
      case MessageType::TRAIN_REQUEST: return orch_request(m);
      case MessageType::ACK:
        if (m.payload.value("kind", "") == "heartbeat") return orch_heartbeat(m);
        if (m.payload.value("kind", "") == "validation") return orch_validated(m);
        return;
      case MessageType::ERROR:
        if (m.payload.value("kind", "") == "validation") return orch_rejected(m);
        return;
      case MessageType::TRAIN_RESULT: return orch_result(m);
      default: return;
    }
  }

  void orch_request(const SimMessage& m) {
    const std::uint64_t id = orch_.next_round++;
    RoundState rs;
    rs.cfg = sc_.round;
    if (m.payload.contains("round")) {
      json merged = sc_.round.to_json();
      merged.update(m.payload.at("round"));
      rs.cfg = orch::RoundConfig::from_json(merged);
    }
    rs.client = m.src;
    rs.requester = m.payload.at("requester");
    for (const auto& s : m.payload.at("subjects")) rs.requested.push_back(SubjectId::parse(s.get<std::string>()));
    rs.round.round_id = id;
    rs.round.deadline = rs.cfg.deadline_s;
    rs.workload = orch::round_workload(rs.requested.size(), {sc_.patch_size, sc_.patch_size, 3});

    std::vector<orch::NodeProfile> available;
    for (const auto& p : orch_.profiles)
      if (p.availability_p >= 1.0 || rng_.uniform_unit() < p.availability_p) available.push_back(p);
    try {
      if (rs.requested.empty()) fail(ErrorCode::no_data, "training request names no subjects");
      auto sel = orch::select_nodes(available, rs.cfg.n_p, rs.workload, rs.cfg.deadline_s, &orch_.fairness);
      rs.round.assignment = sel.assignment;
      rs.round.expected = sel.estimates;
    } catch (const Error& e) {
      rs.round.status = orch::RoundStatus::aborted;
      rs.round.abort_reason = e.what();
      send(orch_id_, m.src, MessageType::ERROR,
           {{"kind", "train"}, {"round_id", id}, {"code", to_string(e.code())}, {"reason", e.what()}});
      orch_.rounds[id] = std::move(rs);
      return;
    }
    rs.round.status = orch::RoundStatus::running;
    rs.slots.resize(rs.cfg.n_p);
    json slots = json::array();
    for (std::size_t p = 0; p < rs.cfg.n_p; ++p) {
      rs.slots[p].node = rs.round.assignment[p];
      slots.push_back({{"patch_index", p}, {"node", rs.round.assignment[p]}});
    }
    json subjects = m.payload.at("subjects");
    orch_.rounds[id] = std::move(rs);
    send(orch_id_, vault_id_, MessageType::AS_VALIDATE,
         {{"round_id", id}, {"requester", m.payload.at("requester")}, {"subjects", subjects}, {"slots", slots}});
    schedule(now_ + from_seconds(orch_.rounds[id].cfg.deadline_s), orch_id_, [this, id] {
      auto& r = orch_.rounds.at(id);
      if (r.round.status == orch::RoundStatus::running)
        orch_abort(id, r.validated ? "deadline" : "dispatch-timeout");
    });
  }

  void orch_validated(const SimMessage& m) {
    const std::uint64_t id = m.payload.at("round_id");
    auto& rs = orch_.rounds.at(id);
    if (rs.round.status != orch::RoundStatus::running) return;
    if (!rs.validated) {
      rs.validated = true;
      rs.excluded = m.payload.at("excluded");
      for (const auto& s : m.payload.at("authorized")) rs.round.subjects.push_back(SubjectId::parse(s.get<std::string>()));
      straggler_check_later(id);
    }
    for (const auto& slot : m.payload.at("slots")) {
      const std::size_t p = slot.at("patch_index");
      auto& st = rs.slots.at(p);
      if (st.node != slot.at("node").get<std::string>() || st.done) continue;
      st.dispatched = now_;
      st.last_heartbeat = now_;
      send(orch_id_, st.node, MessageType::TRAIN_PATCH,
           {{"round_id", id}, {"patch_index", p}, {"expected_s", rs.round.expected[p]},
            {"heartbeat_s", rs.cfg.heartbeat_s}, {"deadline_s", rs.cfg.deadline_s}});
    }
  }

  void orch_rejected(const SimMessage& m) {
    const std::uint64_t id = m.payload.at("round_id");
    auto& rs = orch_.rounds.at(id);
    if (rs.round.status != orch::RoundStatus::running) return;
    if (m.payload.contains("excluded")) rs.excluded = m.payload.at("excluded");
    orch_abort(id, m.payload.value("reason", std::string("validation failed")),
               m.payload.value("code", std::string("no_data")));
  }

  void orch_abort(std::uint64_t id, const std::string& reason, const std::string& code = "aborted") {
    auto& rs = orch_.rounds.at(id);
    rs.round.status = orch::RoundStatus::aborted;
    rs.round.abort_reason = reason;
    rs.report = {{"kind", "train"}, {"round_id", id}, {"code", code}, {"reason", reason},
                 {"excluded", rs.excluded}, {"round", rs.round.to_json()}};
    send(orch_id_, rs.client, MessageType::ERROR, rs.report);
  }

  void orch_heartbeat(const SimMessage& m) {
    auto it = orch_.rounds.find(m.payload.at("round_id"));
    if (it == orch_.rounds.end()) return;
    for (auto& st : it->second.slots)
      if (st.node == m.src) st.last_heartbeat = now_;
  }

  void straggler_check_later(std::uint64_t id) {
    schedule(now_ + from_seconds(orch_.rounds.at(id).cfg.heartbeat_s), orch_id_, [this, id] {
      auto& rs = orch_.rounds.at(id);
      if (rs.round.status != orch::RoundStatus::running) return;
      std::map<orch::NodeId, orch::NodeObservation> obs;
      for (const auto& st : rs.slots)
        if (!st.done && st.dispatched >= 0)
          obs[st.node] = {to_seconds(now_ - st.dispatched), to_seconds(now_ - st.last_heartbeat)};
      const auto before = rs.round.assignment;
      orch::drop_stragglers(rs.round, obs, orch_.profiles, rs.workload, rs.cfg.policy(), orch_.fairness, rng_);
      if (rs.round.status == orch::RoundStatus::aborted) {
        orch_abort(id, rs.round.abort_reason);
        return;
      }
      json slots = json::array();
      for (std::size_t p = 0; p < before.size(); ++p)
        if (before[p] != rs.round.assignment[p]) {
          rs.slots[p] = SlotState{};
          rs.slots[p].node = rs.round.assignment[p];
          slots.push_back({{"patch_index", p}, {"node", rs.round.assignment[p]}});
        }
      if (!slots.empty()) {
        json subjects = json::array();
        for (const auto& s : rs.round.subjects) subjects.push_back(s.str());
        send(orch_id_, vault_id_, MessageType::AS_VALIDATE,
             {{"round_id", id}, {"requester", rs.requester}, {"subjects", subjects}, {"slots", slots}});
      }
      straggler_check_later(id);
    });
  }

  void orch_result(const SimMessage& m) {
    const std::uint64_t id = m.payload.at("round_id");
    auto it = orch_.rounds.find(id);
    if (it == orch_.rounds.end()) return;
    auto& rs = it->second;
    if (rs.round.status != orch::RoundStatus::running) return;
    const std::size_t p = m.payload.at("patch_index");
    if (p >= rs.slots.size() || rs.slots[p].node != m.src || rs.slots[p].done) return;
    rs.slots[p].done = true;
    rs.slots[p].results = m.payload.at("results");
    for (const auto& st : rs.slots)
      if (!st.done) return;
    orch_complete(id);
  }

  void orch_complete(std::uint64_t id) {
    auto& rs = orch_.rounds.at(id);
    train::StubTrainer stub;
    std::map<SubjectId, train::Embedding> embeddings;
    json failures = json::array();
    std::size_t trained = 0;
    for (const auto& subject : rs.round.subjects) {
      std::vector<train::Embedding> feats(rs.slots.size(), train::Embedding(train::kEmbeddingDim, 0.0f));
      for (std::size_t p = 0; p < rs.slots.size(); ++p) {
        std::string reason = "missing";
        for (const auto& r : rs.slots[p].results) {
          if (r.at("subject") != subject.str()) continue;
          reason = r.at("status");
          if (r.contains("vector")) feats[p] = r.at("vector").get<train::Embedding>();
        }
        if (reason == "ok") ++trained;
        else failures.push_back({{"subject", subject.str()}, {"patch_index", p}, {"reason", reason}});
      }
      embeddings[subject] = stub.aggregate(subject, feats);
    }
    rs.round.status = orch::RoundStatus::completed;
    json authorized = json::array();
    for (const auto& s : rs.round.subjects) authorized.push_back(s.str());
    rs.report = {{"kind", "train"}, {"round_id", id}, {"status", "completed"}, {"trainer", "stub"},
                 {"authorized", authorized}, {"excluded", rs.excluded}, {"patches_trained", trained},
                 {"failures", failures}, {"output_digest", train::digest_embeddings(embeddings)},
                 {"round", rs.round.to_json()}};
    send(orch_id_, rs.client, MessageType::ACK, rs.report);
  }

  // ---- results ----------------------------------------------------------------

  json final_state() const {
    json j;
    json recs = json::array();
    for (const auto& r : vault_->records()) {
      json pending = json::array();
      for (auto i : r.pending_gc) pending.push_back(institution_ids_.at(i));
      recs.push_back({{"subject", r.subject.str()},
                      {"active", r.active},
                      {"holds_as", r.auth.has_value()},
                      {"revoked_at_ms", r.revoked_at ? json(*r.revoked_at) : json(nullptr)},
                      {"pending_gc", pending}});
    }
    json gcs = json::array();
    for (const auto& g : vault_->gc_history()) gcs.push_back(g.to_json());
    j["vault"] = {{"records", recs}, {"gc_history", gcs}};
    json insts = json::object();
    for (const auto& [id, st] : institutions_) {
      json held = json::object();
      for (const auto& [key, g] : st.store) held[std::get<0>(key).str()] = held.value(std::get<0>(key).str(), 0) + 1;
      insts[id] = held;
    }
    j["institutions"] = insts;
    json wss = json::object();
    for (const auto& [id, ws] : workstations_)
      wss[id] = {{"live_buffers", ws->registry.live_count()}, {"digests", ws->digests}};
    j["workstations"] = wss;
    json rounds = json::array();
    for (const auto& [id, rs] : orch_.rounds) {
      json r = rs.round.to_json();
      if (!rs.report.is_null()) r["report"] = rs.report;
      rounds.push_back(r);
    }
    json fair = json::object();
    for (const auto& [n, c] : orch_.fairness.counts()) fair[n] = c;
    j["orchestrator"] = {{"rounds", rounds}, {"fairness", fair}};
    j["clients"] = clients_;
    j["end_time"] = to_seconds(now_);
    return j;
  }

  std::map<SubjectId, std::vector<std::string>> holders() const {
    std::map<SubjectId, std::vector<std::string>> out;
    for (const auto& [subject, t] : truth_) {
      auto& h = out[subject];
      std::vector<std::span<const Byte>> needles{t.auth.bytes};
      for (const auto& a : t.plan.assignments) needles.push_back(a.grid.bytes);
      auto has = [&](std::span<const Byte> hay) {
        for (auto n : needles)
          if (hay.size() >= n.size() && std::search(hay.begin(), hay.end(), n.begin(), n.end()) != hay.end())
            return true;
        return false;
      };
      if (vault_->holds_auth_bytes(subject) || vault_->contains_bytes(t.auth.bytes)) h.push_back("vault");
      for (const auto& [id, st] : institutions_)
        for (const auto& [key, g] : st.store)
          if (std::get<0>(key) == subject || has(g.bytes)) {
            h.push_back("institution:" + id);
            break;
          }
      for (const auto& [id, ws] : workstations_) {
        bool found = false;
        for (auto n : needles) found = found || ws->registry.contains(n);
        for (const auto& p : t.patches) found = found || ws->registry.contains(p.pixels);
        for (const auto& [round, task] : ws->tasks)
          for (const auto& hd : task.handles) found = found || has(hd.auth.bytes);
        if (found) h.push_back("workstation:" + id);
      }
    }
    return out;
  }

  const Scenario& sc_;
  SeededRandom rng_;
  std::uint64_t enroll_seed_;
  SimTime now_ = 0;
  SimTime last_active_ = 0;  // last event that delivered, handled or sent a message
  std::uint64_t seq_ = 0;
  std::uint64_t next_msg_ = 1;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::vector<SimMessage> trace_;

  std::map<NodeId, NodeRole> roles_;
  std::map<NodeId, double> latency_;
  NodeId vault_id_, orch_id_;
  std::vector<NodeId> institution_ids_;
  std::unique_ptr<vault::Vault> vault_;
  std::map<NodeId, InstitutionState> institutions_;
  std::map<NodeId, std::unique_ptr<WorkstationState>> workstations_;
  OrchestratorState orch_;
  std::map<NodeId, json> clients_;
  GcPass gc_;
  std::uint64_t gc_request_ = 0;
  std::uint64_t gc_generation_ = 0;
  bool gc_timer_armed_ = false;
  std::map<SubjectId, SubjectTruth> truth_;
};

}  // namespace

SimResult run_scenario(const Scenario& scenario, std::uint64_t seed) {
  scenario.validate();
  Simulator sim(scenario, seed);
  return sim.run();
}

}  // namespace voidface::sim
