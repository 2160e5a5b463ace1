#include "voidface/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace voidface::orch {

using nlohmann::json;

std::string_view to_string(NodeRole r) {
  return r == NodeRole::institution ? "institution" : "workstation";
}

NodeRole parse_node_role(std::string_view s) {
  if (s == "institution") return NodeRole::institution;
  if (s == "workstation") return NodeRole::workstation;
  fail(ErrorCode::config, "unknown node role '" + std::string(s) + "'");
}

void NodeProfile::validate() const {
  if (node_id.empty()) fail(ErrorCode::config, "node id is empty");
  if (!(compute_rate > 0) || !(bandwidth > 0) || !(energy_budget >= 0))
    fail(ErrorCode::config, "node " + node_id + " has non-positive rates");
  if (!(availability_p >= 0 && availability_p <= 1))
    fail(ErrorCode::config, "node " + node_id + " availability outside [0, 1]");
}

json NodeProfile::to_json() const {
  return {{"id", node_id},
          {"role", to_string(role)},
          {"compute_rate", compute_rate},
          {"bandwidth", bandwidth},
          {"energy_budget", energy_budget},
          {"availability_p", availability_p}};
}

NodeProfile NodeProfile::from_json(const json& j) {
  NodeProfile p;
  try {
    p.node_id = j.at("id").get<std::string>();
    p.role = parse_node_role(j.value("role", std::string("workstation")));
    const json prof = j.contains("profile") ? j.at("profile") : j;
    p.compute_rate = prof.value("compute_rate", p.compute_rate);
    p.bandwidth = prof.value("bandwidth", p.bandwidth);
    p.energy_budget = prof.value("energy_budget", p.energy_budget);
    p.availability_p = prof.value("availability_p", p.availability_p);
  } catch (const json::exception& e) {
    fail(ErrorCode::config, std::string("bad node profile: ") + e.what());
  }
  p.validate();
  return p;
}

Workload round_workload(std::size_t n_subjects, Dimensions share_dims) {
  return {static_cast<double>(n_subjects),
          static_cast<double>(n_subjects) * static_cast<double>(share_dims.byte_count())};
}

double estimate_seconds(const NodeProfile& node, const Workload& w) {
  return w.work_units / node.compute_rate + w.bytes / node.bandwidth;
}

unsigned FairnessLedger::skip_count(const NodeId& id) const {
  auto it = skips_.find(id);
  return it == skips_.end() ? 0 : it->second;
}

InsufficientCapacity::InsufficientCapacity(std::size_t wanted, std::size_t found,
                                           std::vector<NearMiss> near_misses)
    : Error(ErrorCode::insufficient_capacity,
            [&] {
              std::string msg = "need " + std::to_string(wanted) + " workstations, " +
                                std::to_string(found) + " meet the deadline";
              for (const auto& m : near_misses)
                msg += "; " + m.node_id + " " + m.reason + " (est " + std::to_string(m.estimate) + " s)";
              return msg;
            }()),
      near_misses_(std::move(near_misses)) {}

namespace {

struct Ranked {
  const NodeProfile* node;
  double estimate;
  unsigned skips;
};

std::vector<Ranked> rank(std::span<const NodeProfile> candidates, const Workload& w,
                         const FairnessLedger* fairness) {
  std::vector<Ranked> out;
  for (const auto& c : candidates) {
    c.validate();
    if (c.role != NodeRole::workstation) continue;
    out.push_back({&c, estimate_seconds(c, w), fairness ? fairness->skip_count(c.node_id) : 0});
  }
  std::stable_sort(out.begin(), out.end(), [](const Ranked& a, const Ranked& b) {
    if (a.skips != b.skips) return a.skips < b.skips;
    if (a.estimate != b.estimate) return a.estimate < b.estimate;
    return a.node->node_id < b.node->node_id;
  });
  return out;
}

bool compliant(const Ranked& r, const Workload& w, double deadline) {
  return r.estimate <= deadline && r.node->energy_budget >= w.work_units;
}

}  // namespace

Selection select_nodes(std::span<const NodeProfile> candidates, std::size_t n_p,
                       const Workload& workload, double deadline, const FairnessLedger* fairness) {
  if (n_p == 0) fail(ErrorCode::invalid_argument, "n_p must be positive");
  std::set<NodeId> seen;
  for (const auto& c : candidates)
    if (!seen.insert(c.node_id).second) fail(ErrorCode::config, "duplicate node id " + c.node_id);

  Selection sel;
  std::vector<NearMiss> misses;
  for (const auto& r : rank(candidates, workload, fairness)) {
    if (compliant(r, workload, deadline)) {
      if (sel.assignment.size() < n_p) {
        sel.assignment.push_back(r.node->node_id);
        sel.estimates.push_back(r.estimate);
      }
    } else {
      misses.push_back({r.node->node_id, r.estimate,
                        r.estimate > deadline ? "over deadline" : "energy budget"});
    }
  }
  if (sel.assignment.size() < n_p) {
    std::sort(misses.begin(), misses.end(),
              [](const NearMiss& a, const NearMiss& b) { return a.estimate < b.estimate; });
    if (misses.size() > n_p) misses.resize(n_p);
    throw InsufficientCapacity(n_p, sel.assignment.size(), std::move(misses));
  }
  return sel;
}

std::string_view to_string(RoundStatus s) {
  switch (s) {
    case RoundStatus::planned: return "planned";
    case RoundStatus::running: return "running";
    case RoundStatus::completed: return "completed";
    case RoundStatus::aborted: return "aborted";
  }
  return "unknown";
}

std::string_view to_string(DropReason r) {
  return r == DropReason::heartbeat ? "heartbeat" : "straggler";
}

json TrainingRound::to_json() const {
  json subj = json::array();
  for (const auto& s : subjects) subj.push_back(s.str());
  json drops = json::array();
  for (const auto& d : dropped)
    drops.push_back({{"node", d.node_id},
                     {"patch_index", d.patch_index},
                     {"reason", to_string(d.reason)},
                     {"score", d.score}});
  json j = {{"round_id", round_id}, {"subjects", subj},     {"assignment", assignment},
            {"deadline_s", deadline}, {"dropped", drops}, {"status", to_string(status)}};
  if (!abort_reason.empty()) j["abort_reason"] = abort_reason;
  return j;
}

double straggler_score(double elapsed, double expected, double lambda) {
  if (!(expected > 0)) fail(ErrorCode::invalid_argument, "expected duration must be positive");
  const double lateness = std::max(0.0, elapsed / expected - 1.0);
  return std::exp(-lambda * lateness);
}

void drop_stragglers(TrainingRound& round, const std::map<NodeId, NodeObservation>& observed,
                     std::span<const NodeProfile> candidates, const Workload& workload,
                     const StragglerPolicy& policy, FairnessLedger& fairness, RandomSource& rng) {
  if (round.status == RoundStatus::aborted || round.status == RoundStatus::completed) return;
  if (round.expected.size() != round.assignment.size())
    fail(ErrorCode::invalid_argument, "round has no expected duration per slot");

  std::set<NodeId> excluded;
  for (const auto& d : round.dropped) excluded.insert(d.node_id);
  std::vector<std::size_t> vacated;
  for (std::size_t slot = 0; slot < round.assignment.size(); ++slot) {
    const auto& id = round.assignment[slot];
    auto it = observed.find(id);
    if (it == observed.end()) continue;
    const auto& obs = it->second;
    const double score = straggler_score(obs.elapsed, round.expected[slot], policy.lambda);
    std::optional<DropReason> reason;
    if (obs.since_heartbeat > policy.heartbeat_misses * policy.heartbeat_interval)
      reason = DropReason::heartbeat;
    else if (score < policy.theta)
      reason = DropReason::straggler;
    if (!reason) continue;
    round.dropped.push_back({id, slot, *reason, score});
    fairness.record_drop(id);
    excluded.insert(id);
    vacated.push_back(slot);
  }
  if (vacated.empty()) return;

  for (const auto& id : round.assignment) excluded.insert(id);
  // Shuffle first so the stable ranking breaks exact ties at random.
  std::vector<NodeProfile> pool(candidates.begin(), candidates.end());
  rng.shuffle(pool);
  std::vector<Ranked> ranked;
  for (const auto& c : pool)
    if (c.role == NodeRole::workstation && !excluded.contains(c.node_id))
      ranked.push_back({&c, estimate_seconds(c, workload), fairness.skip_count(c.node_id)});
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.skips != b.skips) return a.skips < b.skips;
    return a.estimate < b.estimate;
  });

  std::size_t next = 0;
  for (std::size_t slot : vacated) {
    while (next < ranked.size() && !compliant(ranked[next], workload, round.deadline)) ++next;
    if (next == ranked.size()) {
      round.status = RoundStatus::aborted;
      round.abort_reason = "no replacement for patch " + std::to_string(slot);
      return;
    }
    round.assignment[slot] = ranked[next].node->node_id;
    round.expected[slot] = ranked[next].estimate;
    ++next;
  }
}

json RoundConfig::to_json() const {
  json j = {{"n_p", n_p},       {"deadline_s", deadline_s},   {"lambda", lambda},
            {"theta", theta},   {"heartbeat_s", heartbeat_s}, {"trainer", trainer}};
  if (trainer == "external") {
    j["trainer_host"] = trainer_host;
    j["trainer_port"] = trainer_port;
  }
  return j;
}

RoundConfig RoundConfig::from_json(const json& j) {
  RoundConfig c;
  try {
    c.n_p = j.value("n_p", c.n_p);
    c.deadline_s = j.value("deadline_s", c.deadline_s);
    c.lambda = j.value("lambda", c.lambda);
    c.theta = j.value("theta", c.theta);
    c.heartbeat_s = j.value("heartbeat_s", c.heartbeat_s);
    c.trainer = j.value("trainer", c.trainer);
    c.trainer_host = j.value("trainer_host", c.trainer_host);
    c.trainer_port = j.value("trainer_port", c.trainer_port);
  } catch (const json::exception& e) {
    fail(ErrorCode::config, std::string("bad round config: ") + e.what());
  }
  if (c.n_p == 0 || c.n_p > 255) fail(ErrorCode::config, "n_p must be in 1..255");
  if (!(c.deadline_s > 0) || !(c.lambda >= 0) || !(c.heartbeat_s > 0))
    fail(ErrorCode::config, "round timing parameters must be positive");
  if (!(c.theta >= 0 && c.theta <= 1)) fail(ErrorCode::config, "theta outside [0, 1]");
  if (c.trainer != "stub" && c.trainer != "external")
    fail(ErrorCode::config, "trainer must be stub or external");
  return c;
}

WorkstationOutput reconstruct_at_workstation(std::uint8_t patch_index,
                                             std::span<const vault::AsHandle> handles,
                                             ShareSource& source, BufferRegistry& workstation) {
  WorkstationOutput out;
  out.patch_index = patch_index;
  for (const auto& h : handles) {
    auto& slot = out.patches.emplace_back();
    std::vector<dist::PlacementEntry> needed;
    for (const auto& e : h.placement)
      if (e.patch_index == patch_index) needed.push_back(e);
    if (needed.empty()) {
      out.problems.push_back({h.subject, patch_index, ErrorCode::not_found, "patch unavailable"});
      continue;
    }
    std::sort(needed.begin(), needed.end(), [](const auto& a, const auto& b) {
      return a.subgrid_index < b.subgrid_index;
    });
    std::vector<vss::ShareGrid> grids;
    bool missing = false;
    for (const auto& e : needed) {
      auto g = source.fetch(e.institution, h.subject, patch_index, e.subgrid_index);
      if (!g) {
        missing = true;
        break;
      }
      grids.push_back(std::move(*g));
    }
    if (missing) {
      out.problems.push_back({h.subject, patch_index, ErrorCode::incomplete_share,
                              "grid not delivered by its institution"});
      for (auto& g : grids) secure_zero(g.bytes);
      continue;
    }
    try {
      auto p = grids.size() == 1 && grids[0].role == vss::ShareRole::private_share
                   ? vss::reconstruct_patch(h.auth, grids[0])
                   : vss::reconstruct_patch(h.auth, grids);
      slot = train::ReconstructedPatch{
          patch_index, p.dims,
          SensitiveBuffer(&workstation, h.subject.str() + "/p" + std::to_string(patch_index),
                          std::move(p.pixels))};
    } catch (const Error& e) {
      out.problems.push_back({h.subject, patch_index, e.code(), e.what()});
    }
    for (auto& g : grids) secure_zero(g.bytes);
  }
  return out;
}

std::vector<train::SubjectPatches> dispatch_and_reconstruct(
    std::size_t n_p, std::span<const vault::AsHandle> handles, ShareSource& source,
    std::vector<BufferRegistry>& workstations, std::vector<PatchProblem>* problems) {
  if (workstations.size() != n_p)
    fail(ErrorCode::invalid_argument, "need one workstation registry per patch");
  std::vector<train::SubjectPatches> out(handles.size());
  for (std::size_t s = 0; s < handles.size(); ++s) {
    out[s].subject = handles[s].subject;
    out[s].patches.resize(n_p);
  }
  for (std::size_t p = 0; p < n_p; ++p) {
    auto ws = reconstruct_at_workstation(static_cast<std::uint8_t>(p), handles, source,
                                         workstations[p]);
    for (std::size_t s = 0; s < handles.size(); ++s) out[s].patches[p] = std::move(ws.patches[s]);
    if (problems) problems->insert(problems->end(), ws.problems.begin(), ws.problems.end());
  }
  return out;
}

}  // namespace voidface::orch
