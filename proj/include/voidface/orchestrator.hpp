#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "voidface/distribution.hpp"
#include "voidface/error.hpp"
#include "voidface/random.hpp"
#include "voidface/trainer.hpp"
#include "voidface/vault.hpp"

namespace voidface::orch {

using NodeId = std::string;

enum class NodeRole { institution, workstation };
std::string_view to_string(NodeRole r);
NodeRole parse_node_role(std::string_view s);

struct NodeProfile {
  NodeId node_id;
  double compute_rate = 1.0;    // work units / s
  double bandwidth = 1.0;       // bytes / s
  double energy_budget = 1e18;  // work units
  double availability_p = 1.0;
  NodeRole role = NodeRole::workstation;

  void validate() const;
  nlohmann::json to_json() const;
  static NodeProfile from_json(const nlohmann::json& j);
};

struct Workload {
  double work_units = 0;
  double bytes = 0;
};

// One work unit and one share transfer per subject.
Workload round_workload(std::size_t n_subjects, Dimensions share_dims);

double estimate_seconds(const NodeProfile& node, const Workload& w);

// Counts how often each node was dropped; more drops, lower priority.
class FairnessLedger {
 public:
  unsigned skip_count(const NodeId& id) const;
  void record_drop(const NodeId& id) { ++skips_[id]; }
  const std::map<NodeId, unsigned>& counts() const { return skips_; }

 private:
  std::map<NodeId, unsigned> skips_;
};

struct NearMiss {
  NodeId node_id;
  double estimate = 0;
  std::string reason;
};

class InsufficientCapacity : public Error {
 public:
  InsufficientCapacity(std::size_t wanted, std::size_t found, std::vector<NearMiss> near_misses);
  const std::vector<NearMiss>& near_misses() const { return near_misses_; }

 private:
  std::vector<NearMiss> near_misses_;
};

struct Selection {
  std::vector<NodeId> assignment;  // patch index -> node
  std::vector<double> estimates;   // same order
};

// Deadline-greedy: workstations ordered by (skip count, estimate, id), first
// n_p with estimate <= deadline and enough energy are taken.
Selection select_nodes(std::span<const NodeProfile> candidates, std::size_t n_p,
                       const Workload& workload, double deadline,
                       const FairnessLedger* fairness = nullptr);

enum class RoundStatus { planned, running, completed, aborted };
std::string_view to_string(RoundStatus s);

enum class DropReason { heartbeat, straggler };
std::string_view to_string(DropReason r);

struct DroppedNode {
  NodeId node_id;
  std::size_t patch_index = 0;
  DropReason reason = DropReason::straggler;
  double score = 0;
};

struct TrainingRound {
  std::uint64_t round_id = 0;
  std::vector<SubjectId> subjects;
  std::vector<NodeId> assignment;  // patch index -> workstation
  std::vector<double> expected;    // per slot, seconds
  double deadline = 0;
  std::vector<DroppedNode> dropped;
  RoundStatus status = RoundStatus::planned;
  std::string abort_reason;

  nlohmann::json to_json() const;
};

struct StragglerPolicy {
  double lambda = 1.0;
  double theta = 0.5;
  double heartbeat_interval = 5.0;
  double heartbeat_misses = 2.0;  // silent longer than misses * interval => dropped
};

struct NodeObservation {
  double elapsed = 0;         // seconds since dispatch
  double since_heartbeat = 0; // seconds since the last heartbeat
};

// exp(-lambda * max(0, elapsed / expected - 1))
double straggler_score(double elapsed, double expected, double lambda);

// Drops silent or late workstations and reassigns their patches to the next
// compliant candidates; ties among replacements are broken by `rng`. Aborts
// the round when a dropped slot cannot be refilled.
void drop_stragglers(TrainingRound& round, const std::map<NodeId, NodeObservation>& observed,
                     std::span<const NodeProfile> candidates, const Workload& workload,
                     const StragglerPolicy& policy, FairnessLedger& fairness, RandomSource& rng);

struct RoundConfig {
  std::size_t n_p = 6;
  double deadline_s = 60;
  double lambda = 1.0;
  double theta = 0.5;
  double heartbeat_s = 5.0;
  std::string trainer = "stub";
  std::string trainer_host = "127.0.0.1";
  std::uint16_t trainer_port = 0;

  StragglerPolicy policy() const { return {lambda, theta, heartbeat_s, 2.0}; }
  nlohmann::json to_json() const;
  static RoundConfig from_json(const nlohmann::json& j);  // config error on bad values
};

// Where a workstation fetches grids from.
class ShareSource {
 public:
  virtual ~ShareSource() = default;
  virtual std::optional<vss::ShareGrid> fetch(dist::InstitutionId institution,
                                              const SubjectId& subject, std::uint8_t patch_index,
                                              std::uint8_t subgrid_index) = 0;
};

struct PatchProblem {
  SubjectId subject;
  std::uint8_t patch_index = 0;
  ErrorCode code = ErrorCode::incomplete_share;
  std::string detail;
};

struct WorkstationOutput {
  std::uint8_t patch_index = 0;
  // Per authorized subject, in handle order; nothing when unavailable.
  std::vector<std::optional<train::ReconstructedPatch>> patches;
  std::vector<PatchProblem> problems;
};

// Reconstructs patch `patch_index` for every handle: fetch PS (or its
// sub-grids) via the placement, XOR with the AS, keep the result in a
// sensitive buffer registered with `workstation`.
WorkstationOutput reconstruct_at_workstation(std::uint8_t patch_index,
                                             std::span<const vault::AsHandle> handles,
                                             ShareSource& source, BufferRegistry& workstation);

// All N_p workstations of a round, then regrouped per subject for training.
std::vector<train::SubjectPatches> dispatch_and_reconstruct(
    std::size_t n_p, std::span<const vault::AsHandle> handles, ShareSource& source,
    std::vector<BufferRegistry>& workstations, std::vector<PatchProblem>* problems = nullptr);

}  // namespace voidface::orch
