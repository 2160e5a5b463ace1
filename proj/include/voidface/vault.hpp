#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "voidface/distribution.hpp"
#include "voidface/error.hpp"
#include "voidface/vss.hpp"

namespace voidface::vault {

enum class ExclusionReason { rtbf, not_allowed, unknown_subject };
std::string_view to_string(ExclusionReason r);

struct SubjectRecord {
  SubjectId subject;
  std::optional<vss::ShareGrid> auth;  // present iff active
  bool active = false;
  std::int64_t created_at = 0;
  std::optional<std::int64_t> revoked_at;
  std::vector<dist::PlacementEntry> placement;
  std::size_t share_count = 0;
  std::set<std::string> allowed_requesters;
  std::vector<std::int64_t> prior_revocations;
  std::set<dist::InstitutionId> pending_gc;
};

// What a validated request hands to the dispatcher.
struct AsHandle {
  SubjectId subject;
  vss::ShareGrid auth;
  std::vector<dist::PlacementEntry> placement;
  std::size_t share_count = 0;
};

struct Exclusion {
  SubjectId subject;
  ExclusionReason reason;
};

struct ValidationResult {
  std::vector<AsHandle> authorized;
  std::vector<Exclusion> excluded;
};

// Thrown when every requested subject was excluded; carries the reasons.
class NoAuthorizedSubjects : public Error {
 public:
  explicit NoAuthorizedSubjects(std::vector<Exclusion> excluded);
  const std::vector<Exclusion>& excluded() const { return excluded_; }

 private:
  std::vector<Exclusion> excluded_;
};

// Storage institutions as seen by the garbage collector.
class InstitutionDirectory {
 public:
  virtual ~InstitutionDirectory() = default;
  // Deletes every grid of `subject` held at `institution`. Returns false if
  // the institution could not be reached.
  virtual bool delete_subject(dist::InstitutionId institution, const SubjectId& subject) = 0;
};

struct GcItem {
  SubjectId subject;
  dist::InstitutionId institution = 0;
  bool acknowledged = false;
};

struct GcReport {
  std::int64_t timestamp = 0;
  std::vector<GcItem> items;

  std::size_t acknowledged() const;
  std::size_t queued() const;
  nlohmann::json to_json() const;
};

// Trusted-party custody of authentication shares.
//
// Directory layout when persistent:
//   log.jsonl          one event per line (REGISTER, PLACEMENT, GRANT, REVOKE, GC_PASS)
//   as/<subject>.share authentication share in the share file format
//   snapshot.json      compacted state; the log holds events after it
//
// AS bytes are written before the REGISTER event, so recovery never yields
// an active record without persisted AS bytes.
class Vault {
 public:
  using Clock = std::function<std::int64_t()>;

  explicit Vault(Clock clock = {});
  explicit Vault(std::filesystem::path dir, Clock clock = {});

  Vault(const Vault&) = delete;
  Vault& operator=(const Vault&) = delete;

  SubjectRecord register_subject(const SubjectId& subject, vss::ShareGrid auth,
                                 std::vector<dist::PlacementEntry> placement,
                                 std::size_t share_count,
                                 std::set<std::string> allowed_requesters);
  void set_placement(const SubjectId& subject, std::vector<dist::PlacementEntry> placement,
                     std::size_t share_count);
  void grant(const SubjectId& subject, const std::string& requester);

  ValidationResult validate_training_request(const std::string& requester,
                                             std::span<const SubjectId> subjects) const;

  // True when this call revoked the subject, false when it already was.
  bool rtbf_revoke(const SubjectId& subject);

  GcReport gc_abandoned_shares(InstitutionDirectory& institutions);

  // Message-driven GC (simnet): list, acknowledge, then log the pass.
  std::vector<std::pair<SubjectId, dist::InstitutionId>> pending_gc() const;
  void acknowledge_gc(const SubjectId& subject, dist::InstitutionId institution);
  void record_gc_pass(const GcReport& report);

  std::optional<SubjectRecord> record(const SubjectId& subject) const;
  std::vector<SubjectRecord> records() const;
  std::vector<GcReport> gc_history() const;
  bool holds_auth_bytes(const SubjectId& subject) const;
  bool contains_bytes(std::span<const Byte> needle) const;

  // Writes snapshot.json and truncates the log.
  void compact();

  const std::optional<std::filesystem::path>& directory() const { return dir_; }
  std::int64_t now() const { return clock_(); }

 private:
  void recover();
  void append_event(const nlohmann::json& event);
  void apply_event(const nlohmann::json& event, bool replay);
  std::filesystem::path as_path(const SubjectId& subject) const;
  nlohmann::json snapshot_json() const;

  mutable std::shared_mutex mu_;
  std::optional<std::filesystem::path> dir_;
  Clock clock_;
  std::map<SubjectId, SubjectRecord> records_;
  std::vector<GcReport> gc_history_;
};

}  // namespace voidface::vault
