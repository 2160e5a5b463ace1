#include "voidface/vault.hpp"

#include <chrono>
#include <fstream>
#include <mutex>

#include "voidface/secure_buffer.hpp"
#include "voidface/share_format.hpp"

namespace voidface::vault {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::int64_t wall_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

void wipe_grid(std::optional<vss::ShareGrid>& g) {
  if (!g) return;
  secure_zero(g->bytes);
  g.reset();
}

json record_json(const SubjectRecord& r) {
  json j = {{"subject", r.subject.str()},
            {"active", r.active},
            {"created_at", r.created_at},
            {"placement", dist::entries_to_json(r.placement)},
            {"share_count", r.share_count},
            {"allow", r.allowed_requesters},
            {"prior_revocations", r.prior_revocations},
            {"pending_gc", r.pending_gc}};
  j["revoked_at"] = r.revoked_at ? json(*r.revoked_at) : json(nullptr);
  return j;
}

}  // namespace

std::string_view to_string(ExclusionReason r) {
  switch (r) {
    case ExclusionReason::rtbf: return "RTBF";
    case ExclusionReason::not_allowed: return "NOT_ALLOWED";
    case ExclusionReason::unknown_subject: return "UNKNOWN_SUBJECT";
  }
  return "UNKNOWN";
}

NoAuthorizedSubjects::NoAuthorizedSubjects(std::vector<Exclusion> excluded)
    : Error(ErrorCode::no_data, "no authorized subjects in training request"),
      excluded_(std::move(excluded)) {}

std::size_t GcReport::acknowledged() const {
  std::size_t n = 0;
  for (const auto& i : items) n += i.acknowledged;
  return n;
}

std::size_t GcReport::queued() const { return items.size() - acknowledged(); }

json GcReport::to_json() const {
  json items_j = json::array();
  for (const auto& i : items)
    items_j.push_back({{"subject", i.subject.str()},
                       {"institution", i.institution},
                       {"acknowledged", i.acknowledged}});
  return {{"ts", timestamp},
          {"acknowledged", acknowledged()},
          {"queued", queued()},
          {"items", items_j}};
}

Vault::Vault(Clock clock) : clock_(clock ? std::move(clock) : Clock(wall_clock_ms)) {}

Vault::Vault(fs::path dir, Clock clock)
    : dir_(std::move(dir)), clock_(clock ? std::move(clock) : Clock(wall_clock_ms)) {
  fs::create_directories(*dir_ / "as");
  recover();
}

fs::path Vault::as_path(const SubjectId& subject) const {
  return *dir_ / "as" / (subject.str() + ".share");
}

void Vault::append_event(const json& event) {
  if (!dir_) return;
  std::ofstream out(*dir_ / "log.jsonl", std::ios::app);
  if (!out) fail(ErrorCode::io, "cannot append vault log");
  out << event.dump() << "\n";
  out.flush();
  if (!out) fail(ErrorCode::io, "vault log write failed");
}

void Vault::apply_event(const json& ev, bool replay) {
  const std::string type = ev.at("type");
  if (type == "GC_PASS") {
    GcReport rep;
    rep.timestamp = ev.at("ts");
    for (const auto& i : ev.at("items")) {
      GcItem item{SubjectId::parse(i.at("subject").get<std::string>()),
                  i.at("institution").get<dist::InstitutionId>(), i.at("acknowledged").get<bool>()};
      if (item.acknowledged)
        if (auto it = records_.find(item.subject); it != records_.end())
          it->second.pending_gc.erase(item.institution);
      rep.items.push_back(item);
    }
    gc_history_.push_back(std::move(rep));
    return;
  }

  const auto subject = SubjectId::parse(ev.at("subject").get<std::string>());
  if (type != "REGISTER" && !records_.contains(subject))
    fail(ErrorCode::format, type + " event for unregistered subject " + subject.str());
  if (type == "REGISTER") {
    std::optional<vss::ShareGrid> auth;
    if (replay) {
      try {
        auto g = share_format::read_file(as_path(subject));
        if (g.subject == subject && g.role == vss::ShareRole::authentication) auth = std::move(g);
      } catch (const Error&) {
      }
    }
    SubjectRecord fresh;
    if (auto it = records_.find(subject); it != records_.end()) {
      fresh.prior_revocations = it->second.prior_revocations;
      if (it->second.revoked_at) fresh.prior_revocations.push_back(*it->second.revoked_at);
      fresh.pending_gc = it->second.pending_gc;
    }
    fresh.subject = subject;
    // A replayed REGISTER whose AS file is gone (later revoked, or lost)
    // yields metadata only.
    fresh.active = !replay || auth.has_value();
    fresh.auth = std::move(auth);
    fresh.created_at = ev.at("ts");
    fresh.placement = dist::entries_from_json(ev.at("placement"));
    fresh.share_count = ev.at("share_count");
    fresh.allowed_requesters = ev.at("allow").get<std::set<std::string>>();
    auto& slot = records_[subject];
    wipe_grid(slot.auth);
    slot = std::move(fresh);
  } else if (type == "PLACEMENT") {
    auto& r = records_.at(subject);
    r.placement = dist::entries_from_json(ev.at("placement"));
    r.share_count = ev.at("share_count");
  } else if (type == "GRANT") {
    records_.at(subject).allowed_requesters.insert(ev.at("requester").get<std::string>());
  } else if (type == "REVOKE") {
    auto& r = records_.at(subject);
    wipe_grid(r.auth);
    r.active = false;
    r.revoked_at = ev.at("ts").get<std::int64_t>();
    for (const auto& e : r.placement) r.pending_gc.insert(e.institution);
  } else {
    fail(ErrorCode::format, "unknown vault event " + type);
  }
}

void Vault::recover() {
  const fs::path snap = *dir_ / "snapshot.json";
  if (fs::exists(snap)) {
    std::ifstream in(snap);
    json j = json::parse(in);
    for (const auto& rj : j.at("records")) {
      SubjectRecord r;
      r.subject = SubjectId::parse(rj.at("subject").get<std::string>());
      r.active = rj.at("active");
      r.created_at = rj.at("created_at");
      if (!rj.at("revoked_at").is_null()) r.revoked_at = rj.at("revoked_at").get<std::int64_t>();
      r.placement = dist::entries_from_json(rj.at("placement"));
      r.share_count = rj.at("share_count");
      r.allowed_requesters = rj.at("allow").get<std::set<std::string>>();
      r.prior_revocations = rj.at("prior_revocations").get<std::vector<std::int64_t>>();
      r.pending_gc = rj.at("pending_gc").get<std::set<dist::InstitutionId>>();
      if (r.active) {
        try {
          r.auth = share_format::read_file(as_path(r.subject));
        } catch (const Error&) {
          r.active = false;
        }
      }
      records_[r.subject] = std::move(r);
    }
  }
  const fs::path log = *dir_ / "log.jsonl";
  if (fs::exists(log)) {
    std::ifstream in(log);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json ev;
      try {
        ev = json::parse(line);
      } catch (const json::parse_error&) {
        break;  // torn final write
      }
      apply_event(ev, true);
    }
  }
  // AS files without an active record are leftovers of an interrupted
  // registration or revocation.
  for (const auto& entry : fs::directory_iterator(*dir_ / "as")) {
    auto id = SubjectId::try_parse(entry.path().stem().string());
    auto it = id ? records_.find(*id) : records_.end();
    if (it == records_.end() || !it->second.active) shred_file(entry.path());
  }
}

SubjectRecord Vault::register_subject(const SubjectId& subject, vss::ShareGrid auth,
                                      std::vector<dist::PlacementEntry> placement,
                                      std::size_t share_count,
                                      std::set<std::string> allowed_requesters) {
  auth.validate();
  if (auth.role != vss::ShareRole::authentication)
    fail(ErrorCode::invalid_argument, "vault only stores authentication shares");
  if (auth.subject != subject) fail(ErrorCode::invalid_argument, "AS belongs to another subject");

  std::unique_lock lock(mu_);
  if (auto it = records_.find(subject); it != records_.end() && it->second.active)
    fail(ErrorCode::conflict, "subject " + subject.str() + " is already registered");

  if (dir_) share_format::write_file(as_path(subject), auth);
  json ev = {{"type", "REGISTER"},
             {"subject", subject.str()},
             {"ts", clock_()},
             {"placement", dist::entries_to_json(placement)},
             {"share_count", share_count},
             {"allow", allowed_requesters}};
  append_event(ev);
  apply_event(ev, false);
  auto& r = records_.at(subject);
  r.auth = std::move(auth);
  return r;
}

void Vault::set_placement(const SubjectId& subject, std::vector<dist::PlacementEntry> placement,
                          std::size_t share_count) {
  std::unique_lock lock(mu_);
  auto it = records_.find(subject);
  if (it == records_.end() || !it->second.active)
    fail(ErrorCode::not_found, "no active subject " + subject.str());
  json ev = {{"type", "PLACEMENT"},
             {"subject", subject.str()},
             {"ts", clock_()},
             {"placement", dist::entries_to_json(placement)},
             {"share_count", share_count}};
  append_event(ev);
  apply_event(ev, false);
}

void Vault::grant(const SubjectId& subject, const std::string& requester) {
  std::unique_lock lock(mu_);
  if (!records_.contains(subject)) fail(ErrorCode::not_found, "unknown subject " + subject.str());
  json ev = {{"type", "GRANT"}, {"subject", subject.str()}, {"ts", clock_()}, {"requester", requester}};
  append_event(ev);
  apply_event(ev, false);
}

ValidationResult Vault::validate_training_request(const std::string& requester,
                                                  std::span<const SubjectId> subjects) const {
  std::shared_lock lock(mu_);
  bool known = false;
  for (const auto& [id, r] : records_)
    if (r.allowed_requesters.contains(requester)) {
      known = true;
      break;
    }
  if (!known) fail(ErrorCode::authorization, "requester '" + requester + "' is not authorized");

  ValidationResult out;
  for (const auto& s : subjects) {
    auto it = records_.find(s);
    if (it == records_.end()) {
      out.excluded.push_back({s, ExclusionReason::unknown_subject});
    } else if (!it->second.active) {
      out.excluded.push_back({s, ExclusionReason::rtbf});
    } else if (!it->second.allowed_requesters.contains(requester)) {
      out.excluded.push_back({s, ExclusionReason::not_allowed});
    } else {
      const auto& r = it->second;
      out.authorized.push_back({r.subject, *r.auth, r.placement, r.share_count});
    }
  }
  if (out.authorized.empty()) throw NoAuthorizedSubjects(std::move(out.excluded));
  return out;
}

bool Vault::rtbf_revoke(const SubjectId& subject) {
  std::unique_lock lock(mu_);
  auto it = records_.find(subject);
  if (it == records_.end()) fail(ErrorCode::not_found, "unknown subject " + subject.str());
  if (!it->second.active) return false;
  if (dir_) shred_file(as_path(subject));
  json ev = {{"type", "REVOKE"}, {"subject", subject.str()}, {"ts", clock_()}};
  append_event(ev);
  apply_event(ev, false);
  return true;
}

std::vector<std::pair<SubjectId, dist::InstitutionId>> Vault::pending_gc() const {
  std::shared_lock lock(mu_);
  std::vector<std::pair<SubjectId, dist::InstitutionId>> out;
  for (const auto& [id, r] : records_)
    if (!r.active)
      for (auto inst : r.pending_gc) out.emplace_back(id, inst);
  return out;
}

void Vault::acknowledge_gc(const SubjectId& subject, dist::InstitutionId institution) {
  std::unique_lock lock(mu_);
  if (auto it = records_.find(subject); it != records_.end()) it->second.pending_gc.erase(institution);
}

void Vault::record_gc_pass(const GcReport& report) {
  std::unique_lock lock(mu_);
  json ev = report.to_json();
  ev["type"] = "GC_PASS";
  append_event(ev);
  apply_event(ev, false);
}

GcReport Vault::gc_abandoned_shares(InstitutionDirectory& institutions) {
  GcReport report;
  report.timestamp = clock_();
  for (const auto& [subject, inst] : pending_gc())
    report.items.push_back({subject, inst, institutions.delete_subject(inst, subject)});
  if (!report.items.empty()) record_gc_pass(report);
  return report;
}

std::optional<SubjectRecord> Vault::record(const SubjectId& subject) const {
  std::shared_lock lock(mu_);
  auto it = records_.find(subject);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::vector<SubjectRecord> Vault::records() const {
  std::shared_lock lock(mu_);
  std::vector<SubjectRecord> out;
  for (const auto& [id, r] : records_) out.push_back(r);
  return out;
}

std::vector<GcReport> Vault::gc_history() const {
  std::shared_lock lock(mu_);
  return gc_history_;
}

bool Vault::holds_auth_bytes(const SubjectId& subject) const {
  std::shared_lock lock(mu_);
  auto it = records_.find(subject);
  if (it != records_.end() && it->second.auth) return true;
  return dir_ && fs::exists(as_path(subject));
}

bool Vault::contains_bytes(std::span<const Byte> needle) const {
  std::shared_lock lock(mu_);
  for (const auto& [id, r] : records_)
    if (r.auth && std::search(r.auth->bytes.begin(), r.auth->bytes.end(), needle.begin(),
                              needle.end()) != r.auth->bytes.end())
      return true;
  if (dir_)
    for (const auto& entry : fs::recursive_directory_iterator(*dir_)) {
      if (!entry.is_regular_file()) continue;
      std::ifstream in(entry.path(), std::ios::binary);
      std::vector<Byte> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      if (std::search(bytes.begin(), bytes.end(), needle.begin(), needle.end()) != bytes.end())
        return true;
    }
  return false;
}

json Vault::snapshot_json() const {
  json recs = json::array();
  for (const auto& [id, r] : records_) recs.push_back(record_json(r));
  return {{"version", 1}, {"ts", clock_()}, {"records", recs}};
}

void Vault::compact() {
  std::unique_lock lock(mu_);
  if (!dir_) return;
  const fs::path tmp = *dir_ / "snapshot.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << snapshot_json().dump(2) << "\n";
    if (!out) fail(ErrorCode::io, "snapshot write failed");
  }
  fs::rename(tmp, *dir_ / "snapshot.json");
  std::ofstream(*dir_ / "log.jsonl", std::ios::trunc);
}

}  // namespace voidface::vault
