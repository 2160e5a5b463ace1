#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <sstream>

#include "voidface/bridge.hpp"
#include "voidface/distribution.hpp"
#include "voidface/error.hpp"
#include "voidface/metrics.hpp"
#include "voidface/patch_pipeline.hpp"
#include "voidface/secure_buffer.hpp"
#include "voidface/share_format.hpp"
#include "voidface/simnet.hpp"
#include "voidface/trainer.hpp"
#include "voidface/vault.hpp"

namespace voidface::cli {

using nlohmann::json;

json SeedOption::describe() const { return seed ? json(*seed) : json("os"); }

namespace {

std::unique_ptr<RandomSource> make_rng(const SeedOption& s) {
  if (s.seed) return std::make_unique<SeededRandom>(*s.seed);
  return std::make_unique<SecureRandom>();
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) fail(ErrorCode::io, "cannot read " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::config, p.string() + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write " + p.string());
  out << text;
}

fs::path institution_dir(const fs::path& store, std::size_t k) {
  return store / ("inst-" + std::to_string(k));
}

bool has_prefix(const fs::path& p, const std::string& prefix) {
  return p.filename().string().rfind(prefix, 0) == 0;
}

std::vector<fs::path> share_files(const fs::path& dir, const std::string& prefix = {}) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".share" && has_prefix(e.path(), prefix))
      out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

// Grids of one directory, wiped on scope exit.
struct LoadedShares {
  std::map<SubjectId, vss::ShareGrid> auth;
  std::map<SubjectId, std::map<std::uint8_t, vss::ShareGrid>> privates;

  ~LoadedShares() {
    for (auto& [s, g] : auth) secure_zero(g.bytes);
    for (auto& [s, m] : privates)
      for (auto& [i, g] : m) secure_zero(g.bytes);
  }
};

void load_shares(const fs::path& dir, LoadedShares& out) {
  if (!fs::is_directory(dir)) fail(ErrorCode::io, dir.string() + " is not a directory");
  for (const auto& p : share_files(dir)) {
    auto g = share_format::read_file(p);
    if (g.role == vss::ShareRole::authentication) out.auth[g.subject] = std::move(g);
    else if (g.role == vss::ShareRole::private_share) out.privates[g.subject][g.patch_index] = std::move(g);
  }
  if (out.auth.empty() && out.privates.empty()) fail(ErrorCode::no_data, "no share files in " + dir.string());
}

// Reads grids from <store>/inst-<k>/.
class StoreSource final : public orch::ShareSource {
 public:
  explicit StoreSource(fs::path store) : store_(std::move(store)) {}
  std::optional<vss::ShareGrid> fetch(dist::InstitutionId institution, const SubjectId& subject,
                                      std::uint8_t patch_index, std::uint8_t subgrid_index) override {
    const std::string prefix = subject.str() + "_p" + std::to_string(patch_index);
    for (const auto& p : share_files(institution_dir(store_, institution), prefix)) {
      auto g = share_format::read_file(p);
      if (g.subject == subject && g.patch_index == patch_index && g.subgrid_index == subgrid_index) return g;
      secure_zero(g.bytes);
    }
    return std::nullopt;
  }

 private:
  fs::path store_;
};

class StoreDirectory final : public vault::InstitutionDirectory {
 public:
  StoreDirectory(fs::path store, std::set<std::size_t> offline)
      : store_(std::move(store)), offline_(std::move(offline)) {}
  bool delete_subject(dist::InstitutionId institution, const SubjectId& subject) override {
    if (offline_.contains(institution)) return false;
    for (const auto& p : share_files(institution_dir(store_, institution), subject.str())) shred_file(p);
    return true;
  }

 private:
  fs::path store_;
  std::set<std::size_t> offline_;
};

json exclusions_json(const std::vector<vault::Exclusion>& ex) {
  json out = json::array();
  for (const auto& e : ex) out.push_back({{"subject", e.subject.str()}, {"reason", vault::to_string(e.reason)}});
  return out;
}

}  // namespace

json cmd_prepare(const PrepareArgs& a) {
  const SubjectId subject = SubjectId::parse(a.subject);
  if (!fs::is_regular_file(a.image)) fail(ErrorCode::io, "image not found: " + a.image.string());
  const auto landmarks = patch::LandmarkSet::load(a.landmarks);
  vault::Vault vault(a.vault);
  if (auto rec = vault.record(subject); rec && rec->active)
    fail(ErrorCode::conflict, "subject " + subject.str() + " is already registered");

  BufferRegistry registry;
  patch::AuditLog audit(a.vault / "ingest.jsonl");
  auto session = patch::IngestionSession::from_file(a.image, subject, registry, audit);
  session.extract(landmarks, a.size);
  auto bundle = session.take_bundle();
  session.destroy_original();

  auto rng = make_rng(a.seed);
  auto shares = vss::share_patches(bundle.patches, subject, *rng);
  for (auto& p : bundle.patches) secure_zero(p.pixels);

  fs::create_directories(a.out);
  json files = json::array();
  auto emit = [&](const vss::ShareGrid& g) {
    const auto path = a.out / share_format::file_name(g);
    share_format::write_file(path, g);
    files.push_back(path.string());
  };
  emit(shares.auth);
  for (const auto& ps : shares.privates) emit(ps);
  const std::set<std::string> allow(a.allow.begin(), a.allow.end());
  vault.register_subject(subject, shares.auth, {}, shares.privates.size(), allow);
  secure_zero(shares.auth.bytes);
  for (auto& ps : shares.privates) secure_zero(ps.bytes);

  return {{"command", "prepare"}, {"seed", a.seed.describe()}, {"subject", subject.str()},
          {"session", session.id()}, {"files", files}, {"vault", "active"}};
}

json cmd_distribute(const DistributeArgs& a) {
  const SubjectId subject = SubjectId::parse(a.subject);
  if (a.institutions == 0) fail(ErrorCode::invalid_argument, "need at least one institution");
  vault::Vault vault(a.vault);
  auto rec = vault.record(subject);
  if (!rec || !rec->active) fail(ErrorCode::not_found, "subject " + subject.str() + " has no active vault record");
  if (!rec->placement.empty()) fail(ErrorCode::conflict, "subject " + subject.str() + " is already distributed");

  LoadedShares loaded;
  load_shares(a.shares, loaded);
  auto it = loaded.privates.find(subject);
  if (it == loaded.privates.end()) fail(ErrorCode::not_found, "no private shares for " + subject.str());
  std::vector<vss::ShareGrid> privates;
  for (const auto& [i, g] : it->second) privates.push_back(g);

  auto rng = make_rng(a.seed);
  auto plan = dist::plan_distribution(privates, a.institutions, *rng);
  for (auto& g : privates) secure_zero(g.bytes);
  json written = json::array();
  for (const auto& as : plan.assignments) {
    const auto dir = institution_dir(a.store, as.institution);
    fs::create_directories(dir);
    share_format::write_file(dir / share_format::file_name(as.grid), as.grid);
    written.push_back((dir / share_format::file_name(as.grid)).string());
  }
  vault.set_placement(subject, plan.entries(), plan.share_count);

  json removed = json::array();
  if (!a.keep_local)
    for (const auto& p : share_files(a.shares, subject.str())) {
      shred_file(p);
      removed.push_back(p.string());
    }
  for (auto& as : plan.assignments) secure_zero(as.grid.bytes);
  return {{"command", "distribute"}, {"seed", a.seed.describe()}, {"plan", plan.to_json()},
          {"files", written}, {"removed_local", removed}};
}

json cmd_train(const TrainArgs& a) {
  if (a.subjects.empty()) fail(ErrorCode::invalid_argument, "no subjects given");
  std::vector<SubjectId> subjects;
  for (const auto& s : a.subjects) subjects.push_back(SubjectId::parse(s));
  vault::Vault vault(a.vault);

  json report = {{"command", "train"}, {"requester", a.requester}, {"round", a.round.to_json()}};
  const Dimensions share_dims{96, 96, 3};
  if (a.nodes) {
    std::vector<orch::NodeProfile> nodes;
    for (const auto& n : read_json(*a.nodes)) nodes.push_back(orch::NodeProfile::from_json(n));
    auto sel = orch::select_nodes(nodes, a.round.n_p, orch::round_workload(subjects.size(), share_dims),
                                  a.round.deadline_s);
    report["assignment"] = sel.assignment;
    report["estimates"] = sel.estimates;
  }

  vault::ValidationResult res;
  try {
    res = vault.validate_training_request(a.requester, subjects);
  } catch (const vault::NoAuthorizedSubjects& e) {
    report["authorized"] = json::array();
    report["excluded"] = exclusions_json(e.excluded());
    throw ReportedError(std::move(report), e);
  }
  report["authorized"] = json::array();
  for (const auto& h : res.authorized) report["authorized"].push_back(h.subject.str());
  report["excluded"] = exclusions_json(res.excluded);

  StoreSource source(a.store);
  std::vector<BufferRegistry> workstations(a.round.n_p);
  std::vector<orch::PatchProblem> problems;
  auto input = orch::dispatch_and_reconstruct(a.round.n_p, res.authorized, source, workstations, &problems);
  for (auto& h : res.authorized) secure_zero(h.auth.bytes);

  std::unique_ptr<train::EmbeddingTrainer> trainer;
  if (a.round.trainer == "external") {
    const std::string host = a.round.trainer_host;
    const std::uint16_t port = a.round.trainer_port;
    trainer = std::make_unique<train::ExternalTrainer>([host, port] { return bridge::connect_tcp(host, port); });
  } else {
    trainer = std::make_unique<train::StubTrainer>();
  }
  auto out = train::train_round(input, *trainer, a.round.n_p);

  json probs = json::array();
  for (const auto& p : problems)
    probs.push_back({{"subject", p.subject.str()}, {"patch_index", p.patch_index},
                     {"code", to_string(p.code)}, {"detail", p.detail}});
  report["problems"] = probs;
  report["metrics"] = out.metrics.to_json();
  std::size_t live = 0;
  for (const auto& w : workstations) live += w.live_count();
  report["live_buffers"] = live;
  if (a.embeddings) {
    json e = json::object();
    for (const auto& [s, v] : out.embeddings) e[s.str()] = v;
    write_text(*a.embeddings, e.dump() + "\n");
    report["embeddings"] = a.embeddings->string();
  }
  return report;
}

json cmd_rtbf(const fs::path& vault_dir, const std::string& subject_text) {
  const SubjectId subject = SubjectId::parse(subject_text);
  vault::Vault vault(vault_dir);
  const bool revoked = vault.rtbf_revoke(subject);
  json pending = json::array();
  if (auto rec = vault.record(subject))
    for (auto i : rec->pending_gc) pending.push_back(i);
  return {{"command", "rtbf"}, {"subject", subject.str()}, {"revoked", revoked}, {"pending_gc", pending}};
}

json cmd_gc(const GcArgs& a) {
  vault::Vault vault(a.vault);
  StoreDirectory dir(a.store, a.offline);
  auto report = vault.gc_abandoned_shares(dir);
  json j = report.to_json();
  j["command"] = "gc";
  return j;
}

json cmd_scan(const fs::path& vault_dir, const std::vector<fs::path>& roots, const std::string& subject_text) {
  const SubjectId subject = SubjectId::parse(subject_text);
  vault::Vault vault(vault_dir);
  json holders = json::array();
  if (vault.holds_auth_bytes(subject)) holders.push_back("vault");
  std::size_t scanned = 0;
  for (const auto& root : roots) {
    if (!fs::exists(root)) continue;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (!e.is_regular_file() || e.path().extension() != ".share") continue;
      ++scanned;
      std::optional<vss::ShareGrid> g;
      try {
        g = share_format::read_file(e.path());
      } catch (const Error&) {
        continue;
      }
      if (g->subject == subject) holders.push_back(e.path().string());
      secure_zero(g->bytes);
    }
  }
  return {{"command", "scan"}, {"subject", subject.str()}, {"files_scanned", scanned},
          {"holders", holders}, {"clean", holders.empty()}};
}

json cmd_metrics(const MetricsArgs& a) {
  json report = {{"command", "metrics"}, {"metric", a.metric}, {"seed", a.seed}};
  if (a.metric == "bruteforce") {
    Dimensions d{a.width, a.height, a.channels};
    if (a.shares) {
      LoadedShares loaded;
      load_shares(*a.shares, loaded);
      d = loaded.auth.empty() ? loaded.privates.begin()->second.begin()->second.dims
                              : loaded.auth.begin()->second.dims;
    }
    report["bruteforce"] = metrics::to_json(metrics::brute_force_log_probability(d.width, d.height, d.channels), d);
    return report;
  }
  if (a.metric != "npcr" && a.metric != "entropy" && a.metric != "corr")
    fail(ErrorCode::invalid_argument, "unknown metric " + a.metric);
  if (!a.shares) fail(ErrorCode::invalid_argument, a.metric + " needs --shares");

  LoadedShares loaded;
  load_shares(*a.shares, loaded);
  json subjects = json::array();
  for (auto& [subject, privs] : loaded.privates) {
    json s = {{"subject", subject.str()}};
    auto as = loaded.auth.find(subject);
    // Patches exist only in memory, and only when the AS sits next to the shares.
    std::vector<vss::PatchImage> patches;
    if (as != loaded.auth.end())
      for (const auto& [i, g] : privs) patches.push_back(vss::reconstruct_patch(as->second, g));

    json kinds = json::array();
    for (const auto& [i, g] : privs) {
      json k = {{"patch_index", i}};
      if (i < kPatchKindCount) k["kind"] = to_string(static_cast<PatchKind>(i));
      if (a.metric == "entropy") {
        json ch = json::array();
        double sum = 0;
        for (std::size_t c = 0; c < g.dims.channels; ++c) {
          const double h = metrics::shannon_entropy(g.bytes, g.dims, c);
          ch.push_back(h);
          sum += h;
        }
        k["entropy_per_channel"] = ch;
        k["entropy_mean"] = sum / g.dims.channels;
      } else if (a.metric == "corr") {
        json adj = json::object();
        for (auto dir : metrics::kAllDirections) {
          json per = json::array();
          for (std::size_t c = 0; c < g.dims.channels; ++c) {
            auto r = metrics::adjacent_correlation(g.bytes, g.dims, dir, c);
            per.push_back(r ? json(*r) : json(nullptr));
          }
          adj[std::string(metrics::to_string(dir))] = per;
        }
        k["adjacent"] = adj;
        if (!patches.empty()) {
          auto r = metrics::patch_share_correlation(patches[kinds.size()], g);
          k["patch_share"] = r ? json(*r) : json(nullptr);
        }
      } else if (!patches.empty()) {
        k["npcr"] = metrics::to_json(metrics::npcr_campaign(patches[kinds.size()], a.trials, a.seed));
      }
      kinds.push_back(k);
    }
    if (a.metric == "npcr" && patches.empty())
      fail(ErrorCode::not_found, "npcr needs the AS file of " + subject.str() + " next to its shares");
    s["kinds"] = kinds;
    if (a.samples > 0 && !patches.empty()) {
      json battery = json::array();
      for (const auto& q : metrics::share_quality_battery(patches, a.samples, a.seed)) battery.push_back(metrics::to_json(q));
      s["battery"] = battery;
    }
    for (auto& p : patches) secure_zero(p.pixels);
    subjects.push_back(s);
  }
  report["subjects"] = subjects;
  return report;
}

json cmd_simulate(const SimulateArgs& a) {
  auto scenario = sim::Scenario::from_json(read_json(a.scenario));
  auto r = sim::run_scenario(scenario, a.seed);
  if (a.trace) write_text(*a.trace, r.trace_jsonl());
  if (a.state) write_text(*a.state, r.final_state.dump(2) + "\n");
  json lateral = json::array(), unsafe = json::array();
  for (const auto& [x, y] : sim::lateral_workstation_links(r)) lateral.push_back(x + "<->" + y);
  for (const auto& [x, y] : sim::unsafe_single_links(r)) unsafe.push_back(x + "<->" + y);
  json rounds = json::array();
  for (const auto& rd : r.final_state.at("orchestrator").at("rounds"))
    rounds.push_back({{"round_id", rd.at("round_id")}, {"status", rd.at("status")},
                      {"abort_reason", rd.value("abort_reason", "")}, {"dropped", rd.at("dropped").size()}});
  return {{"command", "simulate"},
          {"seed", a.seed},
          {"scenario", a.scenario.string()},
          {"messages", r.trace.size()},
          {"end_time", sim::to_seconds(r.end_time)},
          {"trace_hash", r.trace_hash()},
          {"rounds", rounds},
          {"audit",
           {{"lateral_workstation_links", lateral},
            {"unsafe_single_links", unsafe},
            {"conservation_violations", sim::conservation_violations(r)}}}};
}

namespace {

void render(const json& j, const std::string& prefix, std::ostringstream& os) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) render(v, prefix.empty() ? k : prefix + "." + k, os);
  } else if (j.is_array() && !j.empty() && (j[0].is_object() || j[0].is_array())) {
    for (std::size_t i = 0; i < j.size(); ++i) render(j[i], prefix + "[" + std::to_string(i) + "]", os);
  } else {
    os << prefix << ": " << (j.is_string() ? j.get<std::string>() : j.dump()) << "\n";
  }
}

}  // namespace

std::string render_text(const json& report) {
  std::ostringstream os;
  render(report, "", os);
  return os.str();
}

}  // namespace voidface::cli
