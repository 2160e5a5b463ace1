// voidface: operator tool for share preparation, distribution, training,
// erasure and the metric / simulation reports.

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace voidface;
using nlohmann::json;

namespace {

constexpr const char* kExitCodes = R"(Exit codes:
  0  success
  1  usage error
  2  io                  3  format            4  dimension
  5  landmark-bounds     6  incomplete-landmarks
  7  conflict            8  not-found         9  authorization
  10 no-data             11 incomplete-share  12 capacity
  13 config              14 ordering          15 insufficient-capacity
  16 invalid-argument    17 trainer

Option values come from flags, then VOIDFACE_<NAME> environment variables,
then the JSON file given by --config (or VOIDFACE_CONFIG). Top-level keys
apply to every subcommand; an object keyed by subcommand name overrides them.)";

std::string env_name(const std::string& long_name) {
  std::string out = "VOIDFACE_";
  for (char c : long_name) out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string config_path(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") return argv[i + 1];
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  if (const char* e = std::getenv("VOIDFACE_CONFIG")) return e;
  return {};
}

std::string as_option_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& x : v) out += (out.empty() ? "" : ",") + as_option_text(x);
    return out;
  }
  return v.dump();
}

// Environment names for every option, and config-file values as defaults;
// CLI11 applies the environment only when the flag is absent, so flags win,
// then the environment, then the file.
void bind_sources(CLI::App& app, const json& cfg, const json* section) {
  for (CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "help-all" || name == "config" || !opt->get_lnames().size()) continue;
    opt->envname(env_name(name));
    const json* v = nullptr;
    if (section && section->contains(name)) v = &section->at(name);
    else if (cfg.contains(name) && !cfg.at(name).is_object()) v = &cfg.at(name);
    if (v) opt->default_val(as_option_text(*v));
  }
  for (CLI::App* sub : app.get_subcommands([](CLI::App*) { return true; })) {
    const json* s = cfg.contains(sub->get_name()) && cfg.at(sub->get_name()).is_object()
                        ? &cfg.at(sub->get_name())
                        : nullptr;
    bind_sources(*sub, cfg, s);
  }
}

void emit(const json& report, bool as_json) {
  if (as_json) {
    std::cout << report.dump(2) << "\n";
    return;
  }
  const json seed = report.value("seed", json(nullptr));
  std::cout << "# seed: " << (seed.is_null() ? "none" : seed.is_string() ? seed.get<std::string>() : seed.dump())
            << "\n";
  std::cout << cli::render_text(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VOIDFace share preparation, training and audit tool"};
  app.footer(kExitCodes);
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  bool as_json = false;
  std::string config_file;
  app.add_flag("--json", as_json, "Machine-readable output");
  app.add_option("--config", config_file, "JSON config file");

  std::function<json()> run;

  cli::PrepareArgs prep;
  std::optional<std::uint64_t> prep_seed;
  auto* p = app.add_subcommand("prepare", "Extract patches, share them, register the subject (not idempotent)");
  p->add_option("--image", prep.image, "Face image (PNG or PPM)")->required();
  p->add_option("--landmarks", prep.landmarks, "Landmark JSON")->required();
  p->add_option("--subject", prep.subject, "Subject UUID")->required();
  p->add_option("--size", prep.size, "Patch side in pixels")->capture_default_str();
  p->add_option("--out", prep.out, "Output directory for the share files")->required();
  p->add_option("--vault", prep.vault, "Vault directory")->required();
  p->add_option("--allow", prep.allow, "Requesters allowed to train on the subject")->delimiter(',');
  p->add_option("--seed", prep_seed, "Fixed RNG seed (default: OS generator)");
  p->callback([&] { run = [&] { prep.seed.seed = prep_seed; return cli::cmd_prepare(prep); }; });

  cli::DistributeArgs dist;
  std::optional<std::uint64_t> dist_seed;
  auto* d = app.add_subcommand("distribute", "Place private shares on institutions (not idempotent)");
  d->add_option("--shares", dist.shares, "Directory written by prepare")->required();
  d->add_option("--subject", dist.subject, "Subject UUID")->required();
  d->add_option("--institutions", dist.institutions, "Number of institutions N")->capture_default_str();
  d->add_option("--store", dist.store, "Institution store root")->required();
  d->add_option("--vault", dist.vault, "Vault directory")->required();
  d->add_flag("--keep-local", dist.keep_local, "Keep the prepare output instead of shredding it");
  d->add_option("--seed", dist_seed, "Fixed RNG seed (default: OS generator)");
  d->callback([&] { run = [&] { dist.seed.seed = dist_seed; return cli::cmd_distribute(dist); }; });

  cli::TrainArgs tr;
  std::optional<std::string> round_file, nodes_file, emb_file;
  auto* t = app.add_subcommand("train", "Validate, reconstruct at workstations and train one round (idempotent)");
  t->add_option("--vault", tr.vault, "Vault directory")->required();
  t->add_option("--store", tr.store, "Institution store root")->required();
  t->add_option("--requester", tr.requester, "Requesting party")->capture_default_str();
  t->add_option("--subjects", tr.subjects, "Subject UUIDs")->delimiter(',')->required();
  t->add_option("--round", round_file, "Round config JSON (n_p, deadline_s, trainer, ...)");
  t->add_option("--n-p", tr.round.n_p, "Patches per subject")->capture_default_str();
  t->add_option("--trainer", tr.round.trainer, "stub or external")->check(CLI::IsMember({"stub", "external"}));
  t->add_option("--trainer-host", tr.round.trainer_host, "External trainer host");
  t->add_option("--trainer-port", tr.round.trainer_port, "External trainer port");
  t->add_option("--nodes", nodes_file, "Workstation profiles JSON; the selection is reported");
  t->add_option("--embeddings", emb_file, "Write the global vectors to this JSON file");
  t->callback([&] {
    run = [&] {
      if (round_file) {
        std::ifstream in(*round_file);
        if (!in) fail(ErrorCode::io, "cannot read " + *round_file);
        json r;
        try {
          r = json::parse(in);
        } catch (const json::exception& e) {
          fail(ErrorCode::config, *round_file + ": " + e.what());
        }
        // Flags given explicitly still win over the file.
        json merged = r;
        if (t->count("--n-p")) merged["n_p"] = tr.round.n_p;
        if (t->count("--trainer")) merged["trainer"] = tr.round.trainer;
        if (t->count("--trainer-host")) merged["trainer_host"] = tr.round.trainer_host;
        if (t->count("--trainer-port")) merged["trainer_port"] = tr.round.trainer_port;
        tr.round = orch::RoundConfig::from_json(merged);
      }
      if (nodes_file) tr.nodes = *nodes_file;
      if (emb_file) tr.embeddings = *emb_file;
      return cli::cmd_train(tr);
    };
  });

  std::string rtbf_vault, rtbf_subject;
  auto* r = app.add_subcommand("rtbf", "Revoke a subject's AS (idempotent; a second call reports revoked=false)");
  r->add_option("--vault", rtbf_vault, "Vault directory")->required();
  r->add_option("--subject", rtbf_subject, "Subject UUID")->required();
  r->callback([&] { run = [&] { return cli::cmd_rtbf(rtbf_vault, rtbf_subject); }; });

  cli::GcArgs gc;
  std::vector<std::size_t> offline;
  auto* g = app.add_subcommand("gc", "Delete abandoned private shares (idempotent)");
  g->add_option("--vault", gc.vault, "Vault directory")->required();
  g->add_option("--store", gc.store, "Institution store root")->required();
  g->add_option("--offline", offline, "Institution indices to treat as unreachable")->delimiter(',');
  g->callback([&] {
    run = [&] {
      gc.offline = {offline.begin(), offline.end()};
      return cli::cmd_gc(gc);
    };
  });

  std::string scan_vault, scan_subject;
  std::vector<std::string> scan_roots;
  auto* s = app.add_subcommand("scan", "Find remaining share bytes of a subject (read-only)");
  s->add_option("--vault", scan_vault, "Vault directory")->required();
  s->add_option("--roots", scan_roots, "Directories to search")->delimiter(',')->required();
  s->add_option("--subject", scan_subject, "Subject UUID")->required();
  s->callback([&] {
    run = [&] {
      return cli::cmd_scan(scan_vault, {scan_roots.begin(), scan_roots.end()}, scan_subject);
    };
  });

  cli::MetricsArgs met;
  std::optional<std::string> met_shares;
  auto* m = app.add_subcommand("metrics", "Share quality and brute-force reports (read-only)");
  m->add_option("metric", met.metric, "npcr | entropy | corr | bruteforce")
      ->required()
      ->check(CLI::IsMember({"npcr", "entropy", "corr", "bruteforce"}));
  m->add_option("--shares", met_shares, "Directory of share files");
  m->add_option("--trials", met.trials, "NPCR trials per patch")->capture_default_str();
  m->add_option("--samples", met.samples, "Fresh shares per patch for the quality battery");
  m->add_option("--seed", met.seed, "Campaign seed")->capture_default_str();
  m->add_option("--width", met.width, "Bruteforce grid width")->capture_default_str();
  m->add_option("--height", met.height, "Bruteforce grid height")->capture_default_str();
  m->add_option("--channels", met.channels, "Bruteforce grid channels")->default_str("3");
  m->callback([&] {
    run = [&] {
      if (met_shares) met.shares = *met_shares;
      return cli::cmd_metrics(met);
    };
  });

  cli::SimulateArgs simargs;
  std::optional<std::string> trace_file, state_file;
  auto* sim = app.add_subcommand("simulate", "Run a network scenario (deterministic per seed)");
  sim->add_option("--scenario", simargs.scenario, "Scenario JSON")->required();
  sim->add_option("--seed", simargs.seed, "Simulation seed")->capture_default_str();
  sim->add_option("--trace", trace_file, "Write the JSON-lines trace here");
  sim->add_option("--state", state_file, "Write the final node states here");
  sim->callback([&] {
    run = [&] {
      if (trace_file) simargs.trace = *trace_file;
      if (state_file) simargs.state = *state_file;
      return cli::cmd_simulate(simargs);
    };
  });

  try {
    json cfg = json::object();
    if (const auto path = config_path(argc, argv); !path.empty()) {
      std::ifstream in(path);
      if (!in) {
        std::cerr << "error: cannot read config " << path << "\n";
        return static_cast<int>(ErrorCode::io);
      }
      try {
        cfg = json::parse(in);
      } catch (const json::exception& e) {
        std::cerr << "error: config " << path << ": " << e.what() << "\n";
        return static_cast<int>(ErrorCode::config);
      }
    }
    bind_sources(app, cfg, nullptr);
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    emit(run(), as_json);
    return 0;
  } catch (const cli::ReportedError& e) {
    json report = e.report();
    report["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
    emit(report, as_json);
    return static_cast<int>(e.code());
  } catch (const Error& e) {
    if (as_json)
      std::cout << json{{"error", {{"code", to_string(e.code())}, {"message", e.what()}}}}.dump(2) << "\n";
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error (io): " << e.what() << "\n";
    return static_cast<int>(ErrorCode::io);
  }
}
