#pragma once

// Subcommand bodies of the voidface tool. Each returns its JSON report and
// throws voidface::Error; the exit code is the error code.
//
// Filesystem layout used by the commands:
//   <vault>/                 persistent vault (log, AS files, snapshot)
//   <store>/inst-<k>/        grids held by storage institution k
//   <out>/                   prepare output: one AS and six PS files

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "voidface/error.hpp"
#include "voidface/orchestrator.hpp"

namespace voidface::cli {

namespace fs = std::filesystem;

// Fixed seed, or the OS generator when absent; reported as "seed".
struct SeedOption {
  std::optional<std::uint64_t> seed;
  nlohmann::json describe() const;
};

struct PrepareArgs {
  fs::path image, landmarks, out, vault;
  std::string subject;
  std::uint16_t size = 96;
  std::vector<std::string> allow{"lab"};
  SeedOption seed;
};
nlohmann::json cmd_prepare(const PrepareArgs& a);

struct DistributeArgs {
  fs::path shares, store, vault;
  std::string subject;
  std::size_t institutions = 6;
  bool keep_local = false;
  SeedOption seed;
};
nlohmann::json cmd_distribute(const DistributeArgs& a);

struct TrainArgs {
  fs::path vault, store;
  std::string requester = "lab";
  std::vector<std::string> subjects;
  orch::RoundConfig round;
  std::optional<fs::path> nodes;       // workstation profiles; selection is reported
  std::optional<fs::path> embeddings;  // write the global vectors here
};
nlohmann::json cmd_train(const TrainArgs& a);

nlohmann::json cmd_rtbf(const fs::path& vault, const std::string& subject);

struct GcArgs {
  fs::path vault, store;
  std::set<std::size_t> offline;
};
nlohmann::json cmd_gc(const GcArgs& a);

// Files and vault entries still holding bytes of the subject's shares.
nlohmann::json cmd_scan(const fs::path& vault, const std::vector<fs::path>& roots,
                        const std::string& subject);

struct MetricsArgs {
  std::string metric;  // npcr | entropy | corr | bruteforce
  std::optional<fs::path> shares;
  std::size_t trials = 100;
  std::size_t samples = 0;  // > 0: also run the battery on fresh shares
  std::uint64_t seed = 2024;
  std::uint16_t width = 96, height = 96;
  std::uint8_t channels = 3;
};
nlohmann::json cmd_metrics(const MetricsArgs& a);

struct SimulateArgs {
  fs::path scenario;
  std::uint64_t seed = 7;
  std::optional<fs::path> trace, state;
};
nlohmann::json cmd_simulate(const SimulateArgs& a);

// A failure that still has a report to show (e.g. train with every subject
// excluded).
class ReportedError : public Error {
 public:
  ReportedError(nlohmann::json report, const Error& cause)
      : Error(cause.code(), cause.what()), report_(std::move(report)) {}
  const nlohmann::json& report() const { return report_; }

 private:
  nlohmann::json report_;
};

// Human-readable rendering for text mode.
std::string render_text(const nlohmann::json& report);

}  // namespace voidface::cli
