#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "voidface/bridge.hpp"
#include "voidface/secure_buffer.hpp"
#include "voidface/types.hpp"

namespace voidface::train {

inline constexpr std::size_t kEmbeddingDim = 512;
using Embedding = std::vector<float>;

// Borrowed view of a reconstructed patch.
struct PatchView {
  SubjectId subject;
  std::uint8_t patch_index = 0;
  Dimensions dims;
  std::span<const Byte> pixels;
};

// Per-patch feature extraction (one PTN branch per patch index) plus an
// aggregation step producing the global vector.
class EmbeddingTrainer {
 public:
  virtual ~EmbeddingTrainer() = default;
  virtual std::string name() const = 0;
  virtual Embedding extract(const PatchView& patch) = 0;
  virtual Embedding aggregate(const SubjectId& subject, std::span<const Embedding> features) = 0;
};

// Deterministic, stateless: each branch is a fixed-seed hashed projection of
// the patch bytes; aggregation concatenates and projects back to 512.
class StubTrainer final : public EmbeddingTrainer {
 public:
  explicit StubTrainer(std::uint64_t seed = 0x566f6964u) : seed_(seed) {}
  std::string name() const override { return "stub"; }
  Embedding extract(const PatchView& patch) override;
  Embedding aggregate(const SubjectId& subject, std::span<const Embedding> features) override;

 private:
  std::uint64_t seed_;
};

// Talks TRAIN_PATCH / TRAIN_RESULT frames to an external trainer service.
// A failed exchange reconnects and retries; after `attempts` failures the
// call throws a trainer error.
class ExternalTrainer final : public EmbeddingTrainer {
 public:
  using Connector = std::function<std::unique_ptr<bridge::FrameChannel>()>;
  explicit ExternalTrainer(Connector connect, int attempts = 3,
                           std::chrono::milliseconds timeout = std::chrono::seconds(30));
  std::string name() const override { return "external"; }
  Embedding extract(const PatchView& patch) override;
  Embedding aggregate(const SubjectId& subject, std::span<const Embedding> features) override;

 private:
  Embedding exchange(nlohmann::json request);

  Connector connect_;
  int attempts_;
  std::chrono::milliseconds timeout_;
  std::unique_ptr<bridge::FrameChannel> channel_;
  std::uint64_t next_msg_ = 1;
};

// Request bodies of the bridge protocol.
nlohmann::json make_train_patch(std::uint64_t msg_id, const PatchView& patch);
nlohmann::json make_train_aggregate(std::uint64_t msg_id, const SubjectId& subject,
                                    std::span<const Embedding> features);
// Embedding from a TRAIN_RESULT body; trainer error for ERROR replies or a
// wrong vector length.
Embedding parse_train_result(const nlohmann::json& body, std::uint64_t expected_msg_id);

// A patch reconstructed at a workstation. Bytes live in a sensitive buffer
// registered with that workstation.
struct ReconstructedPatch {
  std::uint8_t patch_index = 0;
  Dimensions dims;
  SensitiveBuffer pixels;
};

struct SubjectPatches {
  SubjectId subject;
  // Slot p holds patch p, or nothing when the patch was unavailable.
  std::vector<std::optional<ReconstructedPatch>> patches;
};

struct PatchFailure {
  SubjectId subject;
  std::uint8_t patch_index = 0;
  std::string reason;
};

struct RoundMetrics {
  std::string trainer;
  std::size_t subjects = 0;
  std::size_t patches_trained = 0;
  std::vector<PatchFailure> failures;
  std::string output_digest;  // sha256 over all embeddings, hex

  nlohmann::json to_json() const;
};

struct RoundOutput {
  std::map<SubjectId, Embedding> embeddings;
  RoundMetrics metrics;
};

// Runs extract for every available patch and aggregates per subject over
// n_p slots, substituting zero vectors for missing or failed patches. Every
// patch buffer is wiped before return, including on error.
RoundOutput train_round(std::vector<SubjectPatches>& input, EmbeddingTrainer& trainer,
                        std::size_t n_p);

std::string digest_embeddings(const std::map<SubjectId, Embedding>& embeddings);

}  // namespace voidface::train
