#include "voidface/trainer.hpp"

#include <cmath>
#include <cstring>

#include <sodium.h>

#include "voidface/error.hpp"
#include "voidface/kernels.hpp"
#include "voidface/random.hpp"

namespace voidface::train {

using nlohmann::json;

Embedding StubTrainer::extract(const PatchView& patch) {
  if (patch.pixels.size() != patch.dims.byte_count())
    fail(ErrorCode::dimension, "patch byte count does not match dimensions");
  Embedding out(kEmbeddingDim);
  kernels::hashed_projection(patch.pixels, derive_seed(seed_, patch.patch_index), out);
  return out;
}

Embedding StubTrainer::aggregate(const SubjectId&, std::span<const Embedding> features) {
  std::vector<float> concat;
  concat.reserve(features.size() * kEmbeddingDim);
  for (const auto& f : features) {
    if (f.size() != kEmbeddingDim) fail(ErrorCode::dimension, "feature vector is not 512-d");
    concat.insert(concat.end(), f.begin(), f.end());
  }
  Embedding out(kEmbeddingDim);
  kernels::hashed_projection_f(concat, derive_seed(seed_, 0xA66), out);
  return out;
}

json make_train_patch(std::uint64_t msg_id, const PatchView& patch) {
  return {{"type", "TRAIN_PATCH"},
          {"msg_id", msg_id},
          {"op", "extract"},
          {"subject", patch.subject.str()},
          {"patch_index", patch.patch_index},
          {"width", patch.dims.width},
          {"height", patch.dims.height},
          {"channels", patch.dims.channels},
          {"payload", bridge::base64_encode(patch.pixels)}};
}

json make_train_aggregate(std::uint64_t msg_id, const SubjectId& subject,
                          std::span<const Embedding> features) {
  json feats = json::array();
  for (const auto& f : features) feats.push_back(f);
  return {{"type", "TRAIN_PATCH"},
          {"msg_id", msg_id},
          {"op", "aggregate"},
          {"subject", subject.str()},
          {"features", feats}};
}

Embedding parse_train_result(const json& body, std::uint64_t expected_msg_id) {
  const std::string type = body.value("type", "");
  if (type == "ERROR")
    fail(ErrorCode::trainer, "trainer reported: " + body.value("error", std::string("unspecified")));
  if (type != "TRAIN_RESULT") fail(ErrorCode::trainer, "unexpected reply type '" + type + "'");
  if (body.value("msg_id", std::uint64_t{0}) != expected_msg_id)
    fail(ErrorCode::trainer, "reply for a different request");
  Embedding v;
  try {
    v = body.at("vector").get<Embedding>();
  } catch (const json::exception&) {
    fail(ErrorCode::trainer, "reply vector is not a float array");
  }
  if (v.size() != kEmbeddingDim)
    fail(ErrorCode::trainer, "reply vector has " + std::to_string(v.size()) + " entries");
  for (float x : v)
    if (!std::isfinite(x)) fail(ErrorCode::trainer, "reply vector has non-finite entries");
  return v;
}

ExternalTrainer::ExternalTrainer(Connector connect, int attempts, std::chrono::milliseconds timeout)
    : connect_(std::move(connect)), attempts_(std::max(1, attempts)), timeout_(timeout) {}

Embedding ExternalTrainer::exchange(json request) {
  std::string last_error;
  for (int attempt = 0; attempt < attempts_; ++attempt) {
    const std::uint64_t id = next_msg_++;
    request["msg_id"] = id;
    json reply;
    try {
      if (!channel_) channel_ = connect_();
      channel_->send(request);
      reply = channel_->receive(timeout_);
    } catch (const Error& e) {
      last_error = e.what();
      channel_.reset();
      continue;
    }
    try {
      return parse_train_result(reply, id);
    } catch (const Error& e) {
      last_error = e.what();  // connection stays usable
    }
  }
  fail(ErrorCode::trainer, "external trainer failed after " + std::to_string(attempts_) +
                               " attempts: " + last_error);
}

Embedding ExternalTrainer::extract(const PatchView& patch) {
  return exchange(make_train_patch(0, patch));
}

Embedding ExternalTrainer::aggregate(const SubjectId& subject, std::span<const Embedding> features) {
  return exchange(make_train_aggregate(0, subject, features));
}

json RoundMetrics::to_json() const {
  json f = json::array();
  for (const auto& x : failures)
    f.push_back({{"subject", x.subject.str()}, {"patch_index", x.patch_index}, {"reason", x.reason}});
  return {{"trainer", trainer},
          {"subjects", subjects},
          {"patches_trained", patches_trained},
          {"failures", f},
          {"output_digest", output_digest}};
}

std::string digest_embeddings(const std::map<SubjectId, Embedding>& embeddings) {
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  for (const auto& [id, v] : embeddings) {
    const auto idb = id.bytes();
    crypto_hash_sha256_update(&st, idb.data(), idb.size());
    crypto_hash_sha256_update(&st, reinterpret_cast<const unsigned char*>(v.data()),
                              v.size() * sizeof(float));
  }
  unsigned char h[crypto_hash_sha256_BYTES];
  crypto_hash_sha256_final(&st, h);
  char hex[2 * crypto_hash_sha256_BYTES + 1];
  sodium_bin2hex(hex, sizeof hex, h, sizeof h);
  return hex;
}

RoundOutput train_round(std::vector<SubjectPatches>& input, EmbeddingTrainer& trainer,
                        std::size_t n_p) {
  struct WipeAll {
    std::vector<SubjectPatches>& in;
    ~WipeAll() {
      for (auto& s : in)
        for (auto& p : s.patches)
          if (p) p->pixels.wipe();
    }
  } wipe{input};

  if (input.empty()) fail(ErrorCode::no_data, "training round has no subjects");
  for (const auto& s : input) {
    bool any = false;
    for (const auto& p : s.patches) any = any || (p && !p->pixels.empty());
    if (!any) fail(ErrorCode::no_data, "subject " + s.subject.str() + " has no reconstructed patch");
    if (s.patches.size() > n_p) fail(ErrorCode::invalid_argument, "more patch slots than n_p");
  }

  RoundOutput out;
  out.metrics.trainer = trainer.name();
  out.metrics.subjects = input.size();
  for (auto& s : input) {
    std::vector<Embedding> features(n_p, Embedding(kEmbeddingDim, 0.0f));
    for (std::size_t slot = 0; slot < n_p; ++slot) {
      const auto idx = static_cast<std::uint8_t>(slot);
      if (slot >= s.patches.size() || !s.patches[slot] || s.patches[slot]->pixels.empty()) {
        out.metrics.failures.push_back({s.subject, idx, "unavailable"});
        continue;
      }
      const auto& p = *s.patches[slot];
      try {
        auto f = trainer.extract({s.subject, p.patch_index, p.dims, p.pixels.view()});
        if (f.size() != kEmbeddingDim) fail(ErrorCode::trainer, "feature is not 512-d");
        features[slot] = std::move(f);
        ++out.metrics.patches_trained;
      } catch (const Error& e) {
        out.metrics.failures.push_back({s.subject, idx, e.what()});
      }
      s.patches[slot]->pixels.wipe();
    }
    out.embeddings[s.subject] = trainer.aggregate(s.subject, features);
  }
  out.metrics.output_digest = digest_embeddings(out.embeddings);
  return out;
}

}  // namespace voidface::train
