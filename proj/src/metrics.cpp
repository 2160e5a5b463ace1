#include "voidface/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "voidface/error.hpp"
#include "voidface/kernels.hpp"

namespace voidface::metrics {

using nlohmann::json;

double npcr(std::span<const Byte> a, std::span<const Byte> b) {
  if (a.size() != b.size()) fail(ErrorCode::dimension, "npcr inputs differ in size");
  if (a.empty()) fail(ErrorCode::dimension, "npcr of empty inputs");
  return 100.0 * static_cast<double>(kernels::count_differences(a, b)) /
         static_cast<double>(a.size());
}

double uniform_npcr_sigma(std::size_t n) {
  const double p = 255.0 / 256.0;
  return 100.0 * std::sqrt(p * (1 - p) / static_cast<double>(n));
}

RngFactory seeded_factory() {
  return [](std::uint64_t seed) { return std::make_unique<SeededRandom>(seed); };
}

bool NpcrCampaign::within_3_sigma() const { return std::abs(mean - theoretical) <= 3 * sigma; }

NpcrCampaign npcr_campaign(const vss::PatchImage& patch, std::size_t trials, std::uint64_t seed,
                           const RngFactory& factory) {
  if (trials < 2) fail(ErrorCode::invalid_argument, "npcr campaign needs at least 2 trials");
  patch.validate();
  std::vector<std::vector<Byte>> shares(trials);
  const auto n = static_cast<std::int64_t>(trials);
#pragma omp parallel for schedule(static)
  for (std::int64_t t = 0; t < n; ++t) {
    auto rng = factory(seed + static_cast<std::uint64_t>(t));
    auto as = vss::generate_random_grid(patch.dims, *rng);
    shares[t] = vss::generate_private_share(patch, as).bytes;
  }
  NpcrCampaign c;
  c.trials = trials;
  c.reference = static_cast<std::size_t>(factory(seed + trials)->uniform_below(trials));
  c.sigma = uniform_npcr_sigma(patch.dims.byte_count());
  std::vector<double> values(trials, 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t t = 0; t < n; ++t)
    if (static_cast<std::size_t>(t) != c.reference) values[t] = npcr(shares[c.reference], shares[t]);
  c.min = 100;
  c.max = 0;
  double sum = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    if (t == c.reference) continue;
    sum += values[t];
    c.min = std::min(c.min, values[t]);
    c.max = std::max(c.max, values[t]);
  }
  c.mean = sum / static_cast<double>(trials - 1);
  return c;
}

double shannon_entropy(std::span<const Byte> bytes, Dimensions dims, std::size_t channel) {
  if (channel >= dims.channels) fail(ErrorCode::invalid_argument, "channel out of range");
  if (bytes.size() != dims.byte_count()) fail(ErrorCode::dimension, "byte count does not match dimensions");
  const auto h = kernels::histogram(bytes, channel, dims.channels);
  const double n = static_cast<double>(dims.pixel_count());
  double H = 0;
  for (auto count : h)
    if (count) {
      const double p = static_cast<double>(count) / n;
      H -= p * std::log2(p);
    }
  return H;
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::horizontal: return "horizontal";
    case Direction::vertical: return "vertical";
    case Direction::diagonal: return "diagonal";
  }
  return "unknown";
}

std::optional<double> adjacent_correlation(std::span<const Byte> bytes, Dimensions dims,
                                           Direction dir, std::size_t channel) {
  if (dims.width < 2 || dims.height < 2) fail(ErrorCode::dimension, "image must be at least 2x2");
  if (channel >= dims.channels) fail(ErrorCode::invalid_argument, "channel out of range");
  if (bytes.size() != dims.byte_count()) fail(ErrorCode::dimension, "byte count does not match dimensions");
  const std::size_t dx = dir == Direction::vertical ? 0 : 1;
  const std::size_t dy = dir == Direction::horizontal ? 0 : 1;
  const std::size_t w = dims.width, h = dims.height, c = dims.channels;
  std::vector<Byte> x, y;
  x.reserve((w - dx) * (h - dy));
  y.reserve(x.capacity());
  for (std::size_t r = 0; r + dy < h; ++r)
    for (std::size_t col = 0; col + dx < w; ++col) {
      x.push_back(bytes[(r * w + col) * c + channel]);
      y.push_back(bytes[((r + dy) * w + col + dx) * c + channel]);
    }
  double r = 0;
  if (!kernels::pearson(kernels::pair_moments(x, y), r)) return std::nullopt;
  return r;
}

std::optional<double> patch_share_correlation(const vss::PatchImage& patch,
                                              const vss::ShareGrid& share) {
  if (patch.pixels.size() != share.bytes.size())
    fail(ErrorCode::dimension, "patch and share differ in size");
  double r = 0;
  if (!kernels::pearson(kernels::pair_moments(patch.pixels, share.bytes), r)) return std::nullopt;
  return r;
}

std::string BruteForce::render(int digits) const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*fe%lld", digits - 1, mantissa, static_cast<long long>(exponent));
  return buf;
}

BruteForce brute_force_log_probability(std::size_t width, std::size_t height, std::size_t channels) {
  if (width == 0 || height == 0 || channels == 0)
    fail(ErrorCode::invalid_argument, "dimensions must be positive");
  BruteForce b;
  const long double n = static_cast<long double>(width) * height * channels;
  b.log10_p = -n * std::log10(256.0L);
  const long double e = std::floor(b.log10_p);
  b.exponent = static_cast<std::int64_t>(e);
  b.mantissa = static_cast<double>(std::pow(10.0L, b.log10_p - e));
  return b;
}

std::vector<KindQuality> share_quality_battery(std::span<const vss::PatchImage> patches,
                                               std::size_t samples, std::uint64_t seed,
                                               const RngFactory& factory) {
  if (samples < 2) fail(ErrorCode::invalid_argument, "battery needs at least 2 samples");
  std::vector<KindQuality> out;
  for (std::size_t k = 0; k < patches.size(); ++k) {
    const auto& patch = patches[k];
    patch.validate();
    const std::uint64_t kind_seed = derive_seed(seed, k);
    const std::size_t ch = patch.dims.channels;
    KindQuality q;
    q.patch_index = patch.patch_index;
    q.samples = samples;

    struct Sample {
      std::vector<double> entropy;
      std::array<double, 3> adj{};
      std::size_t undefined = 0;
      double ps = 0;
    };
    std::vector<Sample> per(samples);
    const auto n = static_cast<std::int64_t>(samples);
#pragma omp parallel for schedule(static)
    for (std::int64_t t = 0; t < n; ++t) {
      auto rng = factory(kind_seed + static_cast<std::uint64_t>(t));
      auto as = vss::generate_random_grid(patch.dims, *rng);
      auto share = vss::generate_private_share(patch, as);
      auto& s = per[t];
      for (std::size_t c = 0; c < ch; ++c) {
        s.entropy.push_back(shannon_entropy(share.bytes, patch.dims, c));
        for (std::size_t d = 0; d < 3; ++d) {
          auto r = adjacent_correlation(share.bytes, patch.dims, kAllDirections[d], c);
          if (r) s.adj[d] += std::abs(*r) / static_cast<double>(ch);
          else ++s.undefined;
        }
      }
      auto r = patch_share_correlation(patch, share);
      if (r) s.ps = std::abs(*r);
      else ++s.undefined;
    }
    q.entropy_per_channel.assign(ch, 0.0);
    std::array<double, 3> adj{};
    for (const auto& s : per) {
      for (std::size_t c = 0; c < ch; ++c) q.entropy_per_channel[c] += s.entropy[c] / n;
      for (std::size_t d = 0; d < 3; ++d) adj[d] += s.adj[d] / n;
      q.mean_abs_patch_share += s.ps / n;
      q.undefined_correlations += s.undefined;
    }
    for (std::size_t d = 0; d < 3; ++d) q.mean_abs_adjacent[kAllDirections[d]] = adj[d];
    q.npcr = npcr_campaign(patch, samples, kind_seed ^ 0x6e706372u, factory);
    out.push_back(std::move(q));
  }
  return out;
}

json to_json(const NpcrCampaign& c) {
  return {{"metric", "npcr"},
          {"trials", c.trials},
          {"reference_trial", c.reference},
          {"mean", c.mean},
          {"min", c.min},
          {"max", c.max},
          {"theoretical", c.theoretical},
          {"theoretical_sigma", c.sigma},
          {"within_3_sigma", c.within_3_sigma()}};
}

json to_json(const KindQuality& q) {
  json adj = json::object();
  for (const auto& [d, v] : q.mean_abs_adjacent) adj[std::string(to_string(d))] = v;
  std::string kind = q.patch_index < kAllPatchKinds.size()
                         ? std::string(to_string(static_cast<PatchKind>(q.patch_index)))
                         : "patch_" + std::to_string(q.patch_index);
  return {{"patch_kind", kind},
          {"patch_index", q.patch_index},
          {"samples", q.samples},
          {"entropy_per_channel", q.entropy_per_channel},
          {"mean_abs_adjacent_correlation", adj},
          {"mean_abs_patch_share_correlation", q.mean_abs_patch_share},
          {"undefined_correlations", q.undefined_correlations},
          {"npcr", to_json(q.npcr)}};
}

json to_json(const BruteForce& b, Dimensions dims) {
  return {{"metric", "bruteforce"},
          {"width", dims.width},
          {"height", dims.height},
          {"channels", dims.channels},
          {"log10_p", static_cast<double>(b.log10_p)},
          {"mantissa", b.mantissa},
          {"exponent", b.exponent},
          {"rendered", b.render()}};
}

}  // namespace voidface::metrics
