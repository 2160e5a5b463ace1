#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "voidface/random.hpp"
#include "voidface/vss.hpp"

namespace voidface::metrics {

// 100 * 255/256: expected NPCR of two independent uniform byte grids.
inline constexpr double kUniformNpcr = 100.0 * 255.0 / 256.0;

// Percentage of differing byte positions (all channels).
double npcr(std::span<const Byte> a, std::span<const Byte> b);

// One binomial standard error of npcr() for n positions under the uniform model, in percent.
double uniform_npcr_sigma(std::size_t n_positions);

using RngFactory = std::function<std::unique_ptr<RandomSource>(std::uint64_t seed)>;
RngFactory seeded_factory();

struct NpcrCampaign {
  std::size_t trials = 0;
  std::size_t reference = 0;  // trial whose share is compared with the rest
  double mean = 0;
  double min = 0;
  double max = 0;
  double theoretical = kUniformNpcr;
  double sigma = 0;

  bool within_3_sigma() const;
};

// Shares the patch `trials` times, trial t drawing from factory(seed + t),
// then compares one randomly chosen share against the other trials - 1.
NpcrCampaign npcr_campaign(const vss::PatchImage& patch, std::size_t trials,
                           std::uint64_t seed, const RngFactory& factory = seeded_factory());

// Bits, over the 256-bin histogram of one channel.
double shannon_entropy(std::span<const Byte> bytes, Dimensions dims, std::size_t channel);

enum class Direction { horizontal, vertical, diagonal };
inline constexpr Direction kAllDirections[] = {Direction::horizontal, Direction::vertical,
                                               Direction::diagonal};
std::string_view to_string(Direction d);

// Pearson r between each pixel and its right / lower / lower-right
// neighbour. Empty when either sequence is constant.
std::optional<double> adjacent_correlation(std::span<const Byte> bytes, Dimensions dims,
                                           Direction dir, std::size_t channel);

// Pearson r over the flattened bytes. Empty when either side is constant.
std::optional<double> patch_share_correlation(const vss::PatchImage& patch,
                                              const vss::ShareGrid& share);

struct BruteForce {
  long double log10_p = 0;
  double mantissa = 0;
  std::int64_t exponent = 0;

  std::string render(int digits = 10) const;  // "9.581622535e-66584"
};

// Probability of guessing a uniformly random grid, in log space.
BruteForce brute_force_log_probability(std::size_t width, std::size_t height,
                                       std::size_t channels);

struct KindQuality {
  std::uint8_t patch_index = 0;
  std::size_t samples = 0;
  std::vector<double> entropy_per_channel;
  std::map<Direction, double> mean_abs_adjacent;  // over shares and channels
  double mean_abs_patch_share = 0;
  NpcrCampaign npcr;
  std::size_t undefined_correlations = 0;
};

// Fresh shares of each patch: entropy, adjacent correlation, NPCR and
// patch-share correlation, averaged over `samples` shares per patch.
std::vector<KindQuality> share_quality_battery(std::span<const vss::PatchImage> patches,
                                               std::size_t samples, std::uint64_t seed,
                                               const RngFactory& factory = seeded_factory());

// Report helpers; keys follow the metric names used on the command line.
nlohmann::json to_json(const NpcrCampaign& c);
nlohmann::json to_json(const KindQuality& q);
nlohmann::json to_json(const BruteForce& b, Dimensions dims);

}  // namespace voidface::metrics
