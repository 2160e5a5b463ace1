#pragma once

// Byte-level data-parallel kernels. Each kernel has an OpenMP version and a
// serial reference with the same contract; tests check them against each
// other and the benchmark target compares their throughput.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include "voidface/types.hpp"

namespace voidface::kernels {

using Histogram = std::array<std::uint64_t, 256>;

// Exact integer moments of a paired byte sequence.
struct PairMoments {
  std::uint64_t n = 0;
  std::uint64_t sum_x = 0;
  std::uint64_t sum_y = 0;
  std::uint64_t sum_xx = 0;
  std::uint64_t sum_yy = 0;
  std::uint64_t sum_xy = 0;

  bool operator==(const PairMoments&) const = default;
};

// dst[k] ^= src[k]
void xor_into(std::span<Byte> dst, std::span<const Byte> src);
void xor_into_serial(std::span<Byte> dst, std::span<const Byte> src);

// out[k] = a[k] ^ b[k]
void xor_bytes(std::span<const Byte> a, std::span<const Byte> b,
               std::span<Byte> out);
void xor_bytes_serial(std::span<const Byte> a, std::span<const Byte> b,
                      std::span<Byte> out);

// Histogram of every stride-th byte starting at offset.
Histogram histogram(std::span<const Byte> data, std::size_t offset = 0,
                    std::size_t stride = 1);
Histogram histogram_serial(std::span<const Byte> data, std::size_t offset = 0,
                           std::size_t stride = 1);

// Number of positions where a and b differ.
std::uint64_t count_differences(std::span<const Byte> a,
                                std::span<const Byte> b);
std::uint64_t count_differences_serial(std::span<const Byte> a,
                                       std::span<const Byte> b);

PairMoments pair_moments(std::span<const Byte> x, std::span<const Byte> y);
PairMoments pair_moments_serial(std::span<const Byte> x,
                                std::span<const Byte> y);

// Pearson coefficient from exact moments; false when either side has zero
// variance.
bool pearson(const PairMoments& m, double& r);

// Dense projection used by the stub embedding trainer:
// out[d] = sum_k w(seed, d, k) * (in[k] / 255 - 0.5) / sqrt(K), where
// w in {-1, +1} comes from a counter-based hash.
void hashed_projection(std::span<const Byte> in, std::uint64_t seed,
                       std::span<float> out);
void hashed_projection_serial(std::span<const Byte> in, std::uint64_t seed,
                              std::span<float> out);

// Same projection over float inputs (no byte normalization).
void hashed_projection_f(std::span<const float> in, std::uint64_t seed,
                         std::span<float> out);

}  // namespace voidface::kernels
