#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "voidface/types.hpp"

namespace voidface {

// Byte source injected into every operation that needs randomness.
class RandomSource {
 public:
  virtual ~RandomSource() = default;

  virtual void fill(std::span<Byte> out) = 0;
  virtual std::uint64_t next_u64() = 0;

  // Unbiased draw from [0, bound).
  std::uint64_t uniform_below(std::uint64_t bound);
  double uniform_unit();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_below(i);
      std::swap(items[i - 1], items[j]);
    }
  }
};

// OS-backed CSPRNG (libsodium). Used on production paths.
class SecureRandom final : public RandomSource {
 public:
  SecureRandom();
  void fill(std::span<Byte> out) override;
  std::uint64_t next_u64() override;
};

// Reproducible generator for tests, simulations and campaigns.
class SeededRandom final : public RandomSource {
 public:
  explicit SeededRandom(std::uint64_t seed) : engine_(seed) {}
  void fill(std::span<Byte> out) override;
  std::uint64_t next_u64() override { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// Mixes a base seed with a stream index into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace voidface
