// Serial references against the OpenMP kernels, over one 96x96x3 patch and
// larger batches of grids.

#include <benchmark/benchmark.h>

#include <vector>

#include "voidface/kernels.hpp"
#include "voidface/random.hpp"

using namespace voidface;

namespace {

std::vector<Byte> noise(std::size_t n, std::uint64_t seed) {
  std::vector<Byte> v(n);
  SeededRandom(seed).fill(v);
  return v;
}

void sizes(benchmark::internal::Benchmark* b) {
  for (std::int64_t n : {27648, 27648 * 16, 27648 * 256}) b->Arg(n);
}

template <auto Fn>
void BM_xor_into(benchmark::State& st) {
  auto dst = noise(st.range(0), 1);
  const auto src = noise(st.range(0), 2);
  for (auto _ : st) {
    Fn(dst, src);
    benchmark::DoNotOptimize(dst.data());
  }
  st.SetBytesProcessed(st.iterations() * st.range(0));
}

template <auto Fn>
void BM_xor_bytes(benchmark::State& st) {
  const auto a = noise(st.range(0), 1), b = noise(st.range(0), 2);
  std::vector<Byte> out(a.size());
  for (auto _ : st) {
    Fn(a, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetBytesProcessed(st.iterations() * st.range(0));
}

template <auto Fn>
void BM_histogram(benchmark::State& st) {
  const auto a = noise(st.range(0), 3);
  for (auto _ : st) benchmark::DoNotOptimize(Fn(a, 1, 3));
  st.SetBytesProcessed(st.iterations() * st.range(0));
}

template <auto Fn>
void BM_count_differences(benchmark::State& st) {
  const auto a = noise(st.range(0), 1), b = noise(st.range(0), 2);
  for (auto _ : st) benchmark::DoNotOptimize(Fn(a, b));
  st.SetBytesProcessed(st.iterations() * st.range(0));
}

template <auto Fn>
void BM_pair_moments(benchmark::State& st) {
  const auto a = noise(st.range(0), 1), b = noise(st.range(0), 2);
  for (auto _ : st) benchmark::DoNotOptimize(Fn(a, b));
  st.SetBytesProcessed(st.iterations() * st.range(0));
}

template <auto Fn>
void BM_hashed_projection(benchmark::State& st) {
  const auto in = noise(27648, 4);
  std::vector<float> out(512);
  for (auto _ : st) {
    Fn(in, 17, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations());
}

}  // namespace

BENCHMARK(BM_xor_into<kernels::xor_into_serial>)->Apply(sizes);
BENCHMARK(BM_xor_into<kernels::xor_into>)->Apply(sizes)->UseRealTime();
BENCHMARK(BM_xor_bytes<kernels::xor_bytes_serial>)->Apply(sizes);
BENCHMARK(BM_xor_bytes<kernels::xor_bytes>)->Apply(sizes)->UseRealTime();
BENCHMARK(BM_histogram<kernels::histogram_serial>)->Apply(sizes);
BENCHMARK(BM_histogram<kernels::histogram>)->Apply(sizes)->UseRealTime();
BENCHMARK(BM_count_differences<kernels::count_differences_serial>)->Apply(sizes);
BENCHMARK(BM_count_differences<kernels::count_differences>)->Apply(sizes)->UseRealTime();
BENCHMARK(BM_pair_moments<kernels::pair_moments_serial>)->Apply(sizes);
BENCHMARK(BM_pair_moments<kernels::pair_moments>)->Apply(sizes)->UseRealTime();
BENCHMARK(BM_hashed_projection<kernels::hashed_projection_serial>);
BENCHMARK(BM_hashed_projection<kernels::hashed_projection>)->UseRealTime();

BENCHMARK_MAIN();
