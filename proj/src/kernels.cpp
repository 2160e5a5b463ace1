#include "voidface/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "voidface/error.hpp"

namespace voidface::kernels {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    fail(ErrorCode::dimension, std::string(what) + ": length mismatch (" +
                                   std::to_string(a) + " vs " + std::to_string(b) + ")");
}

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// 64 weight signs for output row d, input block b.
inline std::uint64_t sign_block(std::uint64_t seed, std::size_t d, std::size_t b) {
  return mix64(seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(d) + 1)) ^
               (static_cast<std::uint64_t>(b) << 20));
}

template <typename Load>
double project_row(std::size_t len, std::uint64_t seed, std::size_t d, Load load) {
  double acc = 0.0;
  for (std::size_t b = 0; b * 64 < len; ++b) {
    std::uint64_t bits = sign_block(seed, d, b);
    std::size_t end = std::min(len, (b + 1) * 64);
    for (std::size_t k = b * 64; k < end; ++k, bits >>= 1) {
      double v = load(k);
      acc += (bits & 1) ? v : -v;
    }
  }
  return acc / std::sqrt(static_cast<double>(len));
}

}  // namespace

void xor_into(std::span<Byte> dst, std::span<const Byte> src) {
  require_same_size(dst.size(), src.size(), "xor_into");
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(dst.size());
  Byte* d = dst.data();
  const Byte* s = src.data();
#pragma omp parallel for schedule(static) if (n > 65536)
  for (std::ptrdiff_t i = 0; i < n; ++i) d[i] ^= s[i];
}

void xor_into_serial(std::span<Byte> dst, std::span<const Byte> src) {
  require_same_size(dst.size(), src.size(), "xor_into");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] ^= src[i];
}

void xor_bytes(std::span<const Byte> a, std::span<const Byte> b, std::span<Byte> out) {
  require_same_size(a.size(), b.size(), "xor_bytes");
  require_same_size(a.size(), out.size(), "xor_bytes");
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(a.size());
  const Byte* x = a.data();
  const Byte* y = b.data();
  Byte* o = out.data();
#pragma omp parallel for schedule(static) if (n > 65536)
  for (std::ptrdiff_t i = 0; i < n; ++i) o[i] = x[i] ^ y[i];
}

void xor_bytes_serial(std::span<const Byte> a, std::span<const Byte> b,
                      std::span<Byte> out) {
  require_same_size(a.size(), b.size(), "xor_bytes");
  require_same_size(a.size(), out.size(), "xor_bytes");
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] ^ b[i];
}

Histogram histogram(std::span<const Byte> data, std::size_t offset, std::size_t stride) {
  if (stride == 0) fail(ErrorCode::invalid_argument, "histogram stride 0");
  Histogram total{};
  if (offset >= data.size()) return total;
  const std::ptrdiff_t count =
      static_cast<std::ptrdiff_t>((data.size() - offset + stride - 1) / stride);
#pragma omp parallel if (count > 65536)
  {
    Histogram local{};
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < count; ++i) ++local[data[offset + i * stride]];
#pragma omp critical
    for (std::size_t v = 0; v < 256; ++v) total[v] += local[v];
  }
  return total;
}

Histogram histogram_serial(std::span<const Byte> data, std::size_t offset,
                           std::size_t stride) {
  if (stride == 0) fail(ErrorCode::invalid_argument, "histogram stride 0");
  Histogram h{};
  for (std::size_t i = offset; i < data.size(); i += stride) ++h[data[i]];
  return h;
}

std::uint64_t count_differences(std::span<const Byte> a, std::span<const Byte> b) {
  require_same_size(a.size(), b.size(), "count_differences");
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(a.size());
  std::uint64_t diff = 0;
#pragma omp parallel for reduction(+ : diff) schedule(static) if (n > 65536)
  for (std::ptrdiff_t i = 0; i < n; ++i) diff += (a[i] != b[i]);
  return diff;
}

std::uint64_t count_differences_serial(std::span<const Byte> a, std::span<const Byte> b) {
  require_same_size(a.size(), b.size(), "count_differences");
  std::uint64_t diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += (a[i] != b[i]);
  return diff;
}

PairMoments pair_moments(std::span<const Byte> x, std::span<const Byte> y) {
  require_same_size(x.size(), y.size(), "pair_moments");
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
  std::uint64_t sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
#pragma omp parallel for reduction(+ : sx, sy, sxx, syy, sxy) schedule(static) if (n > 65536)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::uint64_t a = x[i], b = y[i];
    sx += a;
    sy += b;
    sxx += a * a;
    syy += b * b;
    sxy += a * b;
  }
  return {static_cast<std::uint64_t>(n), sx, sy, sxx, syy, sxy};
}

PairMoments pair_moments_serial(std::span<const Byte> x, std::span<const Byte> y) {
  require_same_size(x.size(), y.size(), "pair_moments");
  PairMoments m;
  m.n = x.size();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::uint64_t a = x[i], b = y[i];
    m.sum_x += a;
    m.sum_y += b;
    m.sum_xx += a * a;
    m.sum_yy += b * b;
    m.sum_xy += a * b;
  }
  return m;
}

bool pearson(const PairMoments& m, double& r) {
  if (m.n < 2) return false;
  using i128 = __int128;
  const i128 n = m.n;
  const i128 cov = n * static_cast<i128>(m.sum_xy) - static_cast<i128>(m.sum_x) * m.sum_y;
  const i128 vx = n * static_cast<i128>(m.sum_xx) - static_cast<i128>(m.sum_x) * m.sum_x;
  const i128 vy = n * static_cast<i128>(m.sum_yy) - static_cast<i128>(m.sum_y) * m.sum_y;
  if (vx == 0 || vy == 0) return false;
  r = static_cast<double>(cov) /
      std::sqrt(static_cast<double>(vx) * static_cast<double>(vy));
  r = std::clamp(r, -1.0, 1.0);
  return true;
}

void hashed_projection(std::span<const Byte> in, std::uint64_t seed, std::span<float> out) {
  if (in.empty()) fail(ErrorCode::dimension, "hashed_projection: empty input");
  const std::ptrdiff_t dims = static_cast<std::ptrdiff_t>(out.size());
  const Byte* p = in.data();
  const std::size_t len = in.size();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t d = 0; d < dims; ++d)
    out[d] = static_cast<float>(project_row(len, seed, static_cast<std::size_t>(d),
                                            [p](std::size_t k) { return p[k] / 255.0 - 0.5; }));
}

void hashed_projection_serial(std::span<const Byte> in, std::uint64_t seed,
                              std::span<float> out) {
  if (in.empty()) fail(ErrorCode::dimension, "hashed_projection: empty input");
  const Byte* p = in.data();
  for (std::size_t d = 0; d < out.size(); ++d)
    out[d] = static_cast<float>(project_row(in.size(), seed, d,
                                            [p](std::size_t k) { return p[k] / 255.0 - 0.5; }));
}

void hashed_projection_f(std::span<const float> in, std::uint64_t seed, std::span<float> out) {
  if (in.empty()) fail(ErrorCode::dimension, "hashed_projection: empty input");
  const std::ptrdiff_t dims = static_cast<std::ptrdiff_t>(out.size());
  const float* p = in.data();
  const std::size_t len = in.size();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t d = 0; d < dims; ++d)
    out[d] = static_cast<float>(project_row(len, seed, static_cast<std::size_t>(d),
                                            [p](std::size_t k) { return double{p[k]}; }));
}

}  // namespace voidface::kernels
