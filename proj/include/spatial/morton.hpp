#ifndef SPATIAL_MORTON_HPP
#define SPATIAL_MORTON_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "spatial/geometry.hpp"

namespace spatial::morton {

// Bits available per axis for a given code width and dimension. The unused
// high bits of the code stay zero (3D: 30 of 32, 63 of 64 bits used).
constexpr int bits_per_axis(int width, int dim) { return width / dim; }

// Quantizes p against the scene box: floor((p[k]-min[k]) / extent[k] * 2^bits),
// clamped to 2^bits-1. Zero-extent axes map to bin 0. p must be inside scene.
template <int Dim>
inline std::array<std::uint32_t, Dim> bin(const Point<Dim> &p, const Aabb<Dim> &scene, int bits) {
  std::array<std::uint32_t, Dim> out{};
  const std::uint32_t last =
      bits >= 32 ? 0xffffffffu : (std::uint32_t{1} << bits) - 1;
  const double scale = std::ldexp(1.0, bits); // 2^bits; bits can be 32
  for (int k = 0; k < Dim; ++k) {
    double extent =
        static_cast<double>(scene.max_corner[k]) - static_cast<double>(scene.min_corner[k]);
    if (extent <= 0) {
      out[k] = 0;
      continue;
    }
    double t = (static_cast<double>(p[k]) - static_cast<double>(scene.min_corner[k])) / extent;
    double scaled = std::floor(t * scale);
    out[k] = scaled <= 0 ? 0u
             : scaled >= static_cast<double>(last)
                 ? last
                 : static_cast<std::uint32_t>(scaled);
  }
  return out;
}

namespace detail {

// Spreads the low 16 bits of v so they occupy every other bit.
inline std::uint32_t spread2(std::uint32_t v) {
  v &= 0x0000ffffu;
  v = (v | (v << 8)) & 0x00ff00ffu;
  v = (v | (v << 4)) & 0x0f0f0f0fu;
  v = (v | (v << 2)) & 0x33333333u;
  v = (v | (v << 1)) & 0x55555555u;
  return v;
}

// Spreads the low 32 bits of v so they occupy every other bit.
inline std::uint64_t spread2(std::uint64_t v) {
  v &= 0xffffffffull;
  v = (v | (v << 16)) & 0x0000ffff0000ffffull;
  v = (v | (v << 8)) & 0x00ff00ff00ff00ffull;
  v = (v | (v << 4)) & 0x0f0f0f0f0f0f0f0full;
  v = (v | (v << 2)) & 0x3333333333333333ull;
  v = (v | (v << 1)) & 0x5555555555555555ull;
  return v;
}

// Spreads the low 10 bits of v so they occupy every third bit.
inline std::uint32_t spread3(std::uint32_t v) {
  v &= 0x000003ffu;
  v = (v | (v << 16)) & 0xff0000ffu;
  v = (v | (v << 8)) & 0x0300f00fu;
  v = (v | (v << 4)) & 0x030c30c3u;
  v = (v | (v << 2)) & 0x09249249u;
  return v;
}

// Spreads the low 21 bits of v so they occupy every third bit.
inline std::uint64_t spread3(std::uint64_t v) {
  v &= 0x1fffffull;
  v = (v | (v << 32)) & 0x001f00000000ffffull;
  v = (v | (v << 16)) & 0x001f0000ff0000ffull;
  v = (v | (v << 8)) & 0x100f00f00f00f00full;
  v = (v | (v << 4)) & 0x10c30c30c30c30c3ull;
  v = (v | (v << 2)) & 0x1249249249249249ull;
  return v;
}

} // namespace detail

// Interleaves per-axis bin indices into a Z-order code. Axis 0 occupies the
// least-significant position of each interleaved group.
template <class UInt, int Dim>
inline UInt encode(const std::array<std::uint32_t, Dim> &bins) {
  static_assert(std::is_same_v<UInt, std::uint32_t> || std::is_same_v<UInt, std::uint64_t>);
  if constexpr (Dim == 2) {
    return detail::spread2(static_cast<UInt>(bins[0])) |
           (detail::spread2(static_cast<UInt>(bins[1])) << 1);
  } else {
    return detail::spread3(static_cast<UInt>(bins[0])) |
           (detail::spread3(static_cast<UInt>(bins[1])) << 1) |
           (detail::spread3(static_cast<UInt>(bins[2])) << 2);
  }
}

// bin + encode at the code type's full width.
template <class UInt, int Dim>
inline UInt code_of(const Point<Dim> &p, const Aabb<Dim> &scene) {
  return encode<UInt, Dim>(bin(p, scene, bits_per_axis(static_cast<int>(sizeof(UInt) * 8), Dim)));
}

// Permutation that sorts the codes ascending. Ties keep the original order
// (stable), so leaf order stays deterministic even with duplicate codes.
template <class UInt>
inline std::vector<std::int32_t> sort_by_code(std::span<const UInt> codes) {
  std::vector<std::int32_t> perm(codes.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](std::int32_t a, std::int32_t b) {
    return codes[static_cast<std::size_t>(a)] < codes[static_cast<std::size_t>(b)];
  });
  return perm;
}

// Duplicate-code statistics over a code set.
struct MortonStats {
  // Codes that occur more than 3 times.
  std::int64_t num_codes_duplicated_gt3 = 0;
  // Points whose code is shared with at least one other point.
  std::int64_t num_points_with_duplicate_code = 0;
  // Largest multiplicity of any single code (1 when all codes are distinct).
  std::int64_t max_same_code_duplicates = 0;
};

template <class UInt>
inline MortonStats compute_stats(std::span<const UInt> codes) {
  MortonStats stats;
  if (codes.empty())
    return stats;
  std::vector<UInt> sorted(codes.begin(), codes.end());
  std::sort(sorted.begin(), sorted.end());
  stats.max_same_code_duplicates = 1;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
      ++run;
      continue;
    }
    if (run > 1)
      stats.num_points_with_duplicate_code += static_cast<std::int64_t>(run);
    if (run > 3)
      ++stats.num_codes_duplicated_gt3;
    stats.max_same_code_duplicates =
        std::max(stats.max_same_code_duplicates, static_cast<std::int64_t>(run));
    run = 1;
  }
  return stats;
}

} // namespace spatial::morton

#endif
