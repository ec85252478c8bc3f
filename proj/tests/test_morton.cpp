#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>

#include "oracles.hpp"
#include "spatial/morton.hpp"

using namespace spatial;

TEST_CASE("bin: scene corners and the half-way bin") {
  Aabb<3> unit{{{0, 0, 0}}, {{1, 1, 1}}};
  auto at_min = morton::bin(Point<3>{{0, 0, 0}}, unit, 10);
  CHECK(at_min == std::array<std::uint32_t, 3>{0, 0, 0});

  auto at_max = morton::bin(Point<3>{{1, 1, 1}}, unit, 10);
  CHECK(at_max == std::array<std::uint32_t, 3>{1023, 1023, 1023});

  auto halfway = morton::bin(Point<3>{{0.5f, 0, 0}}, unit, 10);
  CHECK(halfway[0] == 512);
}

TEST_CASE("bin: zero-extent axes map to bin 0") {
  Aabb<2> flat{{{0, 3}}, {{1, 3}}};
  auto bins = morton::bin(Point<2>{{0.7f, 3}}, flat, 16);
  CHECK(bins[1] == 0);
}

TEST_CASE("bin: full 32 bits per axis (2D at 64-bit codes)") {
  Aabb<2> unit{{{0, 0}}, {{1, 1}}};
  auto at_max = morton::bin(Point<2>{{1, 1}}, unit, 32);
  CHECK(at_max == std::array<std::uint32_t, 2>{0xffffffffu, 0xffffffffu});
  auto halfway = morton::bin(Point<2>{{0.5f, 0}}, unit, 32);
  CHECK(halfway[0] == 0x80000000u);

  // Distinct coarse points must receive distinct codes.
  auto a = morton::code_of<std::uint64_t, 2>(Point<2>{{0.25f, 0.75f}}, unit);
  auto b = morton::code_of<std::uint64_t, 2>(Point<2>{{0.75f, 0.25f}}, unit);
  CHECK(a != b);
  CHECK(a != 0);
}

TEST_CASE("encode: trivial codes") {
  CHECK(morton::encode<std::uint32_t, 3>({0, 0, 0}) == 0);
  CHECK(morton::encode<std::uint64_t, 3>({1, 1, 1}) == 7);
  CHECK(morton::encode<std::uint32_t, 2>({1, 1}) == 3);
}

TEST_CASE("encode matches the bit-by-bit interleaver at all widths and dimensions") {
  std::mt19937 rng(23);
  auto check_all = [&]<class UInt, int Dim>() {
    const int bits = morton::bits_per_axis(static_cast<int>(sizeof(UInt) * 8), Dim);
    const std::uint32_t max_bin =
        bits >= 32 ? 0xffffffffu : (std::uint32_t{1} << bits) - 1;
    std::uniform_int_distribution<std::uint32_t> bin(0, max_bin);
    for (int trial = 0; trial < 300; ++trial) {
      std::array<std::uint32_t, Dim> bins{};
      for (auto &b : bins)
        b = bin(rng);
      auto got = morton::encode<UInt, Dim>(bins);
      CHECK(got == oracles::naive_interleave<UInt, Dim>(bins));
      CHECK(oracles::naive_deinterleave<UInt, Dim>(got) == bins);
    }
  };
  check_all.operator()<std::uint32_t, 2>();
  check_all.operator()<std::uint32_t, 3>();
  check_all.operator()<std::uint64_t, 2>();
  check_all.operator()<std::uint64_t, 3>();
}

TEST_CASE("raising one axis bin never decreases the code") {
  std::mt19937 rng(29);
  std::uniform_int_distribution<std::uint32_t> bin(0, (1u << 21) - 2);
  for (int trial = 0; trial < 200; ++trial) {
    std::array<std::uint32_t, 3> bins{bin(rng), bin(rng), bin(rng)};
    auto code = morton::encode<std::uint64_t, 3>(bins);
    for (int axis = 0; axis < 3; ++axis) {
      auto raised = bins;
      raised[static_cast<std::size_t>(axis)] += 1;
      CHECK(morton::encode<std::uint64_t, 3>(raised) >= code);
    }
  }
}

TEST_CASE("sort_by_code: identity on sorted input and on all-equal codes") {
  std::vector<std::uint32_t> sorted{1, 2, 3, 7, 9};
  auto perm = morton::sort_by_code(std::span<const std::uint32_t>(sorted));
  CHECK(perm == std::vector<std::int32_t>{0, 1, 2, 3, 4});

  std::vector<std::uint32_t> equal(6, 42);
  perm = morton::sort_by_code(std::span<const std::uint32_t>(equal));
  CHECK(perm == std::vector<std::int32_t>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("sort_by_code matches a reference stable sort") {
  std::mt19937 rng(31);
  std::uniform_int_distribution<std::uint64_t> code(0, 15); // force many ties
  std::vector<std::uint64_t> codes(500);
  for (auto &c : codes)
    c = code(rng);
  auto perm = morton::sort_by_code(std::span<const std::uint64_t>(codes));

  std::vector<std::int32_t> want(codes.size());
  std::iota(want.begin(), want.end(), 0);
  std::stable_sort(want.begin(), want.end(), [&](std::int32_t a, std::int32_t b) {
    return codes[static_cast<std::size_t>(a)] < codes[static_cast<std::size_t>(b)];
  });
  CHECK(perm == want);
}

TEST_CASE("duplicate statistics: all distinct and a hand-counted multiset") {
  std::vector<std::uint32_t> distinct{1, 2, 3, 4};
  auto stats = morton::compute_stats(std::span<const std::uint32_t>(distinct));
  CHECK(stats.num_codes_duplicated_gt3 == 0);
  CHECK(stats.num_points_with_duplicate_code == 0);
  CHECK(stats.max_same_code_duplicates == 1);

  std::vector<std::uint32_t> multi{5, 5, 5, 5, 9};
  stats = morton::compute_stats(std::span<const std::uint32_t>(multi));
  CHECK(stats.num_codes_duplicated_gt3 == 1);
  CHECK(stats.num_points_with_duplicate_code == 4);
  CHECK(stats.max_same_code_duplicates == 4);

  // Two duplicated codes, neither past the >3 threshold.
  std::vector<std::uint32_t> pairs{1, 1, 2, 2, 2, 8};
  stats = morton::compute_stats(std::span<const std::uint32_t>(pairs));
  CHECK(stats.num_codes_duplicated_gt3 == 0);
  CHECK(stats.num_points_with_duplicate_code == 5);
  CHECK(stats.max_same_code_duplicates == 3);
}

TEST_CASE("stats invariants on random code sets") {
  std::mt19937 rng(37);
  std::uniform_int_distribution<std::uint32_t> code(0, 63);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::uint32_t> codes(200);
    for (auto &c : codes)
      c = code(rng);
    auto stats = morton::compute_stats(std::span<const std::uint32_t>(codes));
    CHECK(stats.num_points_with_duplicate_code <= static_cast<std::int64_t>(codes.size()));
    CHECK(stats.max_same_code_duplicates <= static_cast<std::int64_t>(codes.size()));

    // Each duplicated code contributes at least two points.
    std::map<std::uint32_t, int> histogram;
    for (auto c : codes)
      ++histogram[c];
    std::int64_t duplicated_codes = 0;
    for (const auto &[c, count] : histogram)
      duplicated_codes += count >= 2;
    if (duplicated_codes > 0)
      CHECK(stats.num_points_with_duplicate_code >= 2 * duplicated_codes);
  }
}
