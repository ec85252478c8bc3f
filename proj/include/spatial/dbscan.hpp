#ifndef SPATIAL_DBSCAN_HPP
#define SPATIAL_DBSCAN_HPP

#include <atomic>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "spatial/bvh.hpp"
#include "spatial/dense_grid.hpp"
#include "spatial/exec.hpp"
#include "spatial/geometry.hpp"
#include "spatial/traversal.hpp"
#include "spatial/union_find.hpp"

namespace spatial {

inline constexpr std::int32_t kNoiseLabel = -1;

struct DbscanParams {
  float eps = 0.f;
  std::int32_t min_pts = 2;
};

struct DbscanTimings {
  double build_ms = 0;
  double core_ms = 0;
  double merge_ms = 0;
  double finalize_ms = 0;

  double total_ms() const { return build_ms + core_ms + merge_ms + finalize_ms; }
};

// Diagnostic counters; distance_checks counts merge-phase point-to-point
// evaluations expanded from dense-cell matches.
struct DbscanStats {
  std::int64_t distance_checks = 0;
  std::int64_t num_dense_cells = 0;
  std::int64_t num_dense_points = 0;
};

struct DbscanOutput {
  // Per-point cluster id (the smallest original index of any member of the
  // cluster) or kNoiseLabel.
  std::vector<std::int32_t> labels;
  std::vector<std::uint8_t> core_flags;
  DbscanTimings timings;
  DbscanStats stats;
};

inline void validate_params(const DbscanParams &params) {
  if (!(params.eps > 0) || !std::isfinite(params.eps))
    throw std::invalid_argument("dbscan: eps must be positive and finite");
  if (params.min_pts < 2)
    throw std::invalid_argument("dbscan: min_pts must be at least 2");
}

template <int Dim>
void validate_points(std::span<const Point<Dim>> points) {
  for (std::size_t i = 0; i < points.size(); ++i)
    if (!is_finite(points[i]))
      throw std::invalid_argument("dbscan: non-finite coordinate at point " + std::to_string(i));
}

// Canonical labels from a quiescent merge state: every point gets the
// smallest original index in its set, except non-core points whose set is a
// singleton, which become noise.
inline std::vector<std::int32_t> finalize_labels(DisjointSets &sets,
                                                 std::span<const std::uint8_t> core_flags,
                                                 const ClaimFlags *claims = nullptr) {
  const std::int32_t n = sets.size();
  std::vector<std::int32_t> root(static_cast<std::size_t>(n));
  std::vector<std::int32_t> min_member(static_cast<std::size_t>(n),
                                       std::numeric_limits<std::int32_t>::max());
  std::vector<std::int32_t> set_size(static_cast<std::size_t>(n), 0);
  for (std::int32_t i = 0; i < n; ++i) {
    std::int32_t r = sets.find(i);
    root[static_cast<std::size_t>(i)] = r;
    min_member[static_cast<std::size_t>(r)] = std::min(min_member[static_cast<std::size_t>(r)], i);
    ++set_size[static_cast<std::size_t>(r)];
  }
  std::vector<std::int32_t> labels(static_cast<std::size_t>(n));
  for (std::int32_t i = 0; i < n; ++i) {
    std::int32_t r = root[static_cast<std::size_t>(i)];
    bool noise = !core_flags[static_cast<std::size_t>(i)] &&
                 set_size[static_cast<std::size_t>(r)] == 1;
    labels[static_cast<std::size_t>(i)] = noise ? kNoiseLabel : min_member[static_cast<std::size_t>(r)];
    // A non-core point can only have joined a set through the claim latch.
    assert(noise || core_flags[static_cast<std::size_t>(i)] || claims == nullptr ||
           claims->claimed(i));
  }
  (void)claims;
  return labels;
}

namespace detail {

inline void mark_core_by_set_size(DisjointSets &sets, std::vector<std::uint8_t> &core_flags) {
  const std::int32_t n = sets.size();
  std::vector<std::int32_t> set_size(static_cast<std::size_t>(n), 0);
  for (std::int32_t i = 0; i < n; ++i)
    ++set_size[static_cast<std::size_t>(sets.find(i))];
  for (std::int32_t i = 0; i < n; ++i)
    core_flags[static_cast<std::size_t>(i)] =
        set_size[static_cast<std::size_t>(sets.find(i))] > 1;
}

template <int Dim>
std::vector<Aabb<Dim>> as_point_boxes(std::span<const Point<Dim>> points) {
  std::vector<Aabb<Dim>> boxes(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    boxes[i] = point_box(points[i]);
  return boxes;
}

// Merge rule for one close pair: core-core pairs union unconditionally; a
// core-noncore pair unions only if the non-core side's claim latch is won,
// so a border point joins exactly one cluster.
inline void merge_close_pair(std::int32_t a, std::int32_t b,
                             std::span<const std::uint8_t> core_flags, DisjointSets &sets,
                             ClaimFlags &claims) {
  bool core_a = core_flags[static_cast<std::size_t>(a)];
  bool core_b = core_flags[static_cast<std::size_t>(b)];
  if (core_a && core_b) {
    sets.unite(a, b);
  } else if (core_a) {
    if (claims.try_claim(b))
      sets.unite(a, b);
  } else if (core_b) {
    if (claims.try_claim(a))
      sets.unite(a, b);
  }
}

} // namespace detail

// Per-point neighbor counts, capped at min_pts: each point runs a range
// query whose counting callback terminates the traversal as soon as the
// min_pts threshold is reached. Counts include the point itself. The capped
// count equals the number of callback invocations for that query. Only
// meaningful for min_pts > 2; the min_pts = 2 pipelines skip this phase.
template <int Dim>
std::vector<std::int32_t> detect_core_counts(const Bvh<Dim> &bvh,
                                             std::span<const Point<Dim>> points,
                                             const DbscanParams &params,
                                             ExecMode mode = ExecMode::kParallel) {
  const std::size_t n = points.size();
  std::vector<RangePredicate<Dim>> predicates(n);
  for (std::size_t i = 0; i < n; ++i)
    predicates[i].geometry = Sphere<Dim>{points[i], params.eps};
  auto order = sort_queries<Dim, RangePredicate<Dim>>(predicates);
  std::vector<RangePredicate<Dim>> sorted(n);
  for (std::size_t q = 0; q < n; ++q)
    sorted[q] = predicates[static_cast<std::size_t>(order[q])];

  std::vector<std::int32_t> counts(n, 0);
  range_query(
      bvh, std::span<const RangePredicate<Dim>>(sorted),
      [&](std::int32_t q, std::int32_t) {
        auto i = static_cast<std::size_t>(order[static_cast<std::size_t>(q)]);
        return ++counts[i] >= params.min_pts ? CallbackControl::kTerminateQuery
                                             : CallbackControl::kContinue;
      },
      mode);
  return counts;
}

template <int Dim>
std::vector<std::uint8_t> detect_core_points(const Bvh<Dim> &bvh,
                                             std::span<const Point<Dim>> points,
                                             const DbscanParams &params,
                                             ExecMode mode = ExecMode::kParallel) {
  auto counts = detect_core_counts(bvh, points, params, mode);
  std::vector<std::uint8_t> core_flags(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    core_flags[i] = counts[i] >= params.min_pts;
  return core_flags;
}

// Sequential disjoint-set DBSCAN over brute-force neighborhoods. Exact by
// construction and independent of the tree index; the differential baseline
// for every other implementation here.
template <int Dim>
DbscanOutput dbscan_reference(std::span<const Point<Dim>> points, const DbscanParams &params) {
  validate_params(params);
  validate_points(points);
  const std::int32_t n = static_cast<std::int32_t>(points.size());

  DbscanOutput out;
  out.core_flags.assign(static_cast<std::size_t>(n), 0);
  DisjointSets sets(n);
  std::vector<std::uint8_t> claimed(static_cast<std::size_t>(n), 0);

  StopWatch watch;
  std::vector<std::int32_t> neighbors;
  for (std::int32_t x = 0; x < n; ++x) {
    neighbors.clear();
    for (std::int32_t y = 0; y < n; ++y)
      if (distance(points[static_cast<std::size_t>(x)], points[static_cast<std::size_t>(y)]) <=
          params.eps)
        neighbors.push_back(y);
    if (static_cast<std::int32_t>(neighbors.size()) < params.min_pts)
      continue;
    out.core_flags[static_cast<std::size_t>(x)] = 1;
    for (std::int32_t y : neighbors) {
      if (out.core_flags[static_cast<std::size_t>(y)]) {
        sets.unite(x, y);
      } else if (!claimed[static_cast<std::size_t>(y)]) {
        claimed[static_cast<std::size_t>(y)] = 1;
        sets.unite(x, y);
      }
    }
  }
  out.timings.core_ms = watch.lap_ms();
  out.labels = finalize_labels(sets, out.core_flags);
  out.timings.finalize_ms = watch.lap_ms();
  return out;
}

namespace detail {

// Shared FDBSCAN pipeline: tree over the points, optional core-detection
// phase, pair traversal fused with the merge rule. Neighbor lists are never
// materialized, keeping auxiliary memory O(n) beyond the tree.
template <int Dim>
DbscanOutput fdbscan_pipeline(std::span<const Point<Dim>> points, const DbscanParams &params,
                              ExecMode mode, CodeWidth width) {
  validate_params(params);
  const std::int32_t n = static_cast<std::int32_t>(points.size());
  DbscanOutput out;
  if (n == 0)
    return out;

  StopWatch watch;
  auto boxes = as_point_boxes(points);
  auto bvh = Bvh<Dim>::build(std::span<const Aabb<Dim>>(boxes), width);
  out.timings.build_ms = watch.lap_ms();

  const bool count_phase = params.min_pts > 2;
  out.core_flags.assign(static_cast<std::size_t>(n), 0);
  if (count_phase)
    out.core_flags = detect_core_points(bvh, points, params, mode);
  out.timings.core_ms = watch.lap_ms();

  DisjointSets sets(n);
  ClaimFlags claims(n);
  if (count_phase) {
    pair_traversal(
        bvh, params.eps,
        [&](std::int32_t a, std::int32_t b) {
          merge_close_pair(a, b, std::span<const std::uint8_t>(out.core_flags), sets, claims);
        },
        mode);
  } else {
    // min_pts = 2: every member of a close pair is core, so all close pairs
    // union unconditionally (the friends-of-friends case).
    pair_traversal(
        bvh, params.eps, [&](std::int32_t a, std::int32_t b) { sets.unite(a, b); }, mode);
  }
  out.timings.merge_ms = watch.lap_ms();

  if (!count_phase)
    mark_core_by_set_size(sets, out.core_flags);
  out.labels = finalize_labels(sets, std::span<const std::uint8_t>(out.core_flags),
                               count_phase ? &claims : nullptr);
  out.timings.finalize_ms = watch.lap_ms();
  return out;
}

} // namespace detail

// DBSCAN with tree traversal fused into the counting and union kernels.
template <int Dim>
DbscanOutput fdbscan(std::span<const Point<Dim>> points, const DbscanParams &params,
                     ExecMode mode = ExecMode::kParallel, CodeWidth width = CodeWidth::k64) {
  validate_points(points);
  return detail::fdbscan_pipeline(points, params, mode, width);
}

// The min_pts = 2 special case: clusters are the connected components of the
// within-eps proximity graph and singletons are noise.
template <int Dim>
DbscanOutput friends_of_friends(std::span<const Point<Dim>> points, float eps,
                                ExecMode mode = ExecMode::kParallel,
                                CodeWidth width = CodeWidth::k64) {
  validate_points(points);
  return detail::fdbscan_pipeline(points, DbscanParams{eps, 2}, mode, width);
}

// FDBSCAN over a mixed hierarchy: one box per dense grid cell (tight around
// its member points) plus point-boxes for the points outside dense cells.
// Dense-cell members are core by construction and union without distance
// checks; matches against a dense cell expand to per-member checks.
template <int Dim>
DbscanOutput fdbscan_densebox(std::span<const Point<Dim>> points, const DbscanParams &params,
                              ExecMode mode = ExecMode::kParallel,
                              CodeWidth width = CodeWidth::k64) {
  validate_params(params);
  validate_points(points);
  const std::int32_t n = static_cast<std::int32_t>(points.size());
  DbscanOutput out;
  if (n == 0)
    return out;

  StopWatch watch;
  auto grid = build_dense_grid(points, params.eps, params.min_pts);

  // Dense cells ordered by their smallest member index so object order (and
  // with it the sequential run) is reproducible.
  std::vector<const typename DenseGrid<Dim>::Cell *> dense_cells;
  for (const auto &[coord, cell] : grid.cells)
    if (cell.dense)
      dense_cells.push_back(&cell);
  std::sort(dense_cells.begin(), dense_cells.end(),
            [](const auto *a, const auto *b) { return a->members.front() < b->members.front(); });
  const auto num_dense = static_cast<std::int32_t>(dense_cells.size());

  // point_cell[i] = dense object id containing point i, or -1 if outside.
  std::vector<std::int32_t> point_cell(static_cast<std::size_t>(n), -1);
  std::vector<Aabb<Dim>> objects;
  objects.reserve(static_cast<std::size_t>(num_dense));
  for (std::int32_t c = 0; c < num_dense; ++c) {
    Aabb<Dim> tight;
    for (std::int32_t i : dense_cells[static_cast<std::size_t>(c)]->members) {
      tight = expand(tight, points[static_cast<std::size_t>(i)]);
      point_cell[static_cast<std::size_t>(i)] = c;
    }
    objects.push_back(tight);
  }
  std::vector<std::int32_t> sparse_points; // object id - num_dense -> point index
  for (std::int32_t i = 0; i < n; ++i)
    if (point_cell[static_cast<std::size_t>(i)] < 0) {
      sparse_points.push_back(i);
      objects.push_back(point_box(points[static_cast<std::size_t>(i)]));
    }

  auto bvh = Bvh<Dim>::build(std::span<const Aabb<Dim>>(objects), width);
  out.timings.build_ms = watch.lap_ms();

  out.stats.num_dense_cells = num_dense;
  out.stats.num_dense_points = n - static_cast<std::int64_t>(sparse_points.size());

  out.core_flags.assign(static_cast<std::size_t>(n), 0);
  for (std::int32_t i = 0; i < n; ++i)
    out.core_flags[static_cast<std::size_t>(i)] = point_cell[static_cast<std::size_t>(i)] >= 0;

  const bool count_phase = params.min_pts > 2;
  if (count_phase && !sparse_points.empty()) {
    // Core detection for points outside dense cells: count self, other
    // sparse points within eps, and dense-cell members within eps, stopping
    // once min_pts is reached.
    std::vector<RangePredicate<Dim>> predicates(sparse_points.size());
    for (std::size_t s = 0; s < sparse_points.size(); ++s)
      predicates[s].geometry =
          Sphere<Dim>{points[static_cast<std::size_t>(sparse_points[s])], params.eps};
    auto order = sort_queries<Dim, RangePredicate<Dim>>(predicates);
    std::vector<RangePredicate<Dim>> sorted(predicates.size());
    for (std::size_t q = 0; q < predicates.size(); ++q)
      sorted[q] = predicates[static_cast<std::size_t>(order[q])];

    std::vector<std::int32_t> counts(sparse_points.size(), 0);
    range_query(
        bvh, std::span<const RangePredicate<Dim>>(sorted),
        [&](std::int32_t q, std::int32_t object) {
          auto s = static_cast<std::size_t>(order[static_cast<std::size_t>(q)]);
          const auto &origin = points[static_cast<std::size_t>(sparse_points[s])];
          if (object < num_dense) {
            for (std::int32_t j : dense_cells[static_cast<std::size_t>(object)]->members) {
              if (distance(origin, points[static_cast<std::size_t>(j)]) <= params.eps &&
                  ++counts[s] >= params.min_pts)
                return CallbackControl::kTerminateQuery;
            }
            return CallbackControl::kContinue;
          }
          return ++counts[s] >= params.min_pts ? CallbackControl::kTerminateQuery
                                               : CallbackControl::kContinue;
        },
        mode);
    for (std::size_t s = 0; s < sparse_points.size(); ++s)
      out.core_flags[static_cast<std::size_t>(sparse_points[s])] = counts[s] >= params.min_pts;
  }
  out.timings.core_ms = watch.lap_ms();

  DisjointSets sets(n);
  ClaimFlags claims(n);
  parallel_for(num_dense, mode, [&](std::int64_t c) {
    const auto &members = dense_cells[static_cast<std::size_t>(c)]->members;
    for (std::size_t m = 1; m < members.size(); ++m)
      sets.unite(members.front(), members[m]);
  });

  // Merge phase: every point queries the mixed tree; an index-comparison
  // guard keeps each close pair processed exactly once.
  std::vector<RangePredicate<Dim>> predicates(static_cast<std::size_t>(n));
  for (std::int32_t i = 0; i < n; ++i)
    predicates[static_cast<std::size_t>(i)].geometry =
        Sphere<Dim>{points[static_cast<std::size_t>(i)], params.eps};
  auto order = sort_queries<Dim, RangePredicate<Dim>>(predicates);
  std::vector<RangePredicate<Dim>> sorted(predicates.size());
  for (std::size_t q = 0; q < predicates.size(); ++q)
    sorted[q] = predicates[static_cast<std::size_t>(order[q])];

  std::atomic<std::int64_t> distance_checks{0};
  auto core_span = std::span<const std::uint8_t>(out.core_flags);
  auto merge = [&](std::int32_t a, std::int32_t b) {
    if (params.min_pts > 2)
      detail::merge_close_pair(a, b, core_span, sets, claims);
    else
      sets.unite(a, b);
  };
  range_query(
      bvh, std::span<const RangePredicate<Dim>>(sorted),
      [&](std::int32_t q, std::int32_t object) {
        std::int32_t i = order[static_cast<std::size_t>(q)];
        const auto &origin = points[static_cast<std::size_t>(i)];
        if (object < num_dense) {
          if (object == point_cell[static_cast<std::size_t>(i)])
            return CallbackControl::kContinue; // own cell: already united
          std::int64_t checks = 0;
          for (std::int32_t j : dense_cells[static_cast<std::size_t>(object)]->members) {
            if (i < j) {
              ++checks;
              if (distance(origin, points[static_cast<std::size_t>(j)]) <= params.eps)
                merge(i, j);
            }
          }
          distance_checks.fetch_add(checks, std::memory_order_relaxed);
        } else {
          std::int32_t j = sparse_points[static_cast<std::size_t>(object - num_dense)];
          // A point-box hit is already an exact within-eps test.
          if (i < j)
            merge(i, j);
        }
        return CallbackControl::kContinue;
      },
      mode);
  out.stats.distance_checks = distance_checks.load();
  out.timings.merge_ms = watch.lap_ms();

  if (!count_phase)
    detail::mark_core_by_set_size(sets, out.core_flags);
  out.labels = finalize_labels(sets, core_span, count_phase ? &claims : nullptr);
  out.timings.finalize_ms = watch.lap_ms();
  return out;
}

// The historical min_pts = 2 baseline: materializes the full within-eps
// adjacency as a CRS result, then finds connected components over the
// explicit graph. Memory grows with the total neighbor count, so large or
// dense instances fail with an allocation error; that failure mode is the
// expected behavior and the reason the callback-based pipelines exist.
template <int Dim>
DbscanOutput adjacency_graph_dbscan(std::span<const Point<Dim>> points, float eps,
                                    ExecMode mode = ExecMode::kParallel,
                                    CodeWidth width = CodeWidth::k64,
                                    std::int64_t max_adjacency =
                                        std::numeric_limits<std::int64_t>::max()) {
  validate_params(DbscanParams{eps, 2});
  validate_points(points);
  const std::int32_t n = static_cast<std::int32_t>(points.size());
  DbscanOutput out;
  if (n == 0)
    return out;

  StopWatch watch;
  auto boxes = detail::as_point_boxes(points);
  auto bvh = Bvh<Dim>::build(std::span<const Aabb<Dim>>(boxes), width);
  out.timings.build_ms = watch.lap_ms();

  std::vector<RangePredicate<Dim>> predicates(static_cast<std::size_t>(n));
  for (std::int32_t i = 0; i < n; ++i)
    predicates[static_cast<std::size_t>(i)].geometry =
        Sphere<Dim>{points[static_cast<std::size_t>(i)], eps};
  CrsResult adjacency =
      query_crs(bvh, std::span<const RangePredicate<Dim>>(predicates), mode, max_adjacency);
  out.timings.core_ms = watch.lap_ms();

  DisjointSets sets(n);
  parallel_for(n, mode, [&](std::int64_t i) {
    for (std::int64_t e = adjacency.offsets[static_cast<std::size_t>(i)];
         e < adjacency.offsets[static_cast<std::size_t>(i) + 1]; ++e) {
      std::int32_t j = adjacency.values[static_cast<std::size_t>(e)];
      if (j != i)
        sets.unite(static_cast<std::int32_t>(i), j);
    }
  });
  out.timings.merge_ms = watch.lap_ms();

  // Every query matches itself, so a point has a neighbor iff its adjacency
  // segment holds more than the self entry.
  out.core_flags.assign(static_cast<std::size_t>(n), 0);
  for (std::int32_t i = 0; i < n; ++i)
    out.core_flags[static_cast<std::size_t>(i)] =
        adjacency.offsets[static_cast<std::size_t>(i) + 1] -
            adjacency.offsets[static_cast<std::size_t>(i)] >
        1;
  out.labels = finalize_labels(sets, std::span<const std::uint8_t>(out.core_flags));
  out.timings.finalize_ms = watch.lap_ms();
  return out;
}

} // namespace spatial

#endif
