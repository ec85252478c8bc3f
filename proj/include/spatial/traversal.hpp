#ifndef SPATIAL_TRAVERSAL_HPP
#define SPATIAL_TRAVERSAL_HPP

#include <algorithm>
#include <cstdint>
#include <new>
#include <numeric>
#include <queue>
#include <span>
#include <type_traits>
#include <variant>
#include <vector>

#include "spatial/bvh.hpp"
#include "spatial/exec.hpp"
#include "spatial/geometry.hpp"
#include "spatial/morton.hpp"

namespace spatial {

// Returned by a range-query callback to keep going or to stop the emitting
// query's traversal. Other queries in the batch are unaffected.
enum class CallbackControl { kContinue, kTerminateQuery };

template <int Dim>
struct RangePredicate {
  std::variant<Sphere<Dim>, Aabb<Dim>> geometry;
};

template <int Dim>
struct NearestPredicate {
  Point<Dim> origin;
  std::int32_t k = 1;
};

namespace detail {

template <int Dim, class Geometry>
inline bool predicate_hit(const Aabb<Dim> &volume, const Geometry &g) {
  return intersects(volume, g);
}

// Stackless range traversal: descend to the left child on a volume hit,
// otherwise follow the rope; stop at the sentinel.
template <int Dim, class Geometry, class LeafFn>
void traverse_range(const Bvh<Dim> &bvh, const Geometry &g, LeafFn &&on_leaf) {
  NodeRef cur = bvh.root();
  while (cur != kSentinel) {
    if (bvh.is_leaf(cur)) {
      const auto &leaf = bvh.leaf(cur);
      if (predicate_hit(leaf.volume, g) &&
          on_leaf(leaf.object_index) == CallbackControl::kTerminateQuery)
        return;
      cur = leaf.rope;
    } else {
      const auto &node = bvh.internal(cur);
      cur = predicate_hit(node.volume, g) ? node.left_child : node.rope;
    }
  }
}

} // namespace detail

// Invokes callback(query_index, object_index) once per stored object whose
// volume satisfies the predicate, until the callback terminates that query.
// The callback may return void instead of CallbackControl.
template <int Dim, class Callback>
void range_query(const Bvh<Dim> &bvh, std::span<const RangePredicate<Dim>> predicates,
                 Callback &&callback, ExecMode mode = ExecMode::kParallel) {
  if (bvh.empty())
    return;
  parallel_for(static_cast<std::int64_t>(predicates.size()), mode, [&](std::int64_t q) {
    std::visit(
        [&](const auto &g) {
          detail::traverse_range(bvh, g, [&](std::int32_t object) {
            if constexpr (std::is_void_v<decltype(callback(static_cast<std::int32_t>(q),
                                                           object))>) {
              callback(static_cast<std::int32_t>(q), object);
              return CallbackControl::kContinue;
            } else {
              return callback(static_cast<std::int32_t>(q), object);
            }
          });
        },
        predicates[static_cast<std::size_t>(q)].geometry);
  });
}

// For each query, delivers exactly min(k, n) object indices: the k nearest
// by Euclidean distance from the origin to the object's volume, distance
// ties broken by the smaller object index. Results arrive in ascending
// (distance, index) order.
template <int Dim, class Callback>
void nearest_query(const Bvh<Dim> &bvh, std::span<const NearestPredicate<Dim>> predicates,
                   Callback &&callback, ExecMode mode = ExecMode::kParallel) {
  if (bvh.empty())
    return;

  struct Candidate {
    float dist;
    std::int32_t object;
    bool operator<(const Candidate &o) const {
      return dist < o.dist || (dist == o.dist && object < o.object);
    }
  };

  parallel_for(static_cast<std::int64_t>(predicates.size()), mode, [&](std::int64_t q) {
    const auto &pred = predicates[static_cast<std::size_t>(q)];
    const std::size_t k = static_cast<std::size_t>(std::max<std::int32_t>(pred.k, 0));
    if (k == 0)
      return;

    // Max-heap of the current best k; top is the worst kept candidate.
    std::vector<Candidate> heap;
    heap.reserve(std::min(k, static_cast<std::size_t>(bvh.size())) + 1);
    auto consider = [&](Candidate c) {
      if (heap.size() < k) {
        heap.push_back(c);
        std::push_heap(heap.begin(), heap.end());
      } else if (c < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = c;
        std::push_heap(heap.begin(), heap.end());
      }
    };
    auto prunable = [&](float dist) { return heap.size() == k && dist > heap.front().dist; };

    std::vector<std::pair<float, NodeRef>> stack;
    stack.emplace_back(min_distance(pred.origin, bvh.volume(bvh.root())), bvh.root());
    while (!stack.empty()) {
      auto [dist, ref] = stack.back();
      stack.pop_back();
      if (prunable(dist))
        continue;
      if (bvh.is_leaf(ref)) {
        consider({dist, bvh.leaf(ref).object_index});
        continue;
      }
      const auto &node = bvh.internal(ref);
      NodeRef left = node.left_child;
      NodeRef right = bvh.is_leaf(left) ? bvh.leaf(left).rope : bvh.internal(left).rope;
      std::pair<float, NodeRef> near{min_distance(pred.origin, bvh.volume(left)), left};
      std::pair<float, NodeRef> far{min_distance(pred.origin, bvh.volume(right)), right};
      if (far.first < near.first)
        std::swap(near, far);
      if (!prunable(far.first))
        stack.push_back(far);
      if (!prunable(near.first))
        stack.push_back(near);
    }

    std::sort_heap(heap.begin(), heap.end());
    for (const auto &c : heap)
      callback(static_cast<std::int32_t>(q), c.object);
  });
}

// Reports every unordered pair of stored points within eps of each other
// exactly once, as original object indices. The traversal for a point starts
// at its own leaf and proceeds via ropes, so only later-ordered leaves are
// examined. Requires a hierarchy built over point-boxes.
template <int Dim, class Callback>
void pair_traversal(const Bvh<Dim> &bvh, float eps, Callback &&callback,
                    ExecMode mode = ExecMode::kParallel) {
  const std::int32_t n = bvh.size();
  if (n < 2)
    return;
  parallel_for(n, mode, [&](std::int64_t p) {
    const auto &self = bvh.leaves[static_cast<std::size_t>(p)];
    const Sphere<Dim> ball{self.volume.min_corner, eps};
    NodeRef cur = self.rope;
    while (cur != kSentinel) {
      if (bvh.is_leaf(cur)) {
        const auto &other = bvh.leaf(cur);
        if (intersects(other.volume, ball))
          callback(self.object_index, other.object_index);
        cur = other.rope;
      } else {
        const auto &node = bvh.internal(cur);
        cur = intersects(node.volume, ball) ? node.left_child : node.rope;
      }
    }
  });
}

namespace detail {

template <int Dim>
inline Point<Dim> representative(const RangePredicate<Dim> &pred) {
  return std::visit(
      [](const auto &g) {
        if constexpr (std::is_same_v<std::decay_t<decltype(g)>, Sphere<Dim>>)
          return g.center;
        else
          return centroid(g);
      },
      pred.geometry);
}

template <int Dim>
inline Point<Dim> representative(const NearestPredicate<Dim> &pred) {
  return pred.origin;
}

} // namespace detail

// Permutation ordering queries by the Morton code of their representative
// point. A locality optimization only: query results do not depend on it.
template <int Dim, class Predicate>
std::vector<std::int32_t> sort_queries(std::span<const Predicate> predicates) {
  Aabb<Dim> scene;
  for (const auto &pred : predicates)
    scene = expand(scene, detail::representative(pred));
  std::vector<std::uint64_t> codes(predicates.size());
  for (std::size_t q = 0; q < predicates.size(); ++q)
    codes[q] = morton::code_of<std::uint64_t, Dim>(detail::representative(predicates[q]), scene);
  return morton::sort_by_code(std::span<const std::uint64_t>(codes));
}

// Compressed row storage of per-query matches: values[offsets[q]..offsets[q+1])
// belong to query q, sorted ascending by object index.
struct CrsResult {
  std::vector<std::int64_t> offsets; // length = #queries + 1, non-decreasing
  std::vector<std::int32_t> values;
};

// Thrown when the flat match list would exceed the configured capacity;
// callers that only need per-match processing should use callbacks instead.
struct CapacityError : std::bad_alloc {
  const char *what() const noexcept override { return "crs result exceeds capacity"; }
};

// Two-pass CRS build: count, exclusive prefix sum, fill. Layout is
// deterministic regardless of execution mode.
template <int Dim>
CrsResult query_crs(const Bvh<Dim> &bvh, std::span<const RangePredicate<Dim>> predicates,
                    ExecMode mode = ExecMode::kParallel,
                    std::int64_t max_total_matches = std::numeric_limits<std::int64_t>::max()) {
  const std::size_t num_queries = predicates.size();
  CrsResult crs;
  crs.offsets.assign(num_queries + 1, 0);

  range_query(
      bvh, predicates,
      [&](std::int32_t q, std::int32_t) { ++crs.offsets[static_cast<std::size_t>(q) + 1]; },
      mode);
  std::partial_sum(crs.offsets.begin(), crs.offsets.end(), crs.offsets.begin());

  const std::int64_t total = crs.offsets.back();
  if (total > max_total_matches)
    throw CapacityError{};
  crs.values.resize(static_cast<std::size_t>(total));

  std::vector<std::int64_t> cursor(crs.offsets.begin(), crs.offsets.end() - 1);
  range_query(
      bvh, predicates,
      [&](std::int32_t q, std::int32_t object) {
        crs.values[static_cast<std::size_t>(cursor[static_cast<std::size_t>(q)]++)] = object;
      },
      mode);
  parallel_for(static_cast<std::int64_t>(num_queries), mode, [&](std::int64_t q) {
    std::sort(crs.values.begin() + crs.offsets[static_cast<std::size_t>(q)],
              crs.values.begin() + crs.offsets[static_cast<std::size_t>(q) + 1]);
  });
  return crs;
}

} // namespace spatial

#endif
