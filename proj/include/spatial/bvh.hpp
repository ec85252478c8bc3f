#ifndef SPATIAL_BVH_HPP
#define SPATIAL_BVH_HPP

#include <bit>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spatial/geometry.hpp"
#include "spatial/morton.hpp"

namespace spatial {

enum class CodeWidth : int { k32 = 32, k64 = 64 };

// Reference to a tree node. Internal nodes occupy [0, n-1), leaves
// [n-1, 2n-1); the sentinel (-1) terminates every rope chain.
struct NodeRef {
  std::int32_t value = -1;

  friend bool operator==(const NodeRef &, const NodeRef &) = default;
};

inline constexpr NodeRef kSentinel{-1};

struct BvhValidation {
  bool ok = true;
  std::string violation; // empty on success

  explicit operator bool() const { return ok; }
};

// Linear bounding volume hierarchy. Objects are Morton-sorted by the
// centroids of their boxes, the binary hierarchy is derived from code
// prefixes (Karras node numbering, root = internal 0), and every node gets a
// rope: the next node to visit when its subtree is skipped or exhausted.
// Right-child references are not stored; the right child of an internal node
// is reachable as the rope of its left child. Immutable after build.
template <int Dim>
struct Bvh {
  struct Leaf {
    Aabb<Dim> volume;
    std::int32_t object_index = -1; // index into the caller's object list
    NodeRef rope = kSentinel;
  };

  struct Internal {
    Aabb<Dim> volume;
    NodeRef left_child;
    NodeRef rope = kSentinel;
  };

  std::vector<Internal> internals; // n-1 nodes, root at index 0
  std::vector<Leaf> leaves;        // n nodes, Morton-sorted order
  Aabb<Dim> scene;
  CodeWidth width = CodeWidth::k64;

  static Bvh build(std::span<const Aabb<Dim>> objects, CodeWidth width = CodeWidth::k64);

  std::int32_t size() const { return static_cast<std::int32_t>(leaves.size()); }
  bool empty() const { return leaves.empty(); }

  NodeRef root() const {
    if (empty())
      return kSentinel;
    return size() == 1 ? leaf_ref(0) : NodeRef{0};
  }
  bool is_leaf(NodeRef ref) const { return ref.value >= size() - 1; }
  NodeRef leaf_ref(std::int32_t pos) const { return NodeRef{size() - 1 + pos}; }
  std::int32_t leaf_pos(NodeRef ref) const { return ref.value - (size() - 1); }

  const Leaf &leaf(NodeRef ref) const { return leaves[static_cast<std::size_t>(leaf_pos(ref))]; }
  const Internal &internal(NodeRef ref) const {
    return internals[static_cast<std::size_t>(ref.value)];
  }
  const Aabb<Dim> &volume(NodeRef ref) const {
    return is_leaf(ref) ? leaf(ref).volume : internal(ref).volume;
  }

  BvhValidation validate() const;
  void dump(std::ostream &os) const;
};

namespace detail {

inline int common_prefix(std::uint32_t a, std::uint32_t b) {
  return a == b ? 32 : std::countl_zero(a ^ b);
}
inline int common_prefix(std::uint64_t a, std::uint64_t b) {
  return a == b ? 64 : std::countl_zero(a ^ b);
}

// Karras-style hierarchy over the sorted codes. Equal codes extend the
// comparison with the common prefix of the original object indices, which
// makes the augmented keys strictly increasing and every split well defined.
template <class UInt>
class HierarchyBuilder {
public:
  HierarchyBuilder(std::span<const UInt> sorted_codes, std::span<const std::int32_t> sorted_ids)
      : codes_(sorted_codes), ids_(sorted_ids), n_(static_cast<std::int64_t>(sorted_codes.size())) {}

  int delta(std::int64_t i, std::int64_t j) const {
    if (j < 0 || j >= n_)
      return -1;
    auto a = static_cast<std::size_t>(i);
    auto b = static_cast<std::size_t>(j);
    if (codes_[a] != codes_[b])
      return common_prefix(codes_[a], codes_[b]);
    return static_cast<int>(sizeof(UInt) * 8) +
           common_prefix(static_cast<std::uint32_t>(ids_[a]), static_cast<std::uint32_t>(ids_[b]));
  }

  struct NodeSplit {
    std::int64_t other_end; // j: the far end of the node's key range
    std::int64_t gamma;     // split: left covers [min(i,j), gamma]
  };

  NodeSplit split(std::int64_t i) const {
    int d = delta(i, i + 1) > delta(i, i - 1) ? 1 : -1;
    int delta_min = delta(i, i - d);

    std::int64_t l_max = 2;
    while (delta(i, i + l_max * d) > delta_min)
      l_max *= 2;

    std::int64_t l = 0;
    for (std::int64_t t = l_max / 2; t >= 1; t /= 2)
      if (delta(i, i + (l + t) * d) > delta_min)
        l += t;
    std::int64_t j = i + l * d;

    int delta_node = delta(i, j);
    std::int64_t s = 0;
    for (std::int64_t t = (l + 1) / 2;; t = (t + 1) / 2) {
      if (delta(i, i + (s + t) * d) > delta_node)
        s += t;
      if (t == 1)
        break;
    }
    std::int64_t gamma = i + s * d + std::min(d, 0);
    return {j, gamma};
  }

private:
  std::span<const UInt> codes_;
  std::span<const std::int32_t> ids_;
  std::int64_t n_;
};

template <int Dim, class UInt>
void build_nodes(Bvh<Dim> &bvh, std::span<const Aabb<Dim>> objects,
                 std::span<const UInt> sorted_codes, std::span<const std::int32_t> perm) {
  const std::int32_t n = static_cast<std::int32_t>(objects.size());

  bvh.leaves.resize(static_cast<std::size_t>(n));
  for (std::int32_t p = 0; p < n; ++p) {
    auto &leaf = bvh.leaves[static_cast<std::size_t>(p)];
    leaf.object_index = perm[static_cast<std::size_t>(p)];
    leaf.volume = objects[static_cast<std::size_t>(leaf.object_index)];
  }
  if (n == 1) {
    bvh.leaves[0].rope = kSentinel;
    return;
  }

  HierarchyBuilder<UInt> builder(sorted_codes, perm);

  bvh.internals.resize(static_cast<std::size_t>(n - 1));
  std::vector<NodeRef> right_child(static_cast<std::size_t>(n - 1));
  std::vector<NodeRef> parent(static_cast<std::size_t>(2 * n - 1), kSentinel);
  std::vector<std::int32_t> range_end(static_cast<std::size_t>(n - 1));
  // Right child of the internal node whose split position is gamma; the rope
  // of any node whose key range ends at gamma points here.
  std::vector<NodeRef> skip_at(static_cast<std::size_t>(n - 1));

  for (std::int32_t i = 0; i < n - 1; ++i) {
    auto [j, gamma] = builder.split(i);
    std::int64_t lo = std::min<std::int64_t>(i, j);
    std::int64_t hi = std::max<std::int64_t>(i, j);

    NodeRef left = (gamma == lo) ? bvh.leaf_ref(static_cast<std::int32_t>(gamma))
                                 : NodeRef{static_cast<std::int32_t>(gamma)};
    NodeRef right = (gamma + 1 == hi) ? bvh.leaf_ref(static_cast<std::int32_t>(gamma + 1))
                                      : NodeRef{static_cast<std::int32_t>(gamma + 1)};

    bvh.internals[static_cast<std::size_t>(i)].left_child = left;
    right_child[static_cast<std::size_t>(i)] = right;
    range_end[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(hi);
    skip_at[static_cast<std::size_t>(gamma)] = right;
    parent[static_cast<std::size_t>(left.value)] = NodeRef{i};
    parent[static_cast<std::size_t>(right.value)] = NodeRef{i};
  }

  // Bottom-up volume pass: the second arrival at an internal node finds both
  // children complete and aggregates them.
  std::vector<std::uint8_t> arrived(static_cast<std::size_t>(n - 1), 0);
  for (std::int32_t p = 0; p < n; ++p) {
    NodeRef cur = parent[static_cast<std::size_t>(bvh.leaf_ref(p).value)];
    while (cur != kSentinel) {
      auto ci = static_cast<std::size_t>(cur.value);
      if (!arrived[ci]) {
        arrived[ci] = 1;
        break;
      }
      auto &node = bvh.internals[ci];
      node.volume = expand(bvh.volume(node.left_child), bvh.volume(right_child[ci]));
      cur = parent[ci];
    }
  }

  for (std::int32_t p = 0; p < n; ++p)
    bvh.leaves[static_cast<std::size_t>(p)].rope =
        (p == n - 1) ? kSentinel : skip_at[static_cast<std::size_t>(p)];
  for (std::int32_t i = 0; i < n - 1; ++i) {
    std::int32_t end = range_end[static_cast<std::size_t>(i)];
    bvh.internals[static_cast<std::size_t>(i)].rope =
        (end == n - 1) ? kSentinel : skip_at[static_cast<std::size_t>(end)];
  }
}

template <int Dim, class UInt>
void build_with_codes(Bvh<Dim> &bvh, std::span<const Aabb<Dim>> objects) {
  const std::size_t n = objects.size();
  std::vector<UInt> codes(n);
  for (std::size_t i = 0; i < n; ++i)
    codes[i] = morton::code_of<UInt, Dim>(centroid(objects[i]), bvh.scene);

  auto perm = morton::sort_by_code(std::span<const UInt>(codes));
  std::vector<UInt> sorted_codes(n);
  for (std::size_t p = 0; p < n; ++p)
    sorted_codes[p] = codes[static_cast<std::size_t>(perm[p])];

  build_nodes<Dim, UInt>(bvh, objects, std::span<const UInt>(sorted_codes),
                         std::span<const std::int32_t>(perm));
}

} // namespace detail

template <int Dim>
Bvh<Dim> Bvh<Dim>::build(std::span<const Aabb<Dim>> objects, CodeWidth width) {
  Bvh<Dim> bvh;
  bvh.width = width;
  if (objects.empty())
    return bvh;

  for (const auto &box : objects) {
    if (!is_finite(box))
      throw std::invalid_argument("bvh: non-finite object bounds");
    bvh.scene = expand(bvh.scene, box);
  }

  if (width == CodeWidth::k32)
    detail::build_with_codes<Dim, std::uint32_t>(bvh, objects);
  else
    detail::build_with_codes<Dim, std::uint64_t>(bvh, objects);
  return bvh;
}

template <int Dim>
BvhValidation Bvh<Dim>::validate() const {
  auto fail = [](std::string msg) { return BvhValidation{false, std::move(msg)}; };
  const std::int32_t n = size();
  if (n == 0)
    return internals.empty() ? BvhValidation{} : fail("empty hierarchy has internal nodes");
  if (static_cast<std::int32_t>(internals.size()) != n - 1)
    return fail("internal node count is not n-1");

  // Full rope walk: descend to left child, else take the rope. Must visit
  // every leaf exactly once, in leaf order.
  std::int32_t expected_leaf = 0;
  std::int64_t steps = 0;
  NodeRef cur = root();
  while (cur != kSentinel) {
    if (++steps > 2 * static_cast<std::int64_t>(n) + 1)
      return fail("rope walk does not terminate (cycle)");
    if (is_leaf(cur)) {
      if (leaf_pos(cur) != expected_leaf)
        return fail("rope walk visits leaf " + std::to_string(leaf_pos(cur)) + " expecting " +
                    std::to_string(expected_leaf));
      ++expected_leaf;
      cur = leaf(cur).rope;
    } else {
      cur = internal(cur).left_child;
    }
  }
  if (expected_leaf != n)
    return fail("rope walk covered " + std::to_string(expected_leaf) + " of " +
                std::to_string(n) + " leaves");

  // Containment and exact aggregation. The right child of an internal node is
  // the rope target of its left child.
  for (std::int32_t i = 0; i < n - 1; ++i) {
    const auto &node = internals[static_cast<std::size_t>(i)];
    NodeRef left = node.left_child;
    NodeRef right = is_leaf(left) ? leaf(left).rope : internal(left).rope;
    if (right == kSentinel)
      return fail("internal node " + std::to_string(i) + " has no reachable right child");
    if (node.volume != expand(volume(left), volume(right)))
      return fail("internal node " + std::to_string(i) + " volume is not the union of children");
  }

  // Right-most path: those and only those nodes carry the sentinel rope.
  std::int64_t num_sentinel_ropes = 0;
  for (const auto &node : internals)
    num_sentinel_ropes += node.rope == kSentinel;
  for (const auto &l : leaves)
    num_sentinel_ropes += l.rope == kSentinel;
  std::int64_t rightmost_len = 0;
  cur = root();
  while (true) {
    ++rightmost_len;
    if (is_leaf(cur)) {
      if (!(leaf(cur).rope == kSentinel))
        return fail("right-most leaf rope is not the sentinel");
      break;
    }
    if (!(internal(cur).rope == kSentinel))
      return fail("right-most path internal node rope is not the sentinel");
    NodeRef left = internal(cur).left_child;
    cur = is_leaf(left) ? leaf(left).rope : internal(left).rope;
  }
  if (num_sentinel_ropes != rightmost_len)
    return fail("sentinel ropes off the right-most path");

  return BvhValidation{};
}

template <int Dim>
void Bvh<Dim>::dump(std::ostream &os) const {
  auto put_box = [&os](const Aabb<Dim> &b) {
    char buf[64];
    for (int k = 0; k < Dim; ++k) {
      std::snprintf(buf, sizeof(buf), " %.9g", static_cast<double>(b.min_corner[k]));
      os << buf;
    }
    for (int k = 0; k < Dim; ++k) {
      std::snprintf(buf, sizeof(buf), " %.9g", static_cast<double>(b.max_corner[k]));
      os << buf;
    }
  };
  os << "bvh n " << size() << " width " << static_cast<int>(width) << '\n';
  for (std::size_t i = 0; i < internals.size(); ++i) {
    os << "I " << i << " left " << internals[i].left_child.value << " rope "
       << internals[i].rope.value;
    put_box(internals[i].volume);
    os << '\n';
  }
  for (std::size_t p = 0; p < leaves.size(); ++p) {
    os << "L " << p << " object " << leaves[p].object_index << " rope " << leaves[p].rope.value;
    put_box(leaves[p].volume);
    os << '\n';
  }
}

} // namespace spatial

#endif
