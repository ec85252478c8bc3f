#ifndef SPATIAL_UNION_FIND_HPP
#define SPATIAL_UNION_FIND_HPP

#include <atomic>
#include <cassert>
#include <cstdint>
#include <vector>

namespace spatial {

// Disjoint-set structure over [0, n). unite() may be called concurrently
// from many workers: merges go through a compare-and-swap on parent entries
// and a lost race retries. find() concurrent with unions may return a stale
// representative but never corrupts the structure; after all workers join,
// the partition is exact. Roots are always the smallest index of their set,
// so representatives double as canonical cluster ids.
class DisjointSets {
public:
  explicit DisjointSets(std::int32_t n) : parent_(static_cast<std::size_t>(n)) {
    for (std::int32_t i = 0; i < n; ++i)
      parent_[static_cast<std::size_t>(i)].store(i, std::memory_order_relaxed);
  }

  std::int32_t size() const { return static_cast<std::int32_t>(parent_.size()); }

  // Representative lookup with path halving.
  std::int32_t find(std::int32_t i) {
    assert(i >= 0 && i < size());
    while (true) {
      std::int32_t p = parent_[static_cast<std::size_t>(i)].load(std::memory_order_relaxed);
      std::int32_t gp = parent_[static_cast<std::size_t>(p)].load(std::memory_order_relaxed);
      if (p == gp)
        return p;
      parent_[static_cast<std::size_t>(i)].compare_exchange_weak(p, gp,
                                                                 std::memory_order_relaxed);
      i = gp;
    }
  }

  // Merges the sets of i and j; the smaller root index wins. Idempotent, and
  // a self-union is a no-op.
  void unite(std::int32_t i, std::int32_t j) {
    while (true) {
      i = find(i);
      j = find(j);
      if (i == j)
        return;
      if (i > j)
        std::swap(i, j);
      std::int32_t expected = j;
      if (parent_[static_cast<std::size_t>(j)].compare_exchange_strong(
              expected, i, std::memory_order_acq_rel))
        return;
    }
  }

private:
  std::vector<std::atomic<std::int32_t>> parent_;
};

// One-shot per-element latch; the first try_claim() wins. Backs the
// single-assignment rule for border points during cluster merging.
class ClaimFlags {
public:
  explicit ClaimFlags(std::int32_t n) : flags_(static_cast<std::size_t>(n)) {
    for (auto &f : flags_)
      f.store(0, std::memory_order_relaxed);
  }

  std::int32_t size() const { return static_cast<std::int32_t>(flags_.size()); }

  bool try_claim(std::int32_t i) {
    return flags_[static_cast<std::size_t>(i)].exchange(1, std::memory_order_acq_rel) == 0;
  }

  bool claimed(std::int32_t i) const {
    return flags_[static_cast<std::size_t>(i)].load(std::memory_order_acquire) != 0;
  }

private:
  std::vector<std::atomic<std::uint8_t>> flags_;
};

} // namespace spatial

#endif
