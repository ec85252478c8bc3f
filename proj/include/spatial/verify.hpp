#ifndef SPATIAL_VERIFY_HPP
#define SPATIAL_VERIFY_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "spatial/dbscan.hpp"
#include "spatial/geometry.hpp"

namespace spatial {

// Checks a clustering against the reference output: core-point set and noise
// set must match exactly, the partition restricted to core points must be
// identical, and every border label must name a cluster with a core point
// within eps of the border point. Border assignment itself is free to
// differ. Returns the first violation, or nullopt when equivalent.
template <int Dim>
std::optional<std::string> check_equivalence(std::span<const Point<Dim>> points, float eps,
                                             const DbscanOutput &got, const DbscanOutput &want) {
  const std::size_t n = points.size();
  if (got.labels.size() != n || want.labels.size() != n)
    return "label count does not match point count";

  for (std::size_t i = 0; i < n; ++i)
    if (got.core_flags[i] != want.core_flags[i])
      return "core flag mismatch at point " + std::to_string(i);
  for (std::size_t i = 0; i < n; ++i)
    if ((got.labels[i] == kNoiseLabel) != (want.labels[i] == kNoiseLabel))
      return "noise mismatch at point " + std::to_string(i);

  // Core partition equality via a bijective label correspondence.
  std::unordered_map<std::int32_t, std::int32_t> fwd, rev;
  for (std::size_t i = 0; i < n; ++i) {
    if (!want.core_flags[i])
      continue;
    auto [fit, fnew] = fwd.emplace(want.labels[i], got.labels[i]);
    if (!fnew && fit->second != got.labels[i])
      return "core partition mismatch at point " + std::to_string(i);
    auto [rit, rnew] = rev.emplace(got.labels[i], want.labels[i]);
    if (!rnew && rit->second != want.labels[i])
      return "core clusters merged at point " + std::to_string(i);
  }

  // Border validity: the assigned cluster must contain a core point within
  // eps of the border point.
  for (std::size_t b = 0; b < n; ++b) {
    if (got.core_flags[b] || got.labels[b] == kNoiseLabel)
      continue;
    bool valid = false;
    for (std::size_t c = 0; c < n && !valid; ++c)
      valid = got.core_flags[c] && got.labels[c] == got.labels[b] &&
              distance(points[b], points[c]) <= eps;
    if (!valid)
      return "border point " + std::to_string(b) + " has no in-cluster core point within eps";
  }
  return std::nullopt;
}

} // namespace spatial

#endif
