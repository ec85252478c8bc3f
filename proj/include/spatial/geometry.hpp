#ifndef SPATIAL_GEOMETRY_HPP
#define SPATIAL_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace spatial {

// A d-dimensional point with single-precision coordinates. Coordinates are
// expected to be finite; ingestion paths (loaders, generators, tree build)
// reject NaN/infinity so the hot paths never re-check.
template <int Dim>
struct Point {
  static_assert(Dim == 2 || Dim == 3, "only 2- and 3-dimensional data is supported");

  std::array<float, Dim> coords{};

  float &operator[](int k) { return coords[static_cast<std::size_t>(k)]; }
  float operator[](int k) const { return coords[static_cast<std::size_t>(k)]; }

  friend bool operator==(const Point &, const Point &) = default;
};

// Axis-aligned bounding box. The default-constructed box is "empty"
// (min=+huge, max=-huge) and acts as the identity of expand().
template <int Dim>
struct Aabb {
  Point<Dim> min_corner;
  Point<Dim> max_corner;

  constexpr Aabb() {
    for (int k = 0; k < Dim; ++k) {
      min_corner[k] = std::numeric_limits<float>::max();
      max_corner[k] = std::numeric_limits<float>::lowest();
    }
  }
  constexpr Aabb(const Point<Dim> &lo, const Point<Dim> &hi) : min_corner(lo), max_corner(hi) {}

  bool is_empty() const { return min_corner[0] > max_corner[0]; }

  friend bool operator==(const Aabb &, const Aabb &) = default;
};

template <int Dim>
struct Sphere {
  Point<Dim> center;
  float radius = 0.f;
};

template <int Dim>
inline Aabb<Dim> point_box(const Point<Dim> &p) {
  return Aabb<Dim>(p, p);
}

template <int Dim>
inline bool is_finite(const Point<Dim> &p) {
  for (int k = 0; k < Dim; ++k)
    if (!std::isfinite(p[k]))
      return false;
  return true;
}

template <int Dim>
inline bool is_finite(const Aabb<Dim> &b) {
  return is_finite(b.min_corner) && is_finite(b.max_corner);
}

// Euclidean distance. Squared terms accumulate in double precision and the
// result is rounded back to single precision once.
template <int Dim>
inline float distance(const Point<Dim> &a, const Point<Dim> &b) {
  double s = 0;
  for (int k = 0; k < Dim; ++k) {
    double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    s += d * d;
  }
  return static_cast<float>(std::sqrt(s));
}

// Distance from p to the closest point of b; 0 if p is inside b. For a
// degenerate point-box this reproduces distance() bit-for-bit, which keeps
// leaf-level predicate tests exact for point data.
template <int Dim>
inline float min_distance(const Point<Dim> &p, const Aabb<Dim> &b) {
  double s = 0;
  for (int k = 0; k < Dim; ++k) {
    double lo = static_cast<double>(b.min_corner[k]) - static_cast<double>(p[k]);
    double hi = static_cast<double>(p[k]) - static_cast<double>(b.max_corner[k]);
    double gap = std::max({lo, hi, 0.0});
    s += gap * gap;
  }
  return static_cast<float>(std::sqrt(s));
}

template <int Dim>
inline Aabb<Dim> expand(Aabb<Dim> b, const Point<Dim> &p) {
  for (int k = 0; k < Dim; ++k) {
    b.min_corner[k] = std::min(b.min_corner[k], p[k]);
    b.max_corner[k] = std::max(b.max_corner[k], p[k]);
  }
  return b;
}

template <int Dim>
inline Aabb<Dim> expand(Aabb<Dim> b, const Aabb<Dim> &other) {
  for (int k = 0; k < Dim; ++k) {
    b.min_corner[k] = std::min(b.min_corner[k], other.min_corner[k]);
    b.max_corner[k] = std::max(b.max_corner[k], other.max_corner[k]);
  }
  return b;
}

template <int Dim>
inline bool intersects(const Aabb<Dim> &b, const Sphere<Dim> &s) {
  return min_distance(s.center, b) <= s.radius;
}

// Overlapping or touching on every axis.
template <int Dim>
inline bool intersects(const Aabb<Dim> &a, const Aabb<Dim> &b) {
  for (int k = 0; k < Dim; ++k)
    if (a.min_corner[k] > b.max_corner[k] || b.min_corner[k] > a.max_corner[k])
      return false;
  return true;
}

template <int Dim>
inline Point<Dim> centroid(const Aabb<Dim> &b) {
  Point<Dim> c;
  for (int k = 0; k < Dim; ++k)
    c[k] = static_cast<float>(
        (static_cast<double>(b.min_corner[k]) + static_cast<double>(b.max_corner[k])) * 0.5);
  return c;
}

} // namespace spatial

#endif
