#ifndef SPATIAL_DENSE_GRID_HPP
#define SPATIAL_DENSE_GRID_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "spatial/geometry.hpp"

namespace spatial {

template <int Dim>
struct CellCoord {
  std::array<std::int64_t, Dim> c{};

  friend bool operator==(const CellCoord &, const CellCoord &) = default;
};

template <int Dim>
struct CellCoordHash {
  std::size_t operator()(const CellCoord<Dim> &cc) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    for (int k = 0; k < Dim; ++k) {
      h ^= static_cast<std::uint64_t>(cc.c[static_cast<std::size_t>(k)]) + 0x9e3779b97f4a7c15ull +
           (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

// A virtual regular grid of cell length eps/sqrt(d) superimposed over the
// data, keyed by integer cell coordinates and anchored at the scene minimum
// corner. The cell diameter never exceeds eps, so any two points sharing a
// cell are within eps of each other. Cells holding at least min_pts points
// are "dense": all their members are core points and intra-cell distance
// checks are unnecessary.
template <int Dim>
struct DenseGrid {
  struct Cell {
    std::vector<std::int32_t> members; // original point indices
    bool dense = false;
  };

  float cell_length = 0.f;
  Point<Dim> anchor{};
  std::unordered_map<CellCoord<Dim>, Cell, CellCoordHash<Dim>> cells;

  CellCoord<Dim> coord_of(const Point<Dim> &p) const {
    // Clamp against int64 overflow for degenerate eps/extent ratios; the
    // grid builder refuses to flag any cell dense in that regime, so a
    // clamped (merged) cell can never union distant points.
    constexpr double kLimit = 4.0e18;
    CellCoord<Dim> cc;
    for (int k = 0; k < Dim; ++k) {
      double f = std::floor((static_cast<double>(p[k]) - static_cast<double>(anchor[k])) /
                            static_cast<double>(cell_length));
      f = std::clamp(f, -kLimit, kLimit);
      cc.c[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(f);
    }
    return cc;
  }
};

// Bins every point into its grid cell and flags the dense ones. The cell
// length is shaved by a factor (1 - 1e-6) so that the within-eps guarantee
// for cell mates survives floating-point rounding at the eps boundary.
template <int Dim>
DenseGrid<Dim> build_dense_grid(std::span<const Point<Dim>> points, float eps,
                                std::int32_t min_pts) {
  DenseGrid<Dim> grid;
  grid.cell_length = static_cast<float>(static_cast<double>(eps) / std::sqrt(double{Dim}) *
                                        (1.0 - 1e-6));
  if (points.empty())
    return grid;

  Aabb<Dim> scene;
  for (const auto &p : points)
    scene = expand(scene, p);
  grid.anchor = scene.min_corner;

  // If the virtual grid would exceed the integer coordinate range on some
  // axis, cell coordinates saturate and unrelated points could share a cell.
  // Dense cells are an optimization only, so in that regime no cell is
  // flagged dense and every point goes through the exact per-point path.
  bool may_clamp = !(grid.cell_length > 0.f);
  for (int k = 0; k < Dim && !may_clamp; ++k) {
    double extent =
        static_cast<double>(scene.max_corner[k]) - static_cast<double>(scene.min_corner[k]);
    may_clamp = extent / static_cast<double>(grid.cell_length) >= 4.0e18;
  }
  if (!(grid.cell_length > 0.f))
    grid.cell_length = 1.f; // keep coord_of defined; cells are all non-dense

  for (std::size_t i = 0; i < points.size(); ++i)
    grid.cells[grid.coord_of(points[i])].members.push_back(static_cast<std::int32_t>(i));
  for (auto &[coord, cell] : grid.cells)
    cell.dense = !may_clamp && static_cast<std::int32_t>(cell.members.size()) >= min_pts;
  return grid;
}

} // namespace spatial

#endif
