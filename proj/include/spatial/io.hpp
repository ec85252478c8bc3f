#ifndef SPATIAL_IO_HPP
#define SPATIAL_IO_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spatial/geometry.hpp"

namespace spatial::io {

// Point set with runtime dimension, stored as interleaved coordinates.
struct PointsData {
  std::int32_t dim = 0;
  std::vector<float> values;

  std::int64_t count() const {
    return dim == 0 ? 0 : static_cast<std::int64_t>(values.size()) / dim;
  }
};

enum class Format { kCsv, kBinary };

// Parse/read failure carrying the offending line (CSV) or byte (binary)
// position in the message.
struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// CSV: one point per line, comma-separated coordinates; the dimension is
// inferred from the first line and enforced afterwards.
//
// Binary layout (little-endian): magic "ABXPTS01", u32 dimension, u64 count,
// then count*dimension float32 values interleaved per point.
PointsData load_points(const std::string &path, Format format);
void save_points(const std::string &path, const PointsData &points, Format format);

void write_labels(const std::string &path, std::span<const std::int32_t> labels);
std::vector<std::int32_t> read_labels(const std::string &path);

template <int Dim>
std::vector<Point<Dim>> to_points(const PointsData &data) {
  if (data.dim != Dim)
    throw std::invalid_argument("dimension mismatch: data is " + std::to_string(data.dim) +
                                "-dimensional");
  std::vector<Point<Dim>> points(static_cast<std::size_t>(data.count()));
  for (std::size_t i = 0; i < points.size(); ++i)
    for (int k = 0; k < Dim; ++k)
      points[i][k] = data.values[i * Dim + static_cast<std::size_t>(k)];
  return points;
}

} // namespace spatial::io

#endif
