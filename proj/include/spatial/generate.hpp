#ifndef SPATIAL_GENERATE_HPP
#define SPATIAL_GENERATE_HPP

#include <cstdint>
#include <string>
#include <variant>

#include "spatial/io.hpp"

namespace spatial {

// n points uniform in [0, extent)^d.
struct UniformSpec {
  std::int64_t n = 0;
  std::int32_t dim = 3;
  double extent = 1.0;
  std::uint64_t seed = 0;
};

// Cluster centers uniform in the extent; points normal around their center
// with the given sigma, clipped to the extent. Points are assigned to
// clusters in equal-sized blocks.
struct GaussianClustersSpec {
  std::int64_t n = 0;
  std::int32_t dim = 3;
  std::int32_t num_clusters = 1;
  double sigma = 0.01;
  double extent = 1.0;
  std::uint64_t seed = 0;
};

using GenerateSpec = std::variant<UniformSpec, GaussianClustersSpec>;

// Deterministic for a fixed spec (including the seed).
io::PointsData generate(const GenerateSpec &spec);

// Parses "uniform(n,d,extent)" or "gaussian_clusters(n,d,k,sigma,extent,seed)".
// The uniform form takes its seed from default_seed. Throws
// std::invalid_argument on malformed specs.
GenerateSpec parse_generate_spec(const std::string &text, std::uint64_t default_seed);

} // namespace spatial

#endif
