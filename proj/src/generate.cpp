#include "spatial/generate.hpp"

#include <algorithm>
#include <charconv>
#include <random>
#include <stdexcept>

namespace spatial {

namespace {

void require(bool ok, const std::string &msg) {
  if (!ok)
    throw std::invalid_argument(msg);
}

io::PointsData generate_uniform(const UniformSpec &spec) {
  require(spec.n >= 0, "generate: n must be non-negative");
  require(spec.dim == 2 || spec.dim == 3, "generate: dimension must be 2 or 3");
  require(spec.extent > 0, "generate: extent must be positive");

  io::PointsData data;
  data.dim = spec.dim;
  data.values.reserve(static_cast<std::size_t>(spec.n * spec.dim));
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> coord(0.0, spec.extent);
  for (std::int64_t i = 0; i < spec.n; ++i)
    for (std::int32_t k = 0; k < spec.dim; ++k)
      data.values.push_back(static_cast<float>(coord(rng)));
  return data;
}

io::PointsData generate_gaussian_clusters(const GaussianClustersSpec &spec) {
  require(spec.n >= 0, "generate: n must be non-negative");
  require(spec.dim == 2 || spec.dim == 3, "generate: dimension must be 2 or 3");
  require(spec.num_clusters >= 1, "generate: need at least one cluster");
  require(spec.sigma >= 0, "generate: sigma must be non-negative");
  require(spec.extent > 0, "generate: extent must be positive");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> center_coord(0.0, spec.extent);
  std::normal_distribution<double> offset(0.0, spec.sigma);

  std::vector<double> centers(static_cast<std::size_t>(spec.num_clusters) *
                              static_cast<std::size_t>(spec.dim));
  for (auto &c : centers)
    c = center_coord(rng);

  io::PointsData data;
  data.dim = spec.dim;
  data.values.reserve(static_cast<std::size_t>(spec.n * spec.dim));
  // Equal-sized blocks per cluster; the remainder goes to the first clusters.
  for (std::int64_t i = 0; i < spec.n; ++i) {
    auto cluster = static_cast<std::size_t>(
        i / ((spec.n + spec.num_clusters - 1) / spec.num_clusters));
    cluster = std::min(cluster, static_cast<std::size_t>(spec.num_clusters - 1));
    for (std::int32_t k = 0; k < spec.dim; ++k) {
      double v = centers[cluster * static_cast<std::size_t>(spec.dim) +
                         static_cast<std::size_t>(k)] +
                 offset(rng);
      v = std::clamp(v, 0.0, spec.extent);
      data.values.push_back(static_cast<float>(v));
    }
  }
  return data;
}

std::vector<double> parse_number_list(std::string_view args, std::size_t expected,
                                      const std::string &what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= args.size() && !args.empty()) {
    std::size_t comma = args.find(',', start);
    std::string_view field = args.substr(start, (comma == std::string_view::npos ? args.size() : comma) - start);
    while (!field.empty() && field.front() == ' ')
      field.remove_prefix(1);
    while (!field.empty() && field.back() == ' ')
      field.remove_suffix(1);
    double value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
      throw std::invalid_argument("generate: malformed number in " + what + " spec");
    out.push_back(value);
    if (comma == std::string_view::npos)
      break;
    start = comma + 1;
  }
  if (out.size() != expected)
    throw std::invalid_argument("generate: " + what + " expects " + std::to_string(expected) +
                                " arguments");
  return out;
}

} // namespace

io::PointsData generate(const GenerateSpec &spec) {
  if (const auto *uniform = std::get_if<UniformSpec>(&spec))
    return generate_uniform(*uniform);
  return generate_gaussian_clusters(std::get<GaussianClustersSpec>(spec));
}

GenerateSpec parse_generate_spec(const std::string &text, std::uint64_t default_seed) {
  auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')')
    throw std::invalid_argument("generate: spec must be name(arg,...)");
  std::string name = text.substr(0, open);
  std::string_view args(text.data() + open + 1, text.size() - open - 2);

  if (name == "uniform") {
    auto v = parse_number_list(args, 3, "uniform");
    UniformSpec spec;
    spec.n = static_cast<std::int64_t>(v[0]);
    spec.dim = static_cast<std::int32_t>(v[1]);
    spec.extent = v[2];
    spec.seed = default_seed;
    return spec;
  }
  if (name == "gaussian_clusters") {
    auto v = parse_number_list(args, 6, "gaussian_clusters");
    GaussianClustersSpec spec;
    spec.n = static_cast<std::int64_t>(v[0]);
    spec.dim = static_cast<std::int32_t>(v[1]);
    spec.num_clusters = static_cast<std::int32_t>(v[2]);
    spec.sigma = v[3];
    spec.extent = v[4];
    spec.seed = static_cast<std::uint64_t>(v[5]);
    return spec;
  }
  throw std::invalid_argument("generate: unknown generator '" + name + "'");
}

} // namespace spatial
