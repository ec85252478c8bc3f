#include "spatial/report.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "spatial/geometry.hpp"

namespace spatial {

double derive_eps(double linking_length, double volume, double num_points) {
  if (!(linking_length > 0) || !(volume > 0) || !(num_points > 0))
    throw std::invalid_argument("derive_eps: all inputs must be positive");
  return linking_length * std::cbrt(volume / num_points);
}

namespace {

template <int Dim>
MortonDupReport morton_report_typed(const io::PointsData &data) {
  auto points = io::to_points<Dim>(data);
  Aabb<Dim> scene;
  for (const auto &p : points)
    scene = expand(scene, p);

  std::vector<std::uint32_t> codes32(points.size());
  std::vector<std::uint64_t> codes64(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    codes32[i] = morton::code_of<std::uint32_t, Dim>(points[i], scene);
    codes64[i] = morton::code_of<std::uint64_t, Dim>(points[i], scene);
  }
  MortonDupReport report;
  report.stats32 = morton::compute_stats(std::span<const std::uint32_t>(codes32));
  report.stats64 = morton::compute_stats(std::span<const std::uint64_t>(codes64));
  return report;
}

} // namespace

MortonDupReport morton_report(const io::PointsData &points) {
  if (points.dim == 2)
    return morton_report_typed<2>(points);
  if (points.dim == 3)
    return morton_report_typed<3>(points);
  throw std::invalid_argument("morton_report: dimension must be 2 or 3");
}

void summarize(const DbscanOutput &output, RunReport &report) {
  std::unordered_set<std::int32_t> clusters;
  report.num_noise = 0;
  report.num_core = 0;
  for (std::size_t i = 0; i < output.labels.size(); ++i) {
    if (output.labels[i] == kNoiseLabel)
      ++report.num_noise;
    else
      clusters.insert(output.labels[i]);
    report.num_core += output.core_flags[i] != 0;
  }
  report.num_clusters = static_cast<std::int64_t>(clusters.size());
}

void write_report(std::ostream &os, const RunReport &report) {
  char buf[64];
  auto put_double = [&](const char *key, double value) {
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    os << key << '=' << buf << '\n';
  };
  os << "n=" << report.n << '\n';
  os << "d=" << report.dim << '\n';
  put_double("eps", report.eps);
  os << "min_pts=" << report.min_pts << '\n';
  os << "algorithm=" << report.algorithm << '\n';
  os << "code_width=" << report.code_width << '\n';
  os << "num_clusters=" << report.num_clusters << '\n';
  os << "num_noise=" << report.num_noise << '\n';
  os << "num_core=" << report.num_core << '\n';
  put_double("time_build_ms", report.timings.build_ms);
  put_double("time_core_ms", report.timings.core_ms);
  put_double("time_merge_ms", report.timings.merge_ms);
  put_double("time_finalize_ms", report.timings.finalize_ms);
  put_double("time_total_ms", report.timings.total_ms());
  if (report.morton) {
    auto put_stats = [&os](const char *prefix, const morton::MortonStats &stats) {
      os << prefix << "_codes_duplicated_gt3=" << stats.num_codes_duplicated_gt3 << '\n';
      os << prefix << "_points_with_duplicate_code=" << stats.num_points_with_duplicate_code
         << '\n';
      os << prefix << "_max_same_code_duplicates=" << stats.max_same_code_duplicates << '\n';
    };
    put_stats("morton32", report.morton->stats32);
    put_stats("morton64", report.morton->stats64);
  }
}

void write_report(const std::string &path, const RunReport &report) {
  std::ofstream out(path);
  if (!out)
    throw io::LoadError(path + ": cannot open for writing");
  write_report(out, report);
  if (!out)
    throw io::LoadError(path + ": write failed");
}

} // namespace spatial
