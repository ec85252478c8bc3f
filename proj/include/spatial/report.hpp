#ifndef SPATIAL_REPORT_HPP
#define SPATIAL_REPORT_HPP

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "spatial/dbscan.hpp"
#include "spatial/io.hpp"
#include "spatial/morton.hpp"

namespace spatial {

// eps = b * (V/n)^(1/3): the linking-length rule for deriving the clustering
// radius from a simulation volume and particle count.
double derive_eps(double linking_length, double volume, double num_points);

// Duplicate-code statistics at both supported code widths.
struct MortonDupReport {
  morton::MortonStats stats32;
  morton::MortonStats stats64;
};

MortonDupReport morton_report(const io::PointsData &points);

struct RunReport {
  std::int64_t n = 0;
  std::int32_t dim = 0;
  double eps = 0;
  std::int32_t min_pts = 0;
  std::string algorithm;
  std::int32_t code_width = 64;
  std::int64_t num_clusters = 0;
  std::int64_t num_noise = 0;
  std::int64_t num_core = 0;
  DbscanTimings timings;
  std::optional<MortonDupReport> morton;
};

// Counts clusters, noise, and core points out of a clustering result.
void summarize(const DbscanOutput &output, RunReport &report);

// Flat key=value text document, one pair per line (see the repository README
// for the key set).
void write_report(std::ostream &os, const RunReport &report);
void write_report(const std::string &path, const RunReport &report);

} // namespace spatial

#endif
