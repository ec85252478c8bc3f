#include "spatial/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace spatial::io {

namespace {

constexpr char kMagic[8] = {'A', 'B', 'X', 'P', 'T', 'S', '0', '1'};

[[noreturn]] void fail(const std::string &msg) { throw LoadError(msg); }

float parse_coordinate(std::string_view field, const std::string &path, std::int64_t line) {
  // Trim surrounding blanks; from_chars wants a bare number.
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
    field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
    field.remove_suffix(1);
  float value = 0.f;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    fail(path + ": malformed value at line " + std::to_string(line));
  if (!std::isfinite(value))
    fail(path + ": non-finite value at line " + std::to_string(line));
  return value;
}

PointsData load_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    fail(path + ": cannot open");
  PointsData data;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r")
      continue;
    std::int32_t fields = 0;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      std::string_view field(line.data() + start,
                             (comma == std::string::npos ? line.size() : comma) - start);
      data.values.push_back(parse_coordinate(field, path, line_no));
      ++fields;
      if (comma == std::string::npos)
        break;
      start = comma + 1;
    }
    if (data.dim == 0) {
      if (fields != 2 && fields != 3)
        fail(path + ": line 1 has " + std::to_string(fields) +
             " coordinates; only 2- and 3-dimensional data is supported");
      data.dim = fields;
    } else if (fields != data.dim) {
      fail(path + ": line " + std::to_string(line_no) + " has " + std::to_string(fields) +
           " coordinates, expected " + std::to_string(data.dim));
    }
  }
  return data;
}

PointsData load_binary(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(path + ": cannot open");

  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    fail(path + ": bad magic at byte 0");

  std::uint32_t dim = 0;
  std::uint64_t count = 0;
  if (!in.read(reinterpret_cast<char *>(&dim), sizeof(dim)))
    fail(path + ": truncated header at byte 8");
  if (!in.read(reinterpret_cast<char *>(&count), sizeof(count)))
    fail(path + ": truncated header at byte 12");
  if (dim != 2 && dim != 3)
    fail(path + ": dimension " + std::to_string(dim) + " out of range at byte 8");

  PointsData data;
  data.dim = static_cast<std::int32_t>(dim);
  data.values.resize(count * dim);
  const std::int64_t payload_start = 20;
  if (!data.values.empty() &&
      !in.read(reinterpret_cast<char *>(data.values.data()),
               static_cast<std::streamsize>(data.values.size() * sizeof(float)))) {
    std::int64_t got = in.gcount();
    fail(path + ": truncated payload at byte " + std::to_string(payload_start + got));
  }
  for (std::size_t i = 0; i < data.values.size(); ++i)
    if (!std::isfinite(data.values[i]))
      fail(path + ": non-finite value at byte " +
           std::to_string(payload_start + static_cast<std::int64_t>(i * sizeof(float))));
  return data;
}

} // namespace

PointsData load_points(const std::string &path, Format format) {
  return format == Format::kCsv ? load_csv(path) : load_binary(path);
}

void save_points(const std::string &path, const PointsData &points, Format format) {
  if (format == Format::kCsv) {
    std::ofstream out(path);
    if (!out)
      fail(path + ": cannot open for writing");
    char buf[64];
    for (std::int64_t i = 0; i < points.count(); ++i) {
      for (std::int32_t k = 0; k < points.dim; ++k) {
        std::snprintf(buf, sizeof(buf), "%.9g",
                      static_cast<double>(points.values[static_cast<std::size_t>(
                          i * points.dim + k)]));
        out << (k ? "," : "") << buf;
      }
      out << '\n';
    }
    if (!out)
      fail(path + ": write failed");
    return;
  }

  std::ofstream out(path, std::ios::binary);
  if (!out)
    fail(path + ": cannot open for writing");
  out.write(kMagic, sizeof(kMagic));
  auto dim = static_cast<std::uint32_t>(points.dim);
  auto count = static_cast<std::uint64_t>(points.count());
  out.write(reinterpret_cast<const char *>(&dim), sizeof(dim));
  out.write(reinterpret_cast<const char *>(&count), sizeof(count));
  out.write(reinterpret_cast<const char *>(points.values.data()),
            static_cast<std::streamsize>(points.values.size() * sizeof(float)));
  if (!out)
    fail(path + ": write failed");
}

void write_labels(const std::string &path, std::span<const std::int32_t> labels) {
  std::ofstream out(path);
  if (!out)
    fail(path + ": cannot open for writing");
  for (std::int32_t label : labels)
    out << label << '\n';
  if (!out)
    fail(path + ": write failed");
}

std::vector<std::int32_t> read_labels(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    fail(path + ": cannot open");
  std::vector<std::int32_t> labels;
  std::int64_t value = 0;
  while (in >> value)
    labels.push_back(static_cast<std::int32_t>(value));
  return labels;
}

} // namespace spatial::io
