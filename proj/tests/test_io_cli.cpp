#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unistd.h>

#include "spatial/dbscan.hpp"
#include "spatial/generate.hpp"
#include "spatial/io.hpp"
#include "spatial/report.hpp"

using namespace spatial;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  static fs::path dir = [] {
    auto d = fs::temp_directory_path() /
             ("scluster_test_" + std::to_string(static_cast<long long>(::getpid())));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_file(const std::string &name, const std::string &contents) {
  auto path = scratch_dir() / name;
  std::ofstream out(path, std::ios::binary);
  out << contents;
  return path;
}

std::string slurp(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string &args, std::string *output = nullptr) {
  static int counter = 0;
  auto log = scratch_dir() / ("cli_out_" + std::to_string(counter++) + ".txt");
  std::string cmd = std::string(SCLUSTER_BIN) + " " + args + " > " + log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  if (output)
    *output = slurp(log);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> parse_report(const fs::path &path) {
  std::map<std::string, std::string> kv;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    auto eq = line.find('=');
    REQUIRE(eq != std::string::npos);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

} // namespace

TEST_CASE("csv loading: dimensions inferred and enforced") {
  auto path = write_file("ok.csv", "0,0,0\n1,1,1\n");
  auto data = io::load_points(path.string(), io::Format::kCsv);
  CHECK(data.dim == 3);
  CHECK(data.count() == 2);
  CHECK(data.values == std::vector<float>{0, 0, 0, 1, 1, 1});

  auto mixed = write_file("mixed.csv", "0,0,0\n1,1\n");
  CHECK_THROWS_WITH_AS(io::load_points(mixed.string(), io::Format::kCsv),
                       doctest::Contains("line 2"), io::LoadError);

  auto junk = write_file("junk.csv", "0,0,0\n1,x,1\n");
  CHECK_THROWS_WITH_AS(io::load_points(junk.string(), io::Format::kCsv),
                       doctest::Contains("line 2"), io::LoadError);

  auto inf = write_file("inf.csv", "0,0,0\n1,inf,1\n");
  CHECK_THROWS_AS(io::load_points(inf.string(), io::Format::kCsv), io::LoadError);

  CHECK_THROWS_AS(io::load_points((scratch_dir() / "missing.csv").string(), io::Format::kCsv),
                  io::LoadError);
}

TEST_CASE("binary round trip is the identity") {
  io::PointsData data;
  data.dim = 2;
  data.values = {0.1f, 0.2f, -3.5f, 7.25f, 1e-9f, 42.f};
  auto path = scratch_dir() / "points.bin";
  io::save_points(path.string(), data, io::Format::kBinary);
  auto loaded = io::load_points(path.string(), io::Format::kBinary);
  CHECK(loaded.dim == data.dim);
  CHECK(loaded.values == data.values);

  // CSV round trip preserves values as well (9 significant digits).
  auto csv_path = scratch_dir() / "points.csv";
  io::save_points(csv_path.string(), data, io::Format::kCsv);
  auto csv_loaded = io::load_points(csv_path.string(), io::Format::kCsv);
  CHECK(csv_loaded.values == data.values);
}

TEST_CASE("binary loading: bad magic, bad dimension, truncation") {
  auto bad_magic = write_file("bad_magic.bin", "NOTMAGIC........");
  CHECK_THROWS_WITH_AS(io::load_points(bad_magic.string(), io::Format::kBinary),
                       doctest::Contains("byte 0"), io::LoadError);

  io::PointsData data;
  data.dim = 3;
  data.values = {1, 2, 3};
  auto path = scratch_dir() / "trunc.bin";
  io::save_points(path.string(), data, io::Format::kBinary);
  auto raw = slurp(path);
  write_file("trunc.bin2", raw.substr(0, raw.size() - 4));
  CHECK_THROWS_WITH_AS(io::load_points((scratch_dir() / "trunc.bin2").string(),
                                       io::Format::kBinary),
                       doctest::Contains("truncated"), io::LoadError);

  raw[8] = 5; // dimension byte
  write_file("bad_dim.bin", raw);
  CHECK_THROWS_WITH_AS(io::load_points((scratch_dir() / "bad_dim.bin").string(),
                                       io::Format::kBinary),
                       doctest::Contains("dimension"), io::LoadError);
}

TEST_CASE("labels file round trip") {
  std::vector<std::int32_t> labels{0, 0, kNoiseLabel, 3, 3};
  auto path = scratch_dir() / "labels.txt";
  io::write_labels(path.string(), std::span<const std::int32_t>(labels));
  CHECK(slurp(path) == "0\n0\n-1\n3\n3\n");
  CHECK(io::read_labels(path.string()) == labels);
}

TEST_CASE("generators: determinism, bounds, and spec parsing") {
  UniformSpec spec{1000, 3, 2.5, 77};
  auto a = generate(spec);
  auto b = generate(spec);
  CHECK(a.values == b.values); // bit identical
  CHECK(a.count() == 1000);
  for (float v : a.values) {
    CHECK(v >= 0.f);
    CHECK(v <= 2.5f); // float rounding may land exactly on the bound
  }

  auto empty = generate(UniformSpec{0, 2, 1.0, 0});
  CHECK(empty.count() == 0);

  auto parsed = parse_generate_spec("uniform(10,2,4.0)", 9);
  REQUIRE(std::holds_alternative<UniformSpec>(parsed));
  CHECK(std::get<UniformSpec>(parsed).n == 10);
  CHECK(std::get<UniformSpec>(parsed).seed == 9);

  parsed = parse_generate_spec("gaussian_clusters(100,3,4,0.5,100,11)", 0);
  REQUIRE(std::holds_alternative<GaussianClustersSpec>(parsed));
  CHECK(std::get<GaussianClustersSpec>(parsed).sigma == 0.5);
  CHECK(std::get<GaussianClustersSpec>(parsed).seed == 11);

  CHECK_THROWS_AS(parse_generate_spec("uniform(10,2)", 0), std::invalid_argument);
  CHECK_THROWS_AS(parse_generate_spec("blobs(1,2,3)", 0), std::invalid_argument);
  CHECK_THROWS_AS(generate(UniformSpec{10, 4, 1.0, 0}), std::invalid_argument);
}

TEST_CASE("gaussian clusters concentrate around stable per-block centers") {
  GaussianClustersSpec spec{40000, 3, 4, 0.5, 100.0, 12};
  auto data = generate(spec);
  REQUIRE(data.count() == 40000);
  const std::int64_t block = 10000;
  const double tolerance = 5 * spec.sigma / std::sqrt(static_cast<double>(block) / 2);
  for (int c = 0; c < 4; ++c) {
    // Two disjoint halves of a block estimate the same center.
    for (int k = 0; k < 3; ++k) {
      double first = 0, second = 0;
      for (std::int64_t i = 0; i < block; ++i) {
        double v = data.values[static_cast<std::size_t>((c * block + i) * 3 + k)];
        (i < block / 2 ? first : second) += v;
      }
      first /= static_cast<double>(block / 2);
      second /= static_cast<double>(block / 2);
      CHECK(std::abs(first - second) <= tolerance);
    }
  }
}

TEST_CASE("derive_eps: the linking-length formula") {
  CHECK(derive_eps(0.168, 256.0 * 256 * 256, 1024.0 * 1024 * 1024) ==
        doctest::Approx(0.042).epsilon(1e-9));
  CHECK(derive_eps(1.0, 1000.0, 1000.0) == doctest::Approx(1.0));
  CHECK(derive_eps(0.2, 1000.0, 1000.0) == doctest::Approx(0.2));
  CHECK_THROWS_AS(derive_eps(0.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(derive_eps(1.0, -2.0, 1.0), std::invalid_argument);
}

TEST_CASE("morton report: identical points duplicate at both widths, grids at none") {
  io::PointsData identical;
  identical.dim = 3;
  for (int i = 0; i < 5; ++i)
    for (int k = 0; k < 3; ++k)
      identical.values.push_back(0.25f);
  auto report = morton_report(identical);
  CHECK(report.stats32.num_points_with_duplicate_code == 5);
  CHECK(report.stats64.num_points_with_duplicate_code == 5);

  io::PointsData grid;
  grid.dim = 3;
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y)
      for (int z = 0; z < 4; ++z) {
        grid.values.push_back(static_cast<float>(x));
        grid.values.push_back(static_cast<float>(y));
        grid.values.push_back(static_cast<float>(z));
      }
  report = morton_report(grid);
  CHECK(report.stats32.num_points_with_duplicate_code == 0);
  CHECK(report.stats64.num_points_with_duplicate_code == 0);
}

// ---- CLI integration ----

TEST_CASE("cli: two generated blobs cluster cleanly under every algorithm") {
  // Two tight, well-separated blobs of 100 points each.
  std::string common = "--generate 'gaussian_clusters(200,3,2,0.001,100,42)' --eps 1 ";
  std::map<std::string, std::map<std::string, std::string>> reports;
  for (std::string algo : {"fdbscan", "densebox", "fof", "legacy", "oracle"}) {
    auto report_path = scratch_dir() / ("report_" + algo + ".txt");
    std::string out;
    int rc = run_cli(common + "--minpts 2 --algo " + algo + " --report-out " +
                         report_path.string(),
                     &out);
    INFO(out);
    REQUIRE(rc == 0);
    reports[algo] = parse_report(report_path);
    CHECK(reports[algo]["num_clusters"] == "2");
    CHECK(reports[algo]["num_noise"] == "0");
    CHECK(reports[algo]["n"] == "200");
  }
  // Cross-algorithm agreement on the counting triple.
  for (const auto &[algo, kv] : reports) {
    CHECK(kv.at("num_clusters") == reports["fdbscan"].at("num_clusters"));
    CHECK(kv.at("num_noise") == reports["fdbscan"].at("num_noise"));
    CHECK(kv.at("num_core") == reports["fdbscan"].at("num_core"));
  }
}

TEST_CASE("cli: verification run exits zero on a 5000-point instance") {
  std::string out;
  int rc = run_cli("--generate 'gaussian_clusters(5000,3,5,0.05,10,3)' --eps 0.2 --minpts 4 "
                   "--algo densebox --verify",
                   &out);
  INFO(out);
  CHECK(rc == 0);
  CHECK(out.find("verify: OK") != std::string::npos);
}

TEST_CASE("cli: labels file recount matches the report") {
  auto labels_path = scratch_dir() / "labels_recount.txt";
  auto report_path = scratch_dir() / "report_recount.txt";
  int rc = run_cli("--generate 'gaussian_clusters(3000,2,6,0.01,1,5)' --eps 0.02 --minpts 5 "
                   "--labels-out " +
                   labels_path.string() + " --report-out " + report_path.string());
  REQUIRE(rc == 0);
  auto labels = io::read_labels(labels_path.string());
  auto kv = parse_report(report_path);
  REQUIRE(labels.size() == 3000);

  std::set<std::int32_t> clusters;
  std::int64_t noise = 0;
  for (auto label : labels)
    label == kNoiseLabel ? void(++noise) : void(clusters.insert(label));
  CHECK(std::to_string(clusters.size()) == kv["num_clusters"]);
  CHECK(std::to_string(noise) == kv["num_noise"]);
  CHECK(static_cast<std::int64_t>(labels.size()) - noise > 0);
}

TEST_CASE("cli: sequential reruns are bit-identical") {
  auto first = scratch_dir() / "seq_a.txt";
  auto second = scratch_dir() / "seq_b.txt";
  std::string common = "--generate 'gaussian_clusters(2000,3,4,0.02,1,9)' --eps 0.05 --minpts 4 "
                       "--sequential --algo fdbscan --labels-out ";
  REQUIRE(run_cli(common + first.string()) == 0);
  REQUIRE(run_cli(common + second.string()) == 0);
  CHECK(slurp(first) == slurp(second));
}

TEST_CASE("cli: derive-eps resolves the documented example") {
  auto report_path = scratch_dir() / "report_eps.txt";
  int rc = run_cli("--generate 'uniform(10,3,1)' --derive-eps 0.168,16777216,1073741824 "
                   "--report-out " +
                   report_path.string());
  REQUIRE(rc == 0);
  auto kv = parse_report(report_path);
  CHECK(std::stod(kv["eps"]) == doctest::Approx(0.042).epsilon(1e-6));
}

TEST_CASE("cli: morton report keys appear when requested") {
  auto report_path = scratch_dir() / "report_morton.txt";
  int rc = run_cli("--generate 'gaussian_clusters(10000,3,4,0.0001,1,8)' --eps 0.01 "
                   "--morton-report --report-out " +
                   report_path.string());
  REQUIRE(rc == 0);
  auto kv = parse_report(report_path);
  REQUIRE(kv.count("morton32_points_with_duplicate_code") == 1);
  REQUIRE(kv.count("morton64_points_with_duplicate_code") == 1);
  CHECK(std::stoll(kv["morton64_points_with_duplicate_code"]) <
        std::stoll(kv["morton32_points_with_duplicate_code"]));
}

TEST_CASE("cli: input file pipeline") {
  auto csv = write_file("cli_points.csv", "0,0\n0.05,0\n0.1,0\n5,5\n");
  auto labels_path = scratch_dir() / "cli_labels.txt";
  int rc = run_cli("--input " + csv.string() + " --format csv --eps 0.06 --minpts 2 "
                   "--labels-out " + labels_path.string());
  REQUIRE(rc == 0);
  CHECK(io::read_labels(labels_path.string()) ==
        std::vector<std::int32_t>{0, 0, 0, kNoiseLabel});
}

TEST_CASE("cli: 32-bit code width and binary input") {
  io::PointsData data;
  data.dim = 3;
  std::mt19937 rng(55);
  std::uniform_real_distribution<float> coord(0.f, 1.f);
  for (int i = 0; i < 500; ++i)
    for (int k = 0; k < 3; ++k)
      data.values.push_back(coord(rng));
  auto bin_path = scratch_dir() / "cli_points.bin";
  io::save_points(bin_path.string(), data, io::Format::kBinary);

  auto report32 = scratch_dir() / "report_w32.txt";
  auto report64 = scratch_dir() / "report_w64.txt";
  REQUIRE(run_cli("--input " + bin_path.string() + " --format binary --eps 0.1 "
                  "--code-width 32 --report-out " + report32.string()) == 0);
  REQUIRE(run_cli("--input " + bin_path.string() + " --format binary --eps 0.1 "
                  "--code-width 64 --report-out " + report64.string()) == 0);
  auto kv32 = parse_report(report32);
  auto kv64 = parse_report(report64);
  CHECK(kv32["code_width"] == "32");
  CHECK(kv32["num_clusters"] == kv64["num_clusters"]);
  CHECK(kv32["num_noise"] == kv64["num_noise"]);
  CHECK(kv32["num_core"] == kv64["num_core"]);
}

TEST_CASE("cli: empty generated set") {
  auto report_path = scratch_dir() / "report_empty.txt";
  auto labels_path = scratch_dir() / "labels_empty.txt";
  int rc = run_cli("--generate 'uniform(0,3,1)' --eps 0.1 --report-out " + report_path.string() +
                   " --labels-out " + labels_path.string());
  REQUIRE(rc == 0);
  auto kv = parse_report(report_path);
  CHECK(kv["n"] == "0");
  CHECK(kv["num_clusters"] == "0");
  CHECK(slurp(labels_path).empty());
}

TEST_CASE("cli: exit codes for usage, I/O, and conflicting flags") {
  std::string out;
  CHECK(run_cli("--generate 'uniform(10,3,1)'", &out) == 1);          // missing eps
  CHECK(run_cli("--eps 0.1", &out) == 1);                           // missing input
  CHECK(run_cli("--generate 'uniform(10,3,1)' --eps 1 --algo nope", &out) == 1);
  CHECK(run_cli("--generate 'uniform(10,3,1)' --eps 1 --minpts 1", &out) == 1);
  CHECK(run_cli("--generate 'uniform(10,3,1)' --eps 1 --algo fof --minpts 4", &out) == 1);
  CHECK(run_cli("--generate 'uniform(10,3,1)' --eps 1 --code-width 48", &out) == 1);
  CHECK(run_cli("--generate 'blobs(1,2,3)' --eps 1", &out) == 1);     // bad generator
  CHECK(run_cli("--generate 'uniform(10,3,1)' --eps 1 --derive-eps 1,1,1", &out) == 1);
  CHECK(run_cli("--generate 'uniform(10,3,1)' --eps 0", &out) == 1);
  CHECK(run_cli("--generate 'uniform(10,3,1)' --derive-eps 0,5,5", &out) == 1);
  CHECK(run_cli("--generate 'uniform(30000,3,1)' --eps 0.1 --verify", &out) == 1); // ceiling
  CHECK(run_cli("--input /nonexistent/points.csv --eps 1", &out) == 2);
  auto bad = write_file("bad_cli.csv", "1,2\n3\n");
  CHECK(run_cli("--input " + bad.string() + " --eps 1", &out) == 2);
}
