// Batch driver: loads or synthesizes a point set, runs one of the clustering
// implementations, reports counts and phase timings, optionally checks the
// result against the sequential reference, and emits Morton duplicate
// statistics. Exit codes: 0 success, 1 usage error, 2 I/O or parse error,
// 3 verification mismatch.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "spatial/dbscan.hpp"
#include "spatial/generate.hpp"
#include "spatial/io.hpp"
#include "spatial/report.hpp"
#include "spatial/verify.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitVerify = 3;

struct Options {
  std::string input;
  std::string generate_spec;
  std::string format = "csv";
  std::string algo = "fdbscan";
  double eps = 0;
  std::string derive_eps_args;
  std::int32_t min_pts = 2;
  int code_width = 64;
  bool verify = false;
  bool sequential = false;
  bool morton_report = false;
  std::string labels_out;
  std::string report_out;
  std::uint64_t seed = 0;
  std::int64_t oracle_ceiling = 20000;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double parse_derive_eps(const std::string &args) {
  double v[3];
  std::size_t start = 0;
  for (int i = 0; i < 3; ++i) {
    std::size_t comma = args.find(',', start);
    bool last = i == 2;
    if (last != (comma == std::string::npos))
      throw UsageError("--derive-eps expects b,V,n");
    std::string_view field(args.data() + start,
                           (last ? args.size() : comma) - start);
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v[i]);
    if (ec != std::errc{} || ptr != field.data() + field.size())
      throw UsageError("--derive-eps expects three numbers");
    start = comma + 1;
  }
  return spatial::derive_eps(v[0], v[1], v[2]);
}

template <int Dim>
int run_typed(const Options &opt, const spatial::io::PointsData &data, double eps) {
  using namespace spatial;

  auto points = io::to_points<Dim>(data);
  auto span = std::span<const Point<Dim>>(points);
  const auto mode = opt.sequential ? ExecMode::kSequential : ExecMode::kParallel;
  const auto width = opt.code_width == 32 ? CodeWidth::k32 : CodeWidth::k64;
  const DbscanParams params{static_cast<float>(eps), opt.min_pts};

  DbscanOutput output;
  if (opt.algo == "fdbscan")
    output = fdbscan(span, params, mode, width);
  else if (opt.algo == "densebox")
    output = fdbscan_densebox(span, params, mode, width);
  else if (opt.algo == "fof")
    output = friends_of_friends(span, params.eps, mode, width);
  else if (opt.algo == "legacy")
    output = adjacency_graph_dbscan(span, params.eps, mode, width);
  else
    output = dbscan_reference(span, params);

  RunReport report;
  report.n = data.count();
  report.dim = Dim;
  report.eps = eps;
  report.min_pts = opt.min_pts;
  report.algorithm = opt.algo;
  report.code_width = opt.code_width;
  report.timings = output.timings;
  summarize(output, report);
  if (opt.morton_report)
    report.morton = morton_report(data);

  if (!opt.labels_out.empty())
    io::write_labels(opt.labels_out, std::span<const std::int32_t>(output.labels));
  if (!opt.report_out.empty())
    write_report(opt.report_out, report);

  std::printf("n=%lld d=%d eps=%.9g min_pts=%d algo=%s code_width=%d%s\n",
              static_cast<long long>(report.n), report.dim, report.eps, report.min_pts,
              opt.algo.c_str(), opt.code_width, opt.sequential ? " sequential" : "");
  std::printf("clusters=%lld noise=%lld core=%lld\n",
              static_cast<long long>(report.num_clusters),
              static_cast<long long>(report.num_noise), static_cast<long long>(report.num_core));
  if (opt.algo == "densebox")
    std::printf("dense_cells=%lld dense_points=%lld distance_checks=%lld\n",
                static_cast<long long>(output.stats.num_dense_cells),
                static_cast<long long>(output.stats.num_dense_points),
                static_cast<long long>(output.stats.distance_checks));
  std::printf("build=%.3fms core=%.3fms merge=%.3fms finalize=%.3fms total=%.3fms\n",
              output.timings.build_ms, output.timings.core_ms, output.timings.merge_ms,
              output.timings.finalize_ms, output.timings.total_ms());
  if (report.morton) {
    auto put = [](const char *prefix, const morton::MortonStats &stats) {
      std::printf("%s: codes_dup_gt3=%lld points_with_dup=%lld max_dup=%lld\n", prefix,
                  static_cast<long long>(stats.num_codes_duplicated_gt3),
                  static_cast<long long>(stats.num_points_with_duplicate_code),
                  static_cast<long long>(stats.max_same_code_duplicates));
    };
    put("morton32", report.morton->stats32);
    put("morton64", report.morton->stats64);
  }

  if (opt.verify) {
    auto reference = dbscan_reference(span, params);
    auto violation = check_equivalence(span, params.eps, output, reference);
    if (violation) {
      std::printf("verify: MISMATCH: %s\n", violation->c_str());
      return kExitVerify;
    }
    std::printf("verify: OK\n");
  }
  return 0;
}

int run(const Options &opt) {
  using namespace spatial;

  if (opt.format != "csv" && opt.format != "binary")
    throw UsageError("--format must be csv or binary");
  if (opt.algo != "fdbscan" && opt.algo != "densebox" && opt.algo != "fof" &&
      opt.algo != "legacy" && opt.algo != "oracle")
    throw UsageError("--algo must be one of fdbscan, densebox, fof, legacy, oracle");
  if (opt.code_width != 32 && opt.code_width != 64)
    throw UsageError("--code-width must be 32 or 64");
  if (opt.min_pts < 2)
    throw UsageError("--minpts must be at least 2");
  if ((opt.algo == "fof" || opt.algo == "legacy") && opt.min_pts != 2)
    throw UsageError("--algo " + opt.algo + " requires --minpts 2");

  double eps = opt.eps;
  if (!opt.derive_eps_args.empty()) {
    try {
      eps = parse_derive_eps(opt.derive_eps_args);
    } catch (const std::invalid_argument &e) {
      throw UsageError(e.what());
    }
  }
  if (!(eps > 0) || !std::isfinite(eps))
    throw UsageError("eps must resolve to a positive finite value");

  io::PointsData data;
  if (!opt.generate_spec.empty()) {
    try {
      data = generate(parse_generate_spec(opt.generate_spec, opt.seed));
    } catch (const std::invalid_argument &e) {
      throw UsageError(e.what());
    }
  } else {
    data = io::load_points(opt.input,
                           opt.format == "csv" ? io::Format::kCsv : io::Format::kBinary);
  }

  if (opt.verify && data.count() > opt.oracle_ceiling)
    throw UsageError("--verify is limited to " + std::to_string(opt.oracle_ceiling) +
                     " points (got " + std::to_string(data.count()) + ")");

  return data.dim == 2 ? run_typed<2>(opt, data, eps) : run_typed<3>(opt, data, eps);
}

} // namespace

int main(int argc, char **argv) {
  Options opt;
  CLI::App app{"spatial clustering benchmark driver"};
  auto *input = app.add_option("--input", opt.input, "point set file to cluster");
  auto *gen = app.add_option("--generate", opt.generate_spec,
                             "synthesize points: uniform(n,d,extent) or "
                             "gaussian_clusters(n,d,k,sigma,extent,seed)");
  app.add_option("--format", opt.format, "input file format: csv or binary");
  app.add_option("--algo", opt.algo, "fdbscan, densebox, fof, legacy, or oracle");
  auto *eps = app.add_option("--eps", opt.eps, "clustering radius");
  auto *derive =
      app.add_option("--derive-eps", opt.derive_eps_args, "derive eps as b*(V/n)^(1/3) from b,V,n");
  app.add_option("--minpts", opt.min_pts, "minimum neighborhood size for a core point");
  app.add_option("--code-width", opt.code_width, "Morton code width: 32 or 64");
  app.add_flag("--verify", opt.verify, "check the result against the sequential reference");
  app.add_flag("--sequential", opt.sequential, "force sequential execution everywhere");
  app.add_option("--labels-out", opt.labels_out, "write per-point labels (one per line, -1 noise)");
  app.add_option("--report-out", opt.report_out, "write the run report as key=value lines");
  app.add_flag("--morton-report", opt.morton_report,
               "add 32- vs 64-bit Morton duplicate statistics to the report");
  app.add_option("--seed", opt.seed, "seed for --generate");
  app.add_option("--oracle-ceiling", opt.oracle_ceiling,
                 "largest point count --verify will accept");
  input->excludes(gen);
  gen->excludes(input);
  eps->excludes(derive);
  derive->excludes(eps);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (opt.input.empty() == opt.generate_spec.empty()) {
    std::cerr << "exactly one of --input or --generate is required\n";
    return kExitUsage;
  }
  if ((eps->count() == 0) == (derive->count() == 0)) {
    std::cerr << "exactly one of --eps or --derive-eps is required\n";
    return kExitUsage;
  }

  try {
    return run(opt);
  } catch (const UsageError &e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const spatial::io::LoadError &e) {
    std::cerr << e.what() << '\n';
    return kExitIo;
  } catch (const spatial::CapacityError &e) {
    std::cerr << "adjacency graph exceeds memory capacity: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument &e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception &e) {
    std::cerr << e.what() << '\n';
    return kExitIo;
  }
}
