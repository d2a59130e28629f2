#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ckm/bench.hpp"
#include "ckm/error.hpp"

using namespace ckm;

namespace {

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, '\t')) out.push_back(f);
  return out;
}

RunSpec small_blobs(const std::string& method) {
  return parse_run_spec(R"({"method": ")" + method + R"(",
    "dataset": {"kind": "blobs", "clusters": 3, "d": 5, "n_per_cluster": 40, "separation": 10},
    "seeds": [0, 1, 2],
    "shallow": {"epochs": 20},
    "deep": {"pretrain_epochs": 3, "joint_epochs": 3, "batch_size": 32, "encoder": [8, 3]}})");
}

}  // namespace

TEST_CASE("run spec parsing") {
  const RunSpec minimal = parse_run_spec(R"({"method": "km", "dataset": {"kind": "twonorm"}})");
  CHECK(minimal.seeds == std::vector<std::uint64_t>{0});
  CHECK(minimal.kmeans.restarts == 10);
  CHECK_FALSE(minimal.timing);

  const RunSpec counted =
      parse_run_spec(R"({"method": "shallow-ckm", "dataset": {"kind": "twonorm"}, "seeds": 15})");
  CHECK(counted.seeds.size() == 15);
  CHECK(counted.seeds.back() == 14);

  const RunSpec deep = parse_run_spec(
      R"({"method": "deep-ckm", "dataset": {"kind": "idx", "images": "a", "labels": "b"},
          "deep": {"encoder": "image", "lambda": 0.5, "centroid_init": "kmeans++"}})");
  CHECK(deep.deep.encoder.widths == MlpSpec::image_encoder().widths);
  CHECK(deep.deep.lambda == 0.5);
  CHECK(deep.deep.centroid_init == CentroidInit::kmeanspp);

  const RunSpec again = parse_run_spec(run_spec_to_json(deep));
  CHECK(run_spec_to_json(again) == run_spec_to_json(deep));

  CHECK_THROWS_AS(parse_run_spec(R"({"method": "dec", "dataset": {"kind": "twonorm"}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_spec(R"({"dataset": {"kind": "twonorm"}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_spec(R"({"method": "km", "dataset": {}, "sedes": 3})"), ConfigError);
  CHECK_THROWS_AS(parse_run_spec(R"({"method": "km", "dataset": {"kind": "twonorm"}, "seeds": []})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_spec("{not json"), ConfigError);
}

TEST_CASE("km recovers separated blobs") {
  const MetricsReport r = run(small_blobs("km"));
  CHECK(r.rows.size() == 3);
  CHECK(r.summary.nmi.mean > 0.99);
  CHECK(r.method == "km");
  CHECK(r.dataset == "blobs");
}

TEST_CASE("every method runs and is deterministic per seed") {
  for (const char* m : {"km", "shallow-ckm", "ae-km", "deep-ckm"}) {
    INFO(m);
    const RunSpec spec = small_blobs(m);
    const std::string a = format_report(run(spec), ReportFormat::tsv);
    const std::string b = format_report(run(spec), ReportFormat::tsv);
    CHECK(a == b);
  }
}

TEST_CASE("worker count does not change results") {
  const RunSpec spec = small_blobs("shallow-ckm");
  ::setenv("CKM_WORKERS", "1", 1);
  CHECK(worker_count() == 1);
  const std::string serial = format_report(run(spec), ReportFormat::tsv);
  ::setenv("CKM_WORKERS", "3", 1);
  CHECK(worker_count() == 3);
  const std::string parallel = format_report(run(spec), ReportFormat::tsv);
  ::unsetenv("CKM_WORKERS");
  CHECK(serial == parallel);
}

TEST_CASE("ae-km and deep-ckm share the pretrained autoencoder") {
  RunSpec spec = small_blobs("ae-km");
  spec.deep.joint_epochs = 1;
  spec.deep.lambda = 0.0;
  spec.deep.joint_lr = 1e-12;
  const Dataset data = load_dataset(spec.dataset);
  const SeedRow ae = run_seed(spec, data, 3, 0);
  spec.method = Method::deep_ckm;
  const SeedRow deep = run_seed(spec, data, 3, 0);
  // A negligible joint phase leaves both methods with the same labels.
  CHECK(deep.nmi == doctest::Approx(ae.nmi));
}

TEST_CASE("tsv report") {
  const MetricsReport r = run(small_blobs("km"));
  const auto ls = lines(format_report(r, ReportFormat::tsv));
  REQUIRE(ls.size() == 5);
  CHECK(ls[0] == "method\tdataset\tseed\tnmi\tari\tacc\tobjective\tseconds");
  const auto row = fields(ls[1]);
  CHECK(row.size() == 8);
  CHECK(row[0] == "km");
  CHECK(row[7] == "NA");
  CHECK(std::stod(row[3]) == r.rows[0].nmi);
  CHECK(fields(ls[4])[2] == "mean±std");

  RunSpec one = small_blobs("km");
  one.seeds = {4};
  one.timing = true;
  const auto single = lines(format_report(run(one), ReportFormat::tsv));
  CHECK(single.size() == 3);
  CHECK(fields(single[1])[7] != "NA");
}

TEST_CASE("aggregates match recomputation") {
  const MetricsReport r = run(small_blobs("shallow-ckm"));
  std::vector<double> nmi, obj;
  for (const auto& row : r.rows) {
    nmi.push_back(row.nmi);
    obj.push_back(row.objective);
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto sd = [&](const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  };
  CHECK(std::abs(r.summary.nmi.mean - mean(nmi)) < 1e-12);
  CHECK(std::abs(r.summary.nmi.std - sd(nmi)) < 1e-12);
  CHECK(std::abs(r.summary.objective.mean - mean(obj)) <= 1e-12 * mean(obj));
  CHECK(std::abs(r.summary.objective.std - sd(obj)) <= 1e-12 * std::max(1.0, mean(obj)));

  CHECK(summarize({2.0}).std == 0.0);
}

TEST_CASE("json report round trip") {
  RunSpec spec = small_blobs("km");
  spec.timing = true;
  const MetricsReport r = run(spec);
  const auto back = reports_from_json(format_report(r, ReportFormat::json));
  REQUIRE(back.size() == 1);
  CHECK(back[0].method == r.method);
  CHECK(back[0].rows.size() == r.rows.size());
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    CHECK(back[0].rows[i].nmi == r.rows[i].nmi);
    CHECK(back[0].rows[i].objective == r.rows[i].objective);
    CHECK(back[0].rows[i].seconds == r.rows[i].seconds);
  }
  CHECK(back[0].summary.ari.std == r.summary.ari.std);
  CHECK(format_report(back[0], ReportFormat::json) == format_report(r, ReportFormat::json));
  CHECK(reports_from_json(format_reports({r, r}, ReportFormat::json)).size() == 2);
}

TEST_CASE("markdown report uses one-decimal percentages") {
  MetricsReport r;
  r.method = "deep-ckm";
  r.dataset = "mnist";
  r.rows = {{0, 0.80, 0.7, 0.9, 1.0, {}}, {1, 0.83, 0.7, 0.9, 1.0, {}}};
  r.summary = aggregate(r.rows);
  const std::string md = format_report(r, ReportFormat::markdown);
  CHECK(md.find("| Method | Dataset | Seeds | NMI | ARI | ACC | Objective |") != std::string::npos);
  // mean 0.815, sample std 0.0212...
  CHECK(md.find("81.5±2.1") != std::string::npos);
  CHECK(md.find("70.0±0.0") != std::string::npos);
}

TEST_CASE("report_emit writes files and reports I/O failures") {
  const auto dir = std::filesystem::temp_directory_path() / "ckm_bench_emit";
  std::filesystem::create_directories(dir);
  const MetricsReport r = run(small_blobs("km"));
  const auto path = (dir / "r.tsv").string();
  report_emit({r}, ReportFormat::tsv, path);
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  CHECK(ss.str() == format_report(r, ReportFormat::tsv));
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(report_emit({r}, ReportFormat::tsv, "/nonexistent-dir/x/r.tsv"), IoError);
}

TEST_CASE("runs without ground truth labels are rejected") {
  const auto path = std::filesystem::temp_directory_path() / "ckm_nolabels.csv";
  {
    std::ofstream os(path);
    os << "1,2\n3,4\n5,6\n";
  }
  RunSpec spec = parse_run_spec(R"({"method": "km", "k": 2, "dataset": {"kind": "csv", "path": ")" +
                                path.string() + R"(", "label_column": null}})");
  CHECK_THROWS_AS(run(spec), InputError);
  std::filesystem::remove(path);
}
