#pragma once

// Multi-seed benchmark harness: one RunSpec names a method, a dataset and
// the hyperparameters; run() executes every seed independently and scores
// the hard labels against the ground truth.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ckm/data.hpp"
#include "ckm/deep.hpp"
#include "ckm/kmeans.hpp"
#include "ckm/metrics.hpp"
#include "ckm/shallow.hpp"

namespace ckm {

enum class Method { km, shallow_ckm, ae_km, deep_ckm };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

struct DatasetSpec {
  /// csv | idx | twonorm | blobs | embedded_blobs
  std::string kind = "csv";
  std::string name;

  // csv
  std::string path;
  char delimiter = ',';
  std::optional<int> label_column = -1;
  bool header = false;

  // idx
  std::string images;
  std::string labels;
  std::optional<std::size_t> limit;

  // generators
  std::size_t n = 7400;
  std::size_t d = 20;
  std::size_t clusters = 4;
  std::size_t n_per_cluster = 100;
  double separation = 10.0;
  double spread = 1.0;
  double noise = 0.1;
  std::size_t intrinsic_dim = 10;
  std::uint64_t seed = 0;

  /// Defaults to true for delimited and generated data, false for images.
  std::optional<bool> standardize;

  std::string display_name() const;
};

struct RunSpec {
  Method method = Method::km;
  DatasetSpec dataset;
  /// Defaults to the number of classes in the labels.
  std::optional<std::size_t> k;
  std::vector<std::uint64_t> seeds{0};
  ShallowConfig shallow;
  TrainConfig deep;
  LloydConfig kmeans;
  NmiNormalization nmi_norm = NmiNormalization::geometric;
  /// Record wall time per seed. Off by default so reports are reproducible byte for byte.
  bool timing = false;
  /// When set, deep-ckm writes one checkpoint per seed here.
  std::string checkpoint_dir;

  void validate() const;
};

RunSpec parse_run_spec(const std::string& json_text);
RunSpec load_run_spec(const std::string& path);
std::string run_spec_to_json(const RunSpec& spec);

/// Loads and preprocesses (standardises, when enabled) the dataset.
Dataset load_dataset(const DatasetSpec& spec);

struct SeedRow {
  std::uint64_t seed = 0;
  double nmi = 0.0;
  double ari = 0.0;
  double acc = 0.0;
  double objective = 0.0;
  std::optional<double> seconds;
};

struct Stat {
  double mean = 0.0;
  /// Sample standard deviation (n - 1); 0 for a single row.
  double std = 0.0;
};

struct Aggregate {
  Stat nmi, ari, acc, objective;
  std::optional<Stat> seconds;
};

Stat summarize(const std::vector<double>& values);
Aggregate aggregate(const std::vector<SeedRow>& rows);

struct MetricsReport {
  std::string method;
  std::string dataset;
  std::vector<SeedRow> rows;
  Aggregate summary;
};

/// Runs every seed, in parallel over a worker pool (CKM_WORKERS overrides the
/// pool size). `data` may be passed to skip loading.
MetricsReport run(const RunSpec& spec, const Dataset* data = nullptr);

/// Result of one seed; exposed for tests and the Python module.
SeedRow run_seed(const RunSpec& spec, const Dataset& data, std::size_t k, std::uint64_t seed);

enum class ReportFormat { tsv, json, markdown };

ReportFormat report_format_from_string(const std::string& name);
std::string extension(ReportFormat fmt);

std::string format_reports(const std::vector<MetricsReport>& reports, ReportFormat fmt);
std::string format_report(const MetricsReport& report, ReportFormat fmt);
void report_emit(const std::vector<MetricsReport>& reports, ReportFormat fmt,
                 const std::string& path);

/// Parses the JSON rendering (one report object or an array of them).
std::vector<MetricsReport> reports_from_json(const std::string& text);

/// Worker count: CKM_WORKERS when set, else hardware concurrency.
std::size_t worker_count();

}  // namespace ckm
